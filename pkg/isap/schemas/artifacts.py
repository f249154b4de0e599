from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator


class ArtifactKind(str, Enum):
    DATASET = "dataset"
    ANCHORS = "anchors"
    CHECKPOINT = "checkpoint"


class PayloadDtype(str, Enum):
    FLOAT32 = "<f4"
    FLOAT64 = "<f8"


class LayoutField(BaseModel):
    name: str = Field(..., min_length=1)
    offset: int = Field(..., ge=0)
    length: int = Field(..., ge=0)
    shape: Optional[List[int]] = None


class Manifest(BaseModel):
    kind: ArtifactKind
    dtype: PayloadDtype
    layout: List[LayoutField] = Field(default_factory=list)
    record_width: int = Field(..., ge=0)
    count: int = Field(..., ge=0)
    counts: Dict[str, int] = Field(default_factory=dict)
    config: Dict[str, Any] = Field(default_factory=dict)
    config_hash: str
    payload_sha256: str = ""
    payload_bytes: int = Field(0, ge=0)
    inputs: Dict[str, str] = Field(default_factory=dict)
    metadata: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("layout")
    def validate_layout(cls, v):
        offset = 0
        for entry in v:
            if entry.offset != offset:
                raise ValueError(f"Layout field {entry.name} starts at {entry.offset}, expected {offset}")
            offset += entry.length
        return v

    @property
    def itemsize(self) -> int:
        return 4 if self.dtype == PayloadDtype.FLOAT32 else 8

    @property
    def expected_bytes(self) -> int:
        return self.record_width * self.count * self.itemsize

    def layout_field(self, name: str) -> LayoutField:
        for entry in self.layout:
            if entry.name == name:
                return entry
        raise KeyError(name)

