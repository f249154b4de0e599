import math
from typing import List, Optional

from pydantic import BaseModel, Field, model_validator

UNIT_INTERVAL_PREFIXES = ("conf_auroc", "conf_apr", "ood_auroc", "ood_apr", "ece")
NONNEGATIVE_PREFIXES = ("minADE", "FDE", "brier", "alpha0", "entropy_categorical")


class MetricRow(BaseModel):
    name: str = Field(..., min_length=1)
    id_value: Optional[float] = None
    ood_value: Optional[float] = None

    @model_validator(mode="after")
    def validate_range(self):
        for value in (self.id_value, self.ood_value):
            if value is None:
                continue
            if not math.isfinite(value):
                raise ValueError(f"{self.name}: metric values must be finite")
            if self.name.startswith(UNIT_INTERVAL_PREFIXES) and not 0.0 <= value <= 1.0:
                raise ValueError(f"{self.name}: {value} outside [0, 1]")
            if self.name.startswith(NONNEGATIVE_PREFIXES) and value < 0.0:
                raise ValueError(f"{self.name}: {value} is negative")
        return self


class HistogramRow(BaseModel):
    entropy: str
    bin_low: float
    bin_high: float
    id_count: int = Field(..., ge=0)
    ood_count: int = Field(..., ge=0)


class Provenance(BaseModel):
    config_hash: str
    dataset_hash: str
    anchor_hash: str
    checkpoint_hash: str


class EvalReport(BaseModel):
    name: str
    experiment: str
    rows: List[MetricRow] = Field(default_factory=list)
    histograms: List[HistogramRow] = Field(default_factory=list)
    provenance: Provenance

    def value(self, metric: str, column: str = "id_value") -> Optional[float]:
        for row in self.rows:
            if row.name == metric:
                return getattr(row, column)
        return None


class SampleRow(BaseModel):
    split: str
    seed: int
    speed: float
    true_anchor: int
    predicted_anchor: int
    max_prob: float
    alpha0: Optional[float] = None
    alpha0_agent: Optional[float] = None
    alpha0_map: Optional[float] = None
    alpha0_social: Optional[float] = None
    ensemble_score: Optional[float] = None
    entropy_categorical: float
    entropy_dirichlet: Optional[float] = None
