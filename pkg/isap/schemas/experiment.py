import copy
import hashlib
import json
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from isap.core.errors import ConfigError


class ExperimentKind(str, Enum):
    SPEED = "speed"
    MAP = "map"


class ModelKind(str, Enum):
    COVERNET = "covernet"
    POSTCOVERNET = "postcovernet"
    ISAP = "isap"
    ENSEMBLE = "ensemble"


class MapKind(str, Enum):
    STRAIGHT = "straight"
    INTERSECTION = "intersection"
    MULTILANE = "multilane"
    ROUNDABOUT = "roundabout"


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ExperimentSection(Section):
    kind: ExperimentKind = ExperimentKind.SPEED
    seed: int = Field(0, ge=0)
    seeds: List[int] = Field(default_factory=list)
    scale: float = Field(0.1, gt=0, le=10)
    models: List[ModelKind] = Field(default_factory=lambda: list(ModelKind))
    output_dir: str = "runs"

    @field_validator("models")
    def validate_models(cls, v):
        if not v:
            raise ValueError("At least one model kind is required")
        if len(set(v)) != len(v):
            raise ValueError("Model kinds must be unique")
        return v

    @field_validator("seeds")
    def validate_seeds(cls, v):
        if any(s < 0 for s in v):
            raise ValueError("Seeds cannot be negative")
        if len(set(v)) != len(v):
            raise ValueError("Seeds must be unique")
        return v


class GeneratorSection(Section):
    past_len: int = Field(5, ge=2, le=20)
    dt: float = Field(0.5, gt=0)
    speed_window: int = Field(3, ge=2)
    threshold: float = Field(10.0, gt=0)
    map_mixture: Dict[MapKind, float] = Field(
        default_factory=lambda: {
            MapKind.STRAIGHT: 0.4,
            MapKind.INTERSECTION: 0.3,
            MapKind.MULTILANE: 0.3,
        }
    )
    id_speed_mean: float = 3.0
    id_speed_std: float = Field(2.0, gt=0)
    ood_speed_mean: float = 12.0
    ood_speed_std: float = Field(3.0, gt=0)
    v_max: float = Field(30.0, gt=0)
    stop_fraction: float = Field(0.2, ge=0, le=1)
    max_neighbors: int = Field(4, ge=0, le=16)
    neighbor_rate: float = Field(2.0, ge=0)
    position_noise: float = Field(0.05, ge=0, le=0.05)
    speed_noise: float = Field(0.1, ge=0)
    curvature_noise: float = Field(0.005, ge=0)
    leak_fraction: float = Field(0.15, ge=0, le=1)

    @field_validator("map_mixture")
    def validate_mixture(cls, v):
        if not v or sum(v.values()) <= 0:
            raise ValueError("Map-kind mixture must have positive total weight")
        if any(w < 0 for w in v.values()):
            raise ValueError("Map-kind weights cannot be negative")
        if MapKind.ROUNDABOUT in v:
            raise ValueError("Roundabouts are reserved for out-of-distribution scenes")
        return v

    @model_validator(mode="after")
    def validate_window(self):
        if self.speed_window > self.past_len:
            raise ValueError("speed_window cannot exceed past_len")
        if self.id_speed_mean < 0 or self.ood_speed_mean < 0:
            raise ValueError("Speeds cannot be negative")
        return self

    def speed_threshold(self) -> float:
        """Distance threshold for the heuristic window; 10 m is defined for a 1 s window."""
        return self.threshold * (self.speed_window - 1) * self.dt


class RasterSection(Section):
    size: int = Field(64, ge=32, le=512)
    extent: float = Field(40.0, gt=0)

    @field_validator("size")
    def validate_size(cls, v):
        if v & (v - 1):
            raise ValueError("Raster size must be a power of two")
        return v

    @property
    def meters_per_pixel(self) -> float:
        return self.extent / self.size


class AnchorSection(Section):
    count: int = Field(64, ge=1)
    max_iter: int = Field(200, ge=1)
    tol: float = Field(1e-6, gt=0)
    max_refits: int = Field(5, ge=0)


class ModelSection(Section):
    latent_dim: int = Field(4, ge=1)
    flow_layers: int = Field(8, ge=0)
    log_budget: float = 6.0
    head_hidden: int = Field(256, ge=8)
    single_head_hidden: int = Field(1024, ge=8)

    @property
    def budget(self) -> float:
        return math.exp(self.log_budget)


class LossConfig(Section):
    lambda_agent: float = Field(1.0, ge=0)
    lambda_map: float = Field(1.0, ge=0)
    lambda_sc: float = Field(10.0, ge=0)
    kl_scale: float = Field(1e-5, gt=0)


class TrainingSection(Section):
    epochs: int = Field(25, ge=1)
    batch_size: int = Field(16, ge=2)
    lr: float = Field(1e-3, gt=0)
    weight_decay: float = Field(5e-4, ge=0)
    isap_epochs: Optional[int] = Field(None, ge=1)
    isap_select_best: bool = False

    def epochs_for(self, kind: ModelKind) -> int:
        if kind == ModelKind.ISAP and self.isap_epochs is not None:
            return self.isap_epochs
        return self.epochs


class EnsembleSection(Section):
    members: int = Field(10, ge=2)
    eval_sizes: List[int] = Field(default_factory=lambda: [5, 10])

    @model_validator(mode="after")
    def validate_sizes(self):
        if not self.eval_sizes:
            raise ValueError("At least one ensemble size is required")
        if any(n < 2 or n > self.members for n in self.eval_sizes):
            raise ValueError(f"Ensemble sizes must lie in [2, {self.members}]")
        return self


class EvaluationSection(Section):
    ece_bins: int = Field(10, ge=1)
    top_k: List[int] = Field(default_factory=lambda: [1, 5, 10, 15])
    histogram_bins: int = Field(20, ge=2)


class ExperimentConfig(Section):
    experiment: ExperimentSection = Field(default_factory=ExperimentSection)
    generator: GeneratorSection = Field(default_factory=GeneratorSection)
    raster: RasterSection = Field(default_factory=RasterSection)
    anchors: AnchorSection = Field(default_factory=AnchorSection)
    model: ModelSection = Field(default_factory=ModelSection)
    loss: LossConfig = Field(default_factory=LossConfig)
    training: TrainingSection = Field(default_factory=TrainingSection)
    ensemble: EnsembleSection = Field(default_factory=EnsembleSection)
    evaluation: EvaluationSection = Field(default_factory=EvaluationSection)

    @model_validator(mode="after")
    def validate_top_k(self):
        if any(k < 1 or k > self.anchors.count for k in self.evaluation.top_k):
            raise ValueError(f"top_k entries must lie in [1, {self.anchors.count}]")
        return self

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")

    def canonical_json(self) -> str:
        """Sorted compact JSON of every setting that affects results (the output location does not)."""
        echo = self.echo()
        echo["experiment"].pop("output_dir")
        return json.dumps(echo, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def for_seed(self, seed: int, output_dir: str) -> "ExperimentConfig":
        experiment = self.experiment.model_copy(update={"seed": seed, "seeds": [], "output_dir": output_dir})
        return self.model_copy(update={"experiment": experiment})

    def sweep(self) -> List["ExperimentConfig"]:
        """One single-seed config per entry of `seeds`; a multi-seed sweep writes each run to
        <output_dir>/seed_<n>."""
        seeds = self.experiment.seeds or [self.experiment.seed]
        if len(seeds) == 1:
            return [self.for_seed(seeds[0], self.experiment.output_dir)]
        root = Path(self.experiment.output_dir)
        return [self.for_seed(s, str(root / f"seed_{s}")) for s in seeds]


# On the map split ISAP trains longer with equal decoder weights and keeps its best validation epoch.
EXPERIMENT_DEFAULTS: Dict[ExperimentKind, Dict[str, Any]] = {
    ExperimentKind.SPEED: {},
    ExperimentKind.MAP: {
        "loss": {"lambda_sc": 1.0},
        "training": {"isap_epochs": 50, "isap_select_best": True},
    },
}


def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def build_config(raw: Optional[Dict[str, Any]] = None, overrides: Optional[Dict[str, Any]] = None,
                 defaults: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Experiment-kind defaults, then process defaults, then the file contents, then command-line overrides."""
    raw = _merge(_merge(defaults or {}, raw or {}), {"experiment": overrides} if overrides else {})
    try:
        kind = ExperimentKind(raw.get("experiment", {}).get("kind", ExperimentKind.SPEED.value))
    except ValueError as e:
        raise ConfigError(detail=str(e))
    return ExperimentConfig.model_validate(_merge(EXPERIMENT_DEFAULTS[kind], raw))


def load_config(path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None,
                defaults: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    raw: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "rb") as f:
                raw = tomllib.load(f)
        except (OSError, tomllib.TOMLDecodeError) as e:
            raise ConfigError(detail=f"cannot read config {path}: {e}")
    return build_config(raw, {k: v for k, v in (overrides or {}).items() if v is not None}, defaults)
