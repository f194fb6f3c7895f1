"""
Experiment configuration: pydantic models, JSON Schema validation and loading.
"""
import hashlib
import logging
from pathlib import Path
from typing import Annotated, Any, Dict, List, Optional, Union

import jsonschema
import ujson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from coherentfl.config import OUTPUT_DIR
from coherentfl.schemas.models import FillStrategy, PartitionMode, Scheme, TrainConfig
from coherentfl.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PoolConfig(_Section):
    """Device pool and per-round cohort sizes."""

    n_static: int = Field(default=5, ge=0)
    n_dynamic: int = Field(default=5, ge=0)
    k_static: Optional[int] = Field(default=None, ge=0)
    k_total: Optional[int] = Field(default=None, ge=1)
    coherence_times: Optional[List[int]] = None
    dataset_sizes: Optional[List[int]] = None

    @model_validator(mode="after")
    def _check(self):
        if self.n_static + self.n_dynamic < 1:
            raise ValueError("the pool needs at least one device")
        if self.coherence_times is not None and len(self.coherence_times) != self.n_dynamic:
            raise ValueError("coherence_times must list one value per dynamic device")
        return self

    @property
    def static_per_round(self) -> int:
        return self.n_static if self.k_static is None else self.k_static

    @property
    def devices_per_round(self) -> int:
        return self.n_static + self.n_dynamic if self.k_total is None else self.k_total


class FrameConfig(_Section):
    """Pilot overhead target or explicit coherence time, and placement options."""

    lambda_target: Optional[float] = Field(default=0.2, ge=0, lt=1)
    t_k: Optional[int] = Field(default=None, ge=2)
    flexible_placement: bool = False
    fresh_block_full_decode: bool = False
    offset: int = Field(default=0, ge=0)


class DatasetConfig(_Section):
    kind: str = Field(default="synthetic", pattern="^(synthetic|quadratic|idx)$")
    n: int = Field(default=2000, ge=2)
    features: int = Field(default=10, ge=1)
    classes: int = Field(default=4, ge=1)
    separation: float = Field(default=3.0, ge=0)
    spread: float = Field(default=1.0, ge=0)
    partition: PartitionMode = PartitionMode.LABEL_SHARD
    shards_per_device: int = Field(default=2, ge=1)
    test_fraction: float = Field(default=0.2, gt=0, lt=1)
    normalize: bool = True
    images_path: Optional[str] = None
    labels_path: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "idx" and not (self.images_path and self.labels_path):
            raise ValueError("idx datasets need images_path and labels_path")
        return self


class ModelConfig(_Section):
    kind: str = Field(default="logistic", pattern="^(logistic|mlp|quadratic)$")
    hidden: int = Field(default=16, ge=1)
    l2: float = Field(default=1e-3, ge=0)
    condition: float = Field(default=4.0, ge=1)


class ValidationConfig(_Section):
    """Grids and trial counts of the PHY validation suite."""

    antennas: List[int] = Field(default_factory=lambda: [2, 8, 20])
    pilot_powers: List[float] = Field(default_factory=lambda: [0.5, 1.0, 10.0])
    noise_var: float = Field(default=1.0, gt=0)
    trials: int = Field(default=100_000, ge=100)
    grid_antennas: List[int] = Field(default_factory=lambda: [1, 2, 4])
    grid_coherence: List[int] = Field(default_factory=lambda: [8, 12, 24])
    grid_rho: List[float] = Field(default_factory=lambda: [1.0, 10.0, 100.0])
    grid_points: int = Field(default=10_000, ge=10)
    relative_tolerance: float = Field(default=0.02, gt=0)


class SweepConfig(_Section):
    antennas: List[int] = Field(default_factory=lambda: [2])
    coherence: List[int] = Field(default_factory=lambda: [6])
    rho: List[float] = Field(default_factory=lambda: [1.0])
    trials: int = Field(default=10_000, ge=1)


class CompareConfig(_Section):
    """Scheme comparison and the pilot overhead by SNR grid it can be swept over."""

    target_accuracy: Optional[float] = Field(default=None, gt=0, le=1)
    seeds: int = Field(default=1, ge=1)
    lambda_grid: List[Annotated[float, Field(ge=0, lt=1)]] = Field(
        default_factory=lambda: [0.1, 0.2, 0.3, 0.4], min_length=1
    )
    snr_db_grid: List[float] = Field(default_factory=lambda: [0.0, 10.0, 20.0], min_length=1)


class ExperimentConfig(_Section):
    """Everything one command needs; SNR is in dB with unit noise variance."""

    seed: int = Field(default=0, ge=0, lt=2**64)
    antennas: int = Field(default=4, ge=1)
    snr_db: float = 20.0
    scheme: Scheme = Scheme.PRODUCT_SUPERPOSITION
    fill_strategy: FillStrategy = FillStrategy.PLMF
    tau: int = Field(default=5, ge=1)
    eta_local: float = Field(default=0.05, gt=0)
    batch_size: int = Field(default=16, ge=1)
    rounds: int = Field(default=30, ge=1)
    constant_probes: int = Field(default=4, ge=1)
    constant_trials: int = Field(default=20, ge=1)
    pool: PoolConfig = Field(default_factory=PoolConfig)
    frame: FrameConfig = Field(default_factory=FrameConfig)
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    validation: ValidationConfig = Field(default_factory=ValidationConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    compare: CompareConfig = Field(default_factory=CompareConfig)
    output_dir: str = OUTPUT_DIR

    @property
    def noise_var(self) -> float:
        return 1.0

    @property
    def snr_linear(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            tau=self.tau,
            eta_local=self.eta_local,
            batch_size=self.batch_size,
            rounds=self.rounds,
            fill_strategy=self.fill_strategy,
            scheme=self.scheme,
        )

    def canonical(self) -> Dict[str, Any]:
        """Resolved configuration without process-specific fields."""
        return self.model_dump(mode="json", exclude={"output_dir"})

    def config_hash(self) -> str:
        payload = ujson.dumps(self.canonical(), sort_keys=True, ensure_ascii=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


CONFIG_SCHEMA = ExperimentConfig.model_json_schema()


def _set_path(document: Dict[str, Any], dotted: str, value: Any) -> None:
    node = document
    *parents, leaf = dotted.split(".")
    for key in parents:
        node = node.setdefault(key, {})
    node[leaf] = value


def parse_config(
    document: Optional[Dict[str, Any]] = None, overrides: Optional[Dict[str, Any]] = None
) -> ExperimentConfig:
    """
    Validate a configuration document against the schema and build the model.

    ``overrides`` maps dotted paths (``frame.lambda_target``) onto values and wins over the file.
    """
    document = dict(document or {})
    for path, value in (overrides or {}).items():
        if value is not None:
            _set_path(document, path, value)
    try:
        jsonschema.validate(instance=document, schema=CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        location = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigurationError(f"Invalid configuration at {location}: {e.message}")
    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid configuration: {e.errors()[0]['msg']}")


def load_config(
    path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None
) -> ExperimentConfig:
    """Read a JSON configuration file (or defaults when no path is given)."""
    document: Dict[str, Any] = {}
    if path is not None:
        try:
            document = ujson.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigurationError(f"Configuration file {path} not found")
        except ValueError as e:
            raise ConfigurationError(f"Configuration file {path} is not valid JSON: {e}")
        if not isinstance(document, dict):
            raise ConfigurationError("Configuration root must be a JSON object")
    config = parse_config(document, overrides)
    logger.info(f"Loaded configuration {config.config_hash()[:12]}")
    return config
