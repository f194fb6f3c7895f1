"""
Pydantic models for the simulator's domain types.
"""
from enum import Enum, IntEnum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Coherence time used for static devices: longer than any frame the simulator builds.
STATIC_COHERENCE = 2**31 - 1


class DeviceClass(str, Enum):
    """Mobility class of a device."""
    STATIC = "static"
    DYNAMIC = "dynamic"


class Scheme(str, Enum):
    """Downlink signaling scheme."""
    CONVENTIONAL = "conventional"
    PRODUCT_SUPERPOSITION = "product_superposition"
    ADDITIVE_SUPERPOSITION = "additive_superposition"


class FillStrategy(str, Enum):
    """How a dynamic device fills parameters it did not receive."""
    ZF = "zf"
    PLMF = "plmf"


class Purpose(IntEnum):
    """Logical purpose of a derived random stream."""
    CHANNEL = 0
    NOISE = 1
    SGD = 2
    SCHEDULE = 3
    SYMBOLS = 4
    PROBE = 5
    DATA = 6


class PartitionMode(str, Enum):
    """Federated data partitioning."""
    IID = "iid"
    LABEL_SHARD = "label-shard"


class SeededRng(BaseModel):
    """
    A reproducible random stream.

    Identical ``(seed, stream_id)`` pairs always yield identical draw sequences.
    """
    model_config = ConfigDict(frozen=True)

    seed: int = Field(ge=0, lt=2**64)
    stream_id: int = Field(default=0, ge=0, lt=2**64)

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(sequence))

    def stream(self, device: int, round_index: int, purpose: Purpose) -> "SeededRng":
        """Derive the stream for one (device, round, purpose) triple."""
        if device < 0 or device >= 2**31 or round_index < 0 or round_index >= 2**24:
            raise ValueError(f"Stream coordinates out of range: ({device}, {round_index})")
        stream_id = ((device + 1) << 32) | (round_index << 8) | int(purpose)
        return SeededRng(seed=self.seed, stream_id=stream_id)


class DeviceProfile(BaseModel):
    """A device in the pool: identity, mobility class, coherence time and dataset size."""
    model_config = ConfigDict(frozen=True)

    id: int = Field(ge=0)
    device_class: DeviceClass
    coherence_time: int = Field(default=STATIC_COHERENCE, ge=1)
    dataset_size: int = Field(default=0, ge=0)

    @model_validator(mode="before")
    @classmethod
    def _static_sentinel(cls, data):
        if isinstance(data, dict) and data.get("device_class") in (DeviceClass.STATIC, "static"):
            data = {**data, "coherence_time": STATIC_COHERENCE}
        return data

    @property
    def is_static(self) -> bool:
        return self.device_class == DeviceClass.STATIC


class CoherenceSchedule(BaseModel):
    """Block boundaries (slot indices) of one device's channel over a downlink frame."""
    model_config = ConfigDict(frozen=True)

    device_id: int
    coherence_time: int = Field(ge=1)
    frame_len: int = Field(ge=1)
    offset: int = Field(default=0, ge=0)
    boundaries: Tuple[int, ...]

    @model_validator(mode="after")
    def _check_boundaries(self):
        b = self.boundaries
        if not b or b[0] != 0:
            raise ValueError("boundaries must start at slot 0")
        steps = np.diff(np.asarray(b + (self.frame_len,)))
        if np.any(steps <= 0):
            raise ValueError("boundaries must be strictly increasing inside the frame")
        # Interior blocks span exactly one coherence time; the first may be shortened by the
        # offset and the last by the frame end.
        interior = np.diff(np.asarray(b))[1:] if self.offset else np.diff(np.asarray(b))
        if np.any(interior != self.coherence_time):
            raise ValueError("interior blocks must span exactly one coherence time")
        return self

    def blocks(self) -> List[range]:
        edges = list(self.boundaries) + [self.frame_len]
        return [range(start, stop) for start, stop in zip(edges[:-1], edges[1:])]


class Cohort(BaseModel):
    """Devices scheduled for one round; dynamic members sorted by descending coherence time."""
    model_config = ConfigDict(frozen=True)

    static: Tuple[DeviceProfile, ...] = ()
    dynamic: Tuple[DeviceProfile, ...] = ()

    @property
    def devices(self) -> Tuple[DeviceProfile, ...]:
        return tuple(sorted(self.static + self.dynamic, key=lambda p: p.id))

    @property
    def t_k(self) -> Optional[int]:
        """Smallest dynamic coherence time, ``None`` when no dynamic device is scheduled."""
        return self.dynamic[-1].coherence_time if self.dynamic else None


class FrameLayout(BaseModel):
    """Pilot-bearing and orphan (undecodable for dynamic devices) slots of one frame."""
    model_config = ConfigDict(frozen=True)

    frame_len: int = Field(ge=1)
    m: int = Field(ge=1)
    t_k: Optional[int] = None
    pilot_starts: Tuple[int, ...] = ()
    orphan_ranges: Tuple[Tuple[int, int], ...] = ()

    def pilot_slot_mask(self) -> np.ndarray:
        mask = np.zeros(self.frame_len, dtype=bool)
        for start in self.pilot_starts:
            mask[start:min(start + self.m, self.frame_len)] = True
        return mask

    def orphan_slot_mask(self) -> np.ndarray:
        mask = np.zeros(self.frame_len, dtype=bool)
        for start, stop in self.orphan_ranges:
            mask[start:stop] = True
        return mask

    @property
    def pilot_overhead(self) -> float:
        return float(self.pilot_slot_mask().sum()) / self.frame_len


class SymbolEmbedding(BaseModel):
    """Parameter matrices of one sub-block built from model symbols."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    pilot_params: np.ndarray
    data_params: np.ndarray
    mixing: np.ndarray

    @property
    def spreading(self) -> np.ndarray:
        """Unit-norm spreading vectors of the data slots, one column per slot."""
        m = self.mixing.shape[0]
        cols = np.arange(self.data_params.shape[-1]) % m
        return self.mixing[:, cols]


class SubBlockFrame(BaseModel):
    """One length-T_K transmission unit with its pilot/data parameter matrices and powers."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    pilot: np.ndarray
    pilot_phase_params: np.ndarray
    data_phase_params: np.ndarray
    rho_p: float = Field(ge=0)
    rho_d: float = Field(ge=0)
    scheme: Scheme = Scheme.PRODUCT_SUPERPOSITION

    @model_validator(mode="after")
    def _check_dims(self):
        m = self.pilot.shape[0]
        if self.pilot.shape != (m, m) or self.pilot_phase_params.shape != (m, m):
            raise ValueError("pilot and pilot-phase parameters must be M x M")
        if self.data_phase_params.ndim != 2 or self.data_phase_params.shape[0] != m:
            raise ValueError("data-phase parameters must be M x (T_K - M)")
        return self

    @property
    def t_k(self) -> int:
        return self.pilot.shape[0] + self.data_phase_params.shape[1]


class VirtualChannelEstimate(BaseModel):
    """MMSE estimate of the virtual channel and its error energy."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    estimate: np.ndarray
    error_variance: float

    @model_validator(mode="after")
    def _check_variance(self):
        m = self.estimate.shape[-1]
        if not 0.0 <= self.error_variance <= m:
            raise ValueError(f"error variance {self.error_variance} outside [0, {m}]")
        return self

    @property
    def m(self) -> int:
        return self.estimate.shape[-1]


class DataDecodeResult(BaseModel):
    """Per-slot soft symbol estimates of a data phase."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    symbols: np.ndarray
    erased: np.ndarray
    effective_noise_var: float


class PowerAllocation(BaseModel):
    """Pilot/data powers of a frame and the budget they were derived from."""
    model_config = ConfigDict(frozen=True)

    rho_p: float = Field(ge=0)
    rho_d: float = Field(ge=0)
    rho_total: float = Field(gt=0)
    t_k: int = Field(ge=1)
    m: int = Field(ge=1)
    noise_var: float = Field(gt=0)
    orthogonal: bool = False

    def sub_block_energy(self) -> float:
        """Energy one sub-block spends under its frame's power accounting."""
        if self.orthogonal:
            return self.rho_p * self.m + self.rho_d * (self.t_k - self.m)
        return self.m * (self.rho_p + self.rho_d * (self.t_k - self.m))

    @model_validator(mode="after")
    def _check_budget(self):
        if self.sub_block_energy() > self.rho_total * self.t_k + 1e-9:
            raise ValueError("allocation exceeds the power budget")
        return self


class RateEstimate(BaseModel):
    """Monte Carlo rate estimate in bits per slot."""
    model_config = ConfigDict(frozen=True)

    mean: float
    stderr: float
    trials: int


class FramePowerReport(BaseModel):
    """Outcome of a frame power-constraint check."""
    model_config = ConfigDict(frozen=True)

    ok: bool
    slack: float
    excess: float


class MaskBits(BaseModel):
    """Diagonal of the binary masking matrix: True where a parameter was received."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    bits: np.ndarray

    @field_validator("bits", mode="before")
    @classmethod
    def _as_bool(cls, value):
        return np.asarray(value, dtype=bool)

    @property
    def d(self) -> int:
        return int(self.bits.size)

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())

    @property
    def missing(self) -> np.ndarray:
        return ~self.bits

    @classmethod
    def full(cls, d: int) -> "MaskBits":
        return cls(bits=np.ones(d, dtype=bool))


class DownlinkNoiseSpec(BaseModel):
    """Per-parameter downlink noise variances of static and dynamic devices."""
    model_config = ConfigDict(frozen=True)

    sigma2_static: float = Field(ge=0)
    sigma2_dynamic: float

    @model_validator(mode="after")
    def _check_order(self):
        if not self.sigma2_static < self.sigma2_dynamic:
            raise ValueError("static noise must be strictly below dynamic noise")
        return self

    def for_class(self, device_class: DeviceClass) -> float:
        if device_class == DeviceClass.STATIC:
            return self.sigma2_static
        return self.sigma2_dynamic


class ReceivedModel(BaseModel):
    """A broadcast model as decoded by one device: values on the received support only."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray
    mask: MaskBits

    @model_validator(mode="after")
    def _check_support(self):
        if self.values.shape != (self.mask.popcount,):
            raise ValueError("received values must cover exactly the mask support")
        return self


class DeviceState(BaseModel):
    """Per-device memory carried between rounds."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    profile: DeviceProfile
    prev_local: np.ndarray


class TrainConfig(BaseModel):
    """Federated training hyper-parameters."""
    model_config = ConfigDict(frozen=True)

    tau: int = Field(default=5, ge=1)
    eta_local: float = Field(default=0.05, gt=0)
    batch_size: int = Field(default=16, ge=1)
    rounds: int = Field(default=30, ge=1)
    fill_strategy: FillStrategy = FillStrategy.PLMF
    scheme: Scheme = Scheme.PRODUCT_SUPERPOSITION


class Dataset(BaseModel):
    """Feature matrix with integer class labels."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    features: np.ndarray
    labels: np.ndarray
    classes: int = Field(ge=1)

    @field_validator("features", mode="before")
    @classmethod
    def _as_float(cls, value):
        return np.atleast_2d(np.asarray(value, dtype=np.float64))

    @field_validator("labels", mode="before")
    @classmethod
    def _as_int(cls, value):
        return np.asarray(value, dtype=np.int64).reshape(-1)

    @model_validator(mode="after")
    def _check(self):
        if self.features.shape[0] < 1:
            raise ValueError("dataset must hold at least one sample")
        if self.labels.shape[0] != self.features.shape[0]:
            raise ValueError("labels and features disagree on the sample count")
        if self.labels.min() < 0 or self.labels.max() >= self.classes:
            raise ValueError("labels outside [0, classes)")
        return self

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def p(self) -> int:
        return int(self.features.shape[1])

    def subset(self, index: np.ndarray) -> "Dataset":
        return Dataset(
            features=self.features[index], labels=self.labels[index], classes=self.classes
        )


class RoundRecord(BaseModel):
    """
    One training round.

    ``global_loss``, ``grad_norm_sq`` and ``model_diff_sq`` describe the model broadcast in the
    round; ``test_accuracy`` is measured on the aggregated model the round produces.
    """
    model_config = ConfigDict(frozen=True)

    round: int
    global_loss: float
    grad_norm_sq: float = Field(ge=0)
    model_diff_sq: float = Field(ge=0)
    test_accuracy: Optional[float] = None
    comm_cost_slots: int = Field(ge=0)
    parameter_slots: int = Field(ge=1)
    pilot_overhead: float = Field(ge=0, le=1)
    scheme: Scheme
    fill_strategy: FillStrategy
    seed: int


class RoundTrace(BaseModel):
    """Records of a whole run, in round order."""
    records: List[RoundRecord] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def grad_norms_sq(self) -> np.ndarray:
        return np.array([r.grad_norm_sq for r in self.records])

    def model_diffs_sq(self) -> np.ndarray:
        return np.array([r.model_diff_sq for r in self.records])

    def normalized_costs(self) -> np.ndarray:
        """Cumulative downlink slots divided by the slots one model needs."""
        slots = np.cumsum([r.comm_cost_slots for r in self.records], dtype=np.float64)
        return slots / np.array([r.parameter_slots for r in self.records], dtype=np.float64)

    def accuracies(self) -> np.ndarray:
        return np.array(
            [np.nan if r.test_accuracy is None else r.test_accuracy for r in self.records]
        )


class RoundPlan(BaseModel):
    """What the downlink of one round delivers to each scheduled device."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    cohort: Cohort
    layout: FrameLayout
    allocation: Optional[PowerAllocation] = None
    noise_spec: Optional[DownlinkNoiseSpec] = None
    masks: Dict[int, MaskBits]
    noise: Dict[int, float]
    comm_cost_slots: int = Field(ge=1)
    pilot_overhead: float = Field(ge=0, le=1)


class TrainingResult(BaseModel):
    """A finished run: its trace, final model and every broadcast model in round order."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    trace: RoundTrace
    theta: np.ndarray
    broadcasts: List[np.ndarray] = Field(default_factory=list)
    max_parameter_noise: float = 0.0


class AssumptionConstants(BaseModel):
    """Constants entering the convergence bound."""
    model_config = ConfigDict(frozen=True)

    L: float = Field(ge=0)
    gamma2: float = Field(ge=0)
    omega2: float = Field(ge=0)
    sigma2_D: float = Field(ge=0)
    eta_g: float = Field(ge=0)
    tau: int = Field(ge=1)

    @property
    def eta_local(self) -> float:
        return self.eta_g / self.tau

    @property
    def lr_condition_ok(self) -> bool:
        """Whether eta_local <= 1/(2 L tau)."""
        return self.L == 0 or self.eta_local <= 1.0 / (2.0 * self.L * self.tau) + 1e-15


class BoundReport(BaseModel):
    """Bound check of one run."""
    constants: AssumptionConstants
    error_floor: float
    bound: float
    empirical_lhs: float
    passed: bool
    margin: float
    informational: bool = False
    lr_condition_ok: bool = True
    f0: float
    f_star: float
    f_star_gap: float = 0.0
    rounds: int


class CheckResult(BaseModel):
    """One named validation check."""
    name: str
    passed: bool
    measured: float
    expected: float
    tolerance: float
    detail: str = ""


class ValidationReport(BaseModel):
    """Outcome of the PHY validation suite."""
    checks: List[CheckResult]
    extra: Dict[str, float] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]

    def summary(self) -> Dict[str, object]:
        """JSON body of the report."""
        return {
            "passed": self.passed,
            "failures": self.failures(),
            "checks": [c.model_dump() for c in self.checks],
            "extra": dict(self.extra),
        }
