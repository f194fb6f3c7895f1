"""
Experiment orchestration behind the command line and the HTTP routes.

Each entry point takes a resolved ``ExperimentConfig`` and returns plain rows and reports; writing
them to disk is left to the caller.
"""
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import integrate

from coherentfl.config import MC_CHUNK
from coherentfl.schemas.config import ExperimentConfig
from coherentfl.schemas.models import (
    BoundReport,
    CheckResult,
    Dataset,
    DeviceClass,
    DeviceProfile,
    FillStrategy,
    Purpose,
    RoundTrace,
    Scheme,
    SeededRng,
    TrainingResult,
    ValidationReport,
)
from coherentfl.services.analysis.bound_service import BoundService
from coherentfl.services.data.dataset_service import DatasetService
from coherentfl.services.learning.federated_service import FederatedService
from coherentfl.services.learning.models import LearningProblem, build_problem
from coherentfl.services.learning.planner import RoundPlanner
from coherentfl.services.phy.fading_service import FadingService
from coherentfl.services.phy.power_service import PowerService
from coherentfl.services.phy.signaling_service import SignalingService
from coherentfl.utils.errors import ConfigurationError, InfeasibleBudgetError
from coherentfl.utils.parallel import ordered_map
from coherentfl.utils.phymath import (
    complex_normal,
    draw_rayleigh_channel,
    frobenius_norm,
    hermitian,
    unitary_pilot,
)

logger = logging.getLogger(__name__)

TRACE_COLUMNS = [
    "round",
    "global_loss",
    "grad_norm_sq",
    "model_diff_sq",
    "test_accuracy",
    "comm_cost_slots",
    "lambda",
    "scheme",
    "fill_strategy",
    "seed",
]
SWEEP_COLUMNS = [
    "M",
    "T_K",
    "rho",
    "rho_p",
    "rho_d",
    "gamma_eff",
    "static_rate",
    "static_stderr",
    "dynamic_rate",
    "stderr",
    "feasible",
    "note",
]
COMPARE_COLUMNS = ["variant", "scheme", "fill_strategy", "seed", "round", "cost", "accuracy"]
SUMMARY_COLUMNS = [
    "variant",
    "scheme",
    "fill_strategy",
    "seed",
    "final_accuracy",
    "final_loss",
    "final_cost",
    "target_accuracy",
    "cost_to_target",
    "max_parameter_noise",
]
SCHEME_SWEEP_COLUMNS = ["lambda", "snr_db"] + SUMMARY_COLUMNS

# Compared runs: (label, scheme, fill strategy). Conventional and additive signaling deliver the
# whole model, so their fill strategy never takes effect.
VARIANTS: List[Tuple[str, Scheme, FillStrategy]] = [
    ("conventional", Scheme.CONVENTIONAL, FillStrategy.PLMF),
    ("product_superposition-zf", Scheme.PRODUCT_SUPERPOSITION, FillStrategy.ZF),
    ("product_superposition-plmf", Scheme.PRODUCT_SUPERPOSITION, FillStrategy.PLMF),
    ("additive_superposition", Scheme.ADDITIVE_SUPERPOSITION, FillStrategy.PLMF),
]

# Default target is this fraction of the weakest final accuracy among the compared runs
TARGET_FRACTION = 0.9
WORKED_POINT = {"m": 2, "t_k": 6, "rho": 1.0, "rho_d": 7.0 / 12.0, "rho_p": 2.0 / 3.0}


class Experiment(BaseModel):
    """Device pool, per-device training data, test split and learning problem of one run."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    pool: List[DeviceProfile]
    datasets: Dict[int, Dataset]
    test: Optional[Dataset] = None
    problem: LearningProblem

    @property
    def members(self) -> List[DeviceProfile]:
        return sorted(self.pool, key=lambda p: p.id)

    def ordered_datasets(self) -> List[Dataset]:
        return [self.datasets[p.id] for p in self.members]


class TrainOutcome(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    rows: List[Dict[str, Any]]
    bound: Optional[BoundReport] = None
    result: TrainingResult


class CompareOutcome(BaseModel):
    rows: List[Dict[str, Any]]
    summary: List[Dict[str, Any]]
    target_accuracy: Optional[float] = None


def _check(
    name: str,
    measured: float,
    expected: float,
    tolerance: float,
    relative: bool = False,
    detail: str = "",
) -> CheckResult:
    gap = abs(measured - expected)
    if relative:
        gap /= abs(expected)
    return CheckResult(
        name=name,
        passed=bool(gap <= tolerance),
        measured=float(measured),
        expected=float(expected),
        tolerance=float(tolerance),
        detail=detail,
    )


class ExperimentService:
    """Builds runs from a configuration and evaluates the experiment suites."""

    @staticmethod
    def at_overhead(config: ExperimentConfig, lambda_target: float) -> ExperimentConfig:
        """Configuration whose dynamic coherence times follow from the pilot overhead alone."""
        pool, frame = config.pool, config.frame
        if pool.coherence_times is not None or frame.t_k is not None:
            logger.info(
                f"Pilot overhead {lambda_target} replaces the configured coherence times "
                f"(T_K={frame.t_k}, per device {pool.coherence_times})"
            )
        return config.model_copy(
            update={
                "frame": frame.model_copy(update={"lambda_target": lambda_target, "t_k": None}),
                "pool": pool.model_copy(update={"coherence_times": None}),
            }
        )

    @staticmethod
    def build_pool(config: ExperimentConfig, sizes: Sequence[int]) -> List[DeviceProfile]:
        """
        Device pool of the configuration.

        Explicit dynamic coherence times win over an explicit ``frame.t_k``, which wins over the
        pilot overhead target.
        """
        pool, frame, m = config.pool, config.frame, config.antennas
        coherence = pool.coherence_times
        if coherence is None and frame.t_k is not None:
            coherence = [frame.t_k + j * m for j in range(pool.n_dynamic)]
        if coherence is None:
            return FadingService.pool_from_lambda(
                m, frame.lambda_target or 0.0, pool.n_static, pool.n_dynamic, list(sizes)
            )
        profiles = [
            DeviceProfile(id=i, device_class=DeviceClass.STATIC, dataset_size=sizes[i])
            for i in range(pool.n_static)
        ]
        for j, t in enumerate(coherence):
            if t <= m:
                raise ConfigurationError(f"Coherence time {t} leaves no data phase for M={m}")
            profiles.append(
                DeviceProfile(
                    id=pool.n_static + j,
                    device_class=DeviceClass.DYNAMIC,
                    coherence_time=t,
                    dataset_size=sizes[pool.n_static + j],
                )
            )
        return profiles

    @classmethod
    def build_experiment(cls, config: ExperimentConfig) -> Experiment:
        """Data, partitions, pool and problem; everything random is derived from the seed."""
        section, seed = config.dataset, config.seed
        if section.kind == "idx":
            full = DatasetService.load_idx_dataset(
                section.images_path, section.labels_path, section.normalize
            )
        elif section.kind == "quadratic":
            full = DatasetService.synthetic_quadratic(
                section.n, section.features, section.classes, section.spread, seed
            )
        else:
            full = DatasetService.synthetic_classification(
                section.n, section.features, section.classes, section.separation, seed
            )

        # Quadratic problems have no labels to score, so every sample is used for training
        if section.kind == "quadratic":
            train, test = full, None
        else:
            train, test = DatasetService.train_test_split(full, section.test_fraction, seed)

        k = config.pool.n_static + config.pool.n_dynamic
        parts = DatasetService.partition(
            train, k, section.partition, section.shards_per_device, seed
        )
        if config.pool.dataset_sizes is not None:
            wanted = config.pool.dataset_sizes
            if len(wanted) != k:
                raise ConfigurationError(f"Expected {k} dataset sizes, got {len(wanted)}")
            for i, (part, size) in enumerate(zip(parts, wanted)):
                if not 1 <= size <= part.n:
                    raise ConfigurationError(
                        f"Device {i} holds {part.n} samples, cannot use {size}"
                    )
            parts = [part.subset(np.arange(size)) for part, size in zip(parts, wanted)]

        pool = cls.build_pool(config, [part.n for part in parts])
        problem = build_problem(
            config.model.kind,
            full.p,
            full.classes,
            hidden=config.model.hidden,
            l2=config.model.l2,
            condition=config.model.condition,
        )
        logger.info(
            f"Built experiment: {len(pool)} devices, {train.n} training samples, "
            f"{problem.name} model with {problem.dim} parameters"
        )
        return Experiment(
            pool=pool,
            datasets={profile.id: part for profile, part in zip(pool, parts)},
            test=test,
            problem=problem,
        )

    @staticmethod
    def run_training(config: ExperimentConfig, experiment: Experiment) -> TrainingResult:
        """One federated run of the configured scheme and fill strategy."""
        frame = config.frame
        planner = RoundPlanner(
            d=experiment.problem.dim,
            m=config.antennas,
            snr_linear=config.snr_linear,
            scheme=config.scheme,
            noise_var=config.noise_var,
            flexible_placement=frame.flexible_placement,
            fresh_block_full_decode=frame.fresh_block_full_decode,
            offset=frame.offset,
        )
        n_static = sum(1 for p in experiment.pool if p.is_static)
        k_total = config.pool.k_total or len(experiment.pool)
        k_static = n_static if config.pool.k_static is None else config.pool.k_static
        return FederatedService(experiment.problem).train(
            experiment.pool,
            experiment.datasets,
            config.train_config(),
            planner,
            config.seed,
            k_total,
            min(k_static, k_total),
            test=experiment.test,
        )

    @staticmethod
    def trace_rows(trace: RoundTrace) -> List[Dict[str, Any]]:
        return [
            {
                "round": r.round,
                "global_loss": r.global_loss,
                "grad_norm_sq": r.grad_norm_sq,
                "model_diff_sq": r.model_diff_sq,
                "test_accuracy": r.test_accuracy,
                "comm_cost_slots": r.comm_cost_slots,
                "lambda": r.pilot_overhead,
                "scheme": r.scheme.value,
                "fill_strategy": r.fill_strategy.value,
                "seed": r.seed,
            }
            for r in trace.records
        ]

    @staticmethod
    def bound_check(
        config: ExperimentConfig, experiment: Experiment, result: TrainingResult
    ) -> BoundReport:
        """
        Measure the assumption constants of a finished run and evaluate its convergence bound.

        Without a closed-form optimum, ``F*`` comes from long centralized gradient descent and is
        lowered by the decrease seen over the second half of that descent.
        """
        problem = experiment.problem
        fed = FederatedService(problem)
        data = experiment.ordered_datasets()
        weights = fed.data_weights(data)

        steps = 10 * config.rounds * config.tau
        theta0 = result.broadcasts[0]
        half, f_half = fed.centralized_optimum(data, weights, theta0, config.eta_local, steps // 2)
        _, f_star = fed.centralized_optimum(
            data, weights, half, config.eta_local, steps - steps // 2
        )
        gap = 0.0 if problem.optimum(data, weights) is not None else max(0.0, f_half - f_star)

        picks = np.unique(np.linspace(0, len(result.broadcasts) - 1, config.constant_probes))
        probes = [result.broadcasts[int(i)] for i in picks.astype(int)]
        constants = BoundService.estimate_constants(
            problem,
            data,
            weights,
            probes,
            config.batch_size,
            config.constant_trials,
            SeededRng(seed=config.seed).stream(0, 0, Purpose.PROBE).generator(),
            eta_g=config.eta_local * config.tau,
            tau=config.tau,
            sigma2_D=problem.dim * result.max_parameter_noise,
        )
        return BoundService.bound_report(
            constants,
            result.trace,
            f_star - gap,
            config.fill_strategy,
            gap,
            config.rounds,
        )

    @classmethod
    def train(cls, config: ExperimentConfig, with_bound: bool = True) -> TrainOutcome:
        experiment = cls.build_experiment(config)
        result = cls.run_training(config, experiment)
        bound = cls.bound_check(config, experiment, result) if with_bound else None
        return TrainOutcome(rows=cls.trace_rows(result.trace), bound=bound, result=result)

    @staticmethod
    def power_sweep(config: ExperimentConfig) -> List[Dict[str, Any]]:
        """Allocation and rates at every (M, T_K, rho) grid point; infeasible points are flagged."""
        sweep, noise_var = config.sweep, config.noise_var
        points = [(m, t, rho) for m in sweep.antennas for t in sweep.coherence for rho in sweep.rho]
        root = SeededRng(seed=config.seed)

        def evaluate(item: Tuple[int, Tuple[int, int, float]]) -> Dict[str, Any]:
            index, (m, t_k, rho) = item
            row: Dict[str, Any] = {"M": m, "T_K": t_k, "rho": rho}
            try:
                alloc = PowerService.optimal_allocation(rho, t_k, m, noise_var)
            except (ConfigurationError, InfeasibleBudgetError) as e:
                logger.warning(f"Sweep point M={m} T_K={t_k} rho={rho} is infeasible")
                row.update(feasible=False, note=e.detail)
                return row
            gen = root.stream(index, 0, Purpose.PROBE).generator()
            static = PowerService.static_rate(alloc.rho_p, m, t_k, noise_var, sweep.trials, gen)
            dynamic = PowerService.dynamic_rate(alloc, sweep.trials, gen)
            row.update(
                rho_p=alloc.rho_p,
                rho_d=alloc.rho_d,
                gamma_eff=PowerService.effective_snr(alloc.rho_p, alloc.rho_d, m, noise_var),
                static_rate=static.mean,
                static_stderr=static.stderr,
                dynamic_rate=dynamic.mean,
                stderr=dynamic.stderr,
                feasible=True,
                note="",
            )
            return row

        rows = ordered_map(evaluate, list(enumerate(points)))
        logger.info(f"Power sweep evaluated {len(rows)} points")
        return rows

    @staticmethod
    def _mmse_statistics(
        m: int,
        rho_p: float,
        noise_var: float,
        trials: int,
        rng: np.random.Generator,
        shrinkage_factor: Optional[float] = None,
    ) -> Tuple[float, float, float]:
        """
        Per-entry estimation error energy, largest estimate/error cross-correlation entry and the
        scale that correlation is judged against.
        """
        pilot = unitary_pilot(m)
        shrinkage = None
        if shrinkage_factor is not None:
            shrinkage = shrinkage_factor * m * rho_p / (m * rho_p + noise_var)
        error_energy, done = 0.0, 0
        cross = np.zeros((m, m), dtype=np.complex128)
        estimate_energy = 0.0
        while done < trials:
            n = min(MC_CHUNK, trials - done)
            channel = draw_rayleigh_channel(m, rng, n)
            embedding = SignalingService.embed_symbols(complex_normal((n, m + 1), 1.0, rng), m)
            block = SignalingService.build_superposition_block(
                embedding.pilot_params, embedding.data_params, pilot, rho_p, 1.0
            )
            y = SignalingService.receive(block, channel, noise_var, rng)
            estimate = SignalingService.mmse_virtual_channel(
                y[:, :m], rho_p, noise_var, m, pilot, shrinkage
            ).estimate
            virtual = np.einsum("...i,...ij->...j", channel.conj(), embedding.pilot_params)
            error = virtual / np.sqrt(m) - estimate
            error_energy += float(np.sum(np.abs(error) ** 2))
            estimate_energy += float(np.sum(np.abs(estimate) ** 2))
            cross += np.einsum("ni,nj->ij", estimate, error.conj())
            done += n
        per_entry_error = error_energy / (trials * m)
        per_entry_estimate = estimate_energy / (trials * m)
        scale = np.sqrt(per_entry_error * per_entry_estimate / trials)
        return per_entry_error, float(np.max(np.abs(cross / trials))), float(scale)

    @classmethod
    def phy_validate(
        cls, config: ExperimentConfig, mutate_shrinkage: Optional[float] = None
    ) -> ValidationReport:
        """
        Statistical and exact checks of the estimator, the pilot and the power allocation.

        ``mutate_shrinkage`` scales the MMSE coefficient; the estimator checks must then fail.
        """
        section, noise_var = config.validation, config.validation.noise_var
        root = SeededRng(seed=config.seed)
        if mutate_shrinkage is not None:
            logger.warning(f"Validating with the MMSE coefficient scaled by {mutate_shrinkage}")
        checks: List[CheckResult] = []

        combos = [(m, rho_p) for m in section.antennas for rho_p in section.pilot_powers]

        def mmse_checks(item: Tuple[int, Tuple[int, float]]) -> List[CheckResult]:
            index, (m, rho_p) = item
            gen = root.stream(index, 1, Purpose.PROBE).generator()
            error, cross, scale = cls._mmse_statistics(
                m, rho_p, noise_var, section.trials, gen, mutate_shrinkage
            )
            expected = noise_var / (m * rho_p + noise_var)
            label = f"M={m},rho_p={rho_p}"
            return [
                _check(
                    f"mmse_error_variance[{label}]",
                    error,
                    expected,
                    section.relative_tolerance,
                    relative=True,
                ),
                _check(f"mmse_orthogonality[{label}]", cross, 0.0, 5.0 * scale),
            ]

        for group in ordered_map(mmse_checks, list(enumerate(combos))):
            checks.extend(group)

        for m in sorted(set(section.antennas) | set(section.grid_antennas)):
            pilot = unitary_pilot(m)
            deviation = frobenius_norm(pilot @ hermitian(pilot) - np.eye(m))
            checks.append(_check(f"pilot_unitary[M={m}]", deviation, 0.0, 1e-12))

        checks.extend(cls._power_checks(config))
        checks.extend(cls._static_decode_checks(config, root))
        checks.extend(cls._rate_checks(config, root))

        report = ValidationReport(checks=checks)
        for name in report.failures():
            logger.error(f"Validation check failed: {name}")
        logger.info(
            f"PHY validation: {sum(c.passed for c in checks)}/{len(checks)} checks passed"
        )
        return report

    @staticmethod
    def _power_checks(config: ExperimentConfig) -> List[CheckResult]:
        section = config.validation
        noise_var = section.noise_var
        checks = []
        for m in section.grid_antennas:
            for t_k in section.grid_coherence:
                for rho in section.grid_rho:
                    label = f"M={m},T_K={t_k},rho={rho}"
                    try:
                        alloc = PowerService.optimal_allocation(rho, t_k, m, noise_var)
                    except (ConfigurationError, InfeasibleBudgetError) as e:
                        logger.warning(f"Skipping power grid point {label}: {e.detail}")
                        continue
                    best = PowerService.grid_minimum(rho, t_k, m, noise_var, section.grid_points)
                    value = PowerService.objective(alloc.rho_d, rho, t_k, m, noise_var)
                    slack = m * (alloc.rho_p + (t_k - m) * alloc.rho_d) - rho * t_k
                    checks.append(
                        CheckResult(
                            name=f"power_grid_oracle[{label}]",
                            passed=value <= best + 1e-9,
                            measured=value,
                            expected=best,
                            tolerance=1e-9,
                        )
                    )
                    checks.append(_check(f"power_budget_equality[{label}]", slack, 0.0, 1e-9))
                    checks.append(
                        _check(
                            f"power_first_order[{label}]",
                            PowerService.first_order_residual(alloc),
                            0.0,
                            1e-6,
                        )
                    )

        point = WORKED_POINT
        alloc = PowerService.optimal_allocation(point["rho"], point["t_k"], point["m"], 1.0)
        checks.append(_check("power_worked_point[rho_d]", alloc.rho_d, point["rho_d"], 1e-9))
        checks.append(_check("power_worked_point[rho_p]", alloc.rho_p, point["rho_p"], 1e-9))
        return checks

    @staticmethod
    def _static_decode_checks(config: ExperimentConfig, root: SeededRng) -> List[CheckResult]:
        """Noiseless pilot-phase decoding returns ``sqrt(rho_p) h^H X^theta`` exactly."""
        section = config.validation
        instances = 1000
        rho_p = max(section.pilot_powers)
        checks = []
        for index, m in enumerate(section.antennas):
            gen = root.stream(index, 2, Purpose.PROBE).generator()
            pilot = unitary_pilot(m)
            channel = draw_rayleigh_channel(m, gen, instances)
            embedding = SignalingService.embed_symbols(
                complex_normal((instances, m + 1), 1.0, gen), m
            )
            block = SignalingService.build_superposition_block(
                embedding.pilot_params, embedding.data_params, pilot, rho_p, 1.0
            )
            y = SignalingService.receive(block, channel, 0.0, gen)
            rotated = SignalingService.static_decode_pilot_phase(y[:, :m], channel, pilot, rho_p)
            target = np.sqrt(rho_p) * np.einsum(
                "...i,...ij->...j", channel.conj(), embedding.pilot_params
            )
            error = float(np.max(np.abs(rotated - target)))
            checks.append(_check(f"static_decode_exact[M={m}]", error, 0.0, 1e-10))
        return checks

    @staticmethod
    def _rate_checks(config: ExperimentConfig, root: SeededRng) -> List[CheckResult]:
        """Single-antenna static rate against quadrature and decoded SNR against its prediction."""
        section = config.validation
        noise_var, trials = section.noise_var, section.trials
        checks = []

        rho_p, t_k = 1.0, 2
        estimate = PowerService.static_rate(
            rho_p, 1, t_k, noise_var, trials, root.stream(0, 3, Purpose.PROBE).generator()
        )
        oracle, _ = integrate.quad(
            lambda x: np.log2(1.0 + rho_p * x / noise_var) * np.exp(-x), 0.0, np.inf
        )
        checks.append(
            _check(
                "static_rate_quadrature[M=1]",
                estimate.mean,
                oracle / t_k,
                3.0 * estimate.stderr,
                detail=f"stderr={estimate.stderr:.3g}",
            )
        )

        for index, m in enumerate(section.antennas):
            rho_p = rho_d = 1.0
            measured = SignalingService.estimate_decoded_snr(
                rho_p,
                rho_d,
                m,
                noise_var,
                trials,
                root.stream(index, 4, Purpose.PROBE).generator(),
            )
            alpha2 = m * rho_p / (m * rho_p + noise_var)
            predicted = PowerService.effective_snr(rho_p, rho_d, m, noise_var) * m * alpha2
            checks.append(
                _check(f"decoded_snr[M={m}]", measured, predicted, 0.05, relative=True)
            )
        return checks

    @classmethod
    def compare_schemes(cls, config: ExperimentConfig) -> CompareOutcome:
        """
        Run every compared scheme on the same seeds and data.

        Rows hold (cost, accuracy) checkpoints of every run; the summary gives the cost at which
        each run first reaches the target accuracy.
        """
        seeds = [config.seed + i for i in range(config.compare.seeds)]
        experiments = {
            seed: cls.build_experiment(config.model_copy(update={"seed": seed})) for seed in seeds
        }
        jobs = [(seed, variant) for seed in seeds for variant in VARIANTS]

        def run(job) -> TrainingResult:
            seed, (_, scheme, fill) = job
            variant_config = config.model_copy(
                update={"seed": seed, "scheme": scheme, "fill_strategy": fill}
            )
            return cls.run_training(variant_config, experiments[seed])

        results = ordered_map(run, jobs)

        finals = [r.trace.records[-1].test_accuracy for r in results]
        target = config.compare.target_accuracy
        if target is None and all(a is not None for a in finals):
            target = TARGET_FRACTION * min(finals)

        rows, summary = [], []
        for (seed, (label, scheme, fill)), result in zip(jobs, results):
            base = {
                "variant": label,
                "scheme": scheme.value,
                "fill_strategy": fill.value,
                "seed": seed,
            }
            for point in BoundService.checkpoints(result.trace):
                rows.append({**base, **point})
            trace = result.trace
            summary.append(
                {
                    **base,
                    "final_accuracy": trace.records[-1].test_accuracy,
                    "final_loss": trace.records[-1].global_loss,
                    "final_cost": float(trace.normalized_costs()[-1]),
                    "target_accuracy": target,
                    "cost_to_target": (
                        BoundService.cost_to_reach(trace, target) if target is not None else None
                    ),
                    "max_parameter_noise": result.max_parameter_noise,
                }
            )
        logger.info(f"Compared {len(VARIANTS)} schemes over {len(seeds)} seeds, target={target}")
        return CompareOutcome(rows=rows, summary=summary, target_accuracy=target)

    @classmethod
    def scheme_sweep(cls, config: ExperimentConfig) -> List[Dict[str, Any]]:
        """Comparison summary at every (pilot overhead, SNR) point of the configured grid."""
        grid = config.compare
        rows: List[Dict[str, Any]] = []
        for lambda_target in grid.lambda_grid:
            for snr_db in grid.snr_db_grid:
                point = cls.at_overhead(config, lambda_target).model_copy(
                    update={"snr_db": snr_db}
                )
                outcome = cls.compare_schemes(point)
                rows.extend(
                    {"lambda": lambda_target, "snr_db": snr_db, **row} for row in outcome.summary
                )
        logger.info(
            f"Scheme sweep covered {len(grid.lambda_grid)} overheads by "
            f"{len(grid.snr_db_grid)} SNR values"
        )
        return rows
