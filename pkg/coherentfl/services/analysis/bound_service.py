"""
Convergence-bound checks and communication-cost metrics.
"""
import logging
import math
from typing import List, Optional, Sequence

import numpy as np
import tenacity

from coherentfl.schemas.models import (
    AssumptionConstants,
    BoundReport,
    Dataset,
    FillStrategy,
    RoundTrace,
    Scheme,
)
from coherentfl.services.learning.models import LearningProblem
from coherentfl.utils.errors import ConfigurationError, PowerIterationError

logger = logging.getLogger(__name__)

# Safety factor applied to smoothness constants estimated by power iteration
SMOOTHNESS_SAFETY = 1.1
POWER_ITERATIONS = 1000
POWER_TOLERANCE = 1e-5


class BoundService:
    """Evaluates the PLMF convergence bound against measured traces."""

    @staticmethod
    def error_floor(constants: AssumptionConstants) -> float:
        """Non-vanishing term ``Z = 8 L eta_g tau (gamma^2 + omega^2) + 4 L sigma_D^2``."""
        c = constants
        return 8 * c.L * c.eta_g * c.tau * (c.gamma2 + c.omega2) + 4 * c.L * c.sigma2_D

    @classmethod
    def theorem1_rhs(
        cls,
        constants: AssumptionConstants,
        trace: RoundTrace,
        f0: float,
        f_star: float,
        rounds: Optional[int] = None,
    ) -> float:
        """
        Bound on the mean squared gradient norm after ``rounds`` rounds.

        The model difference of the first round is zero by definition.
        """
        rounds = rounds or len(trace)
        if rounds < 1:
            raise ConfigurationError("The bound needs at least one round")
        if f0 < f_star:
            raise ConfigurationError(f"Initial loss {f0} lies below the optimum {f_star}")
        if constants.eta_g <= 0:
            raise ConfigurationError("The bound needs a positive global learning rate")
        if not constants.lr_condition_ok:
            logger.warning(
                f"Learning rate {constants.eta_local:.4g} exceeds 1/(2 L tau); the bound is not "
                "guaranteed"
            )
        c = constants
        diffs = float(np.sum(trace.model_diffs_sq()[:rounds]))
        return (
            4 * (f0 - f_star) / (rounds * c.eta_g)
            + 4 * c.L**2 * c.tau * c.eta_g * diffs / rounds
            + cls.error_floor(c)
        )

    @staticmethod
    def empirical_lhs(trace: RoundTrace, rounds: Optional[int] = None) -> float:
        """Mean squared gradient norm of the broadcast models."""
        norms = trace.grad_norms_sq()[: rounds or len(trace)]
        return float(np.mean(norms))

    @classmethod
    def bound_report(
        cls,
        constants: AssumptionConstants,
        trace: RoundTrace,
        f_star: float,
        fill_strategy: FillStrategy = FillStrategy.PLMF,
        f_star_gap: float = 0.0,
        rounds: Optional[int] = None,
    ) -> BoundReport:
        rounds = rounds or len(trace)
        f0 = trace.records[0].global_loss
        # The optimum estimate can overshoot the initial loss only on degenerate runs
        f_star = min(f_star, f0)
        bound = cls.theorem1_rhs(constants, trace, f0, f_star, rounds)
        lhs = cls.empirical_lhs(trace, rounds)
        informational = fill_strategy != FillStrategy.PLMF
        if informational:
            logger.warning("Bound check on a zero-filling run is informational only")
        report = BoundReport(
            constants=constants,
            error_floor=cls.error_floor(constants),
            bound=bound,
            empirical_lhs=lhs,
            passed=lhs <= bound,
            margin=bound - lhs,
            informational=informational,
            lr_condition_ok=constants.lr_condition_ok,
            f0=f0,
            f_star=f_star,
            f_star_gap=f_star_gap,
            rounds=rounds,
        )
        logger.info(
            f"Bound check over {rounds} rounds: lhs={lhs:.6g} bound={bound:.6g} "
            f"passed={report.passed}"
        )
        return report

    @staticmethod
    @tenacity.retry(
        stop=tenacity.stop_after_attempt(3),
        retry=tenacity.retry_if_exception_type(PowerIterationError),
        reraise=True,
        before_sleep=lambda retry_state: logger.warning(
            f"Power iteration did not converge (attempt {retry_state.attempt_number}); "
            "restarting from a fresh vector"
        ),
    )
    def _top_eigenvalue(
        problem: LearningProblem, theta: np.ndarray, data: Dataset, rng: np.random.Generator
    ) -> float:
        v = rng.standard_normal(problem.dim)
        v /= np.linalg.norm(v)
        estimate = 0.0
        for _ in range(POWER_ITERATIONS):
            hv = problem.hessian_vector(theta, data, v)
            norm = float(np.linalg.norm(hv))
            if not np.isfinite(norm):
                raise PowerIterationError("Hessian-vector product is not finite")
            if norm == 0.0:
                return 0.0
            if abs(norm - estimate) <= POWER_TOLERANCE * norm:
                return norm
            estimate, v = norm, hv / norm
        raise PowerIterationError(
            f"Power iteration did not settle within {POWER_ITERATIONS} iterations"
        )

    @classmethod
    def estimate_constants(
        cls,
        problem: LearningProblem,
        datasets: Sequence[Dataset],
        weights: Sequence[float],
        probes: Sequence[np.ndarray],
        batch_size: int,
        trials: int,
        rng: np.random.Generator,
        eta_g: float,
        tau: int,
        sigma2_D: float = 0.0,
    ) -> AssumptionConstants:
        """
        Upper-bound estimates of the assumption constants at the given probe models.

        ``L`` is exact when the problem knows it, otherwise the largest Hessian eigenvalue over
        probes and devices with a safety factor. ``gamma2`` is the largest minibatch-gradient
        variance and ``omega2`` the largest device-to-global gradient spread.
        """
        if not probes:
            raise ConfigurationError("Constant estimation needs at least one probe model")
        weights = np.asarray(weights, dtype=np.float64)

        exact = problem.smoothness()
        if exact is not None:
            smoothness = exact
        else:
            smoothness = SMOOTHNESS_SAFETY * max(
                cls._top_eigenvalue(problem, theta, ds, rng) for theta in probes for ds in datasets
            )

        gamma2, omega2 = 0.0, 0.0
        for theta in probes:
            local = [problem.gradient(theta, ds) for ds in datasets]
            global_grad = np.sum([w * g for w, g in zip(weights, local)], axis=0)
            spread = np.mean([np.sum((g - global_grad) ** 2) for g in local])
            omega2 = max(omega2, float(spread))
            for ds, full in zip(datasets, local):
                if batch_size >= ds.n:
                    continue
                samples = []
                for _ in range(trials):
                    batch = ds.subset(rng.choice(ds.n, batch_size, replace=False))
                    samples.append(np.sum((problem.gradient(theta, batch) - full) ** 2))
                gamma2 = max(gamma2, float(np.mean(samples)))

        constants = AssumptionConstants(
            L=smoothness, gamma2=gamma2, omega2=omega2, sigma2_D=sigma2_D, eta_g=eta_g, tau=tau
        )
        logger.info(
            f"Estimated constants L={smoothness:.4g} gamma2={gamma2:.4g} omega2={omega2:.4g} "
            f"sigma2_D={sigma2_D:.4g}"
        )
        return constants

    @staticmethod
    def downlink_slots(scheme: Scheme, d: int, m: int, t_k: Optional[int]) -> int:
        """
        Slots needed to broadcast ``d`` parameters, one parameter per slot.

        Superposition schemes put parameters into the pilot slots too; conventional signaling
        spends ``M`` extra slots per ``T_K - M`` parameters.
        """
        if d < 1:
            raise ConfigurationError(f"Model dimension must be at least 1, got {d}")
        if t_k is None or scheme != Scheme.CONVENTIONAL:
            return d
        if t_k <= m:
            raise ConfigurationError(f"Coherence time {t_k} leaves no data phase for M={m}")
        return d + m * math.ceil(d / (t_k - m))

    @classmethod
    def normalized_comm_cost(
        cls, scheme: Scheme, d: int, m: int, t_k: Optional[int]
    ) -> float:
        """Downlink slots per delivered parameter slot."""
        return cls.downlink_slots(scheme, d, m, t_k) / d

    @staticmethod
    def cost_from_lambda(scheme: Scheme, pilot_overhead: float) -> float:
        """Normalized cost implied by a pilot overhead when frames are aligned."""
        if not 0 <= pilot_overhead < 1:
            raise ConfigurationError(f"Pilot overhead must lie in [0, 1), got {pilot_overhead}")
        if scheme == Scheme.CONVENTIONAL:
            return 1.0 / (1.0 - pilot_overhead)
        return 1.0

    @staticmethod
    def cost_to_reach(trace: RoundTrace, target: float) -> Optional[float]:
        """Cumulative normalized cost at the first round whose accuracy reaches ``target``."""
        costs = trace.normalized_costs()
        for cost, accuracy in zip(costs, trace.accuracies()):
            if not np.isnan(accuracy) and accuracy >= target:
                return float(cost)
        return None

    @staticmethod
    def checkpoints(trace: RoundTrace) -> List[dict]:
        """(cost, accuracy) pairs of every round."""
        return [
            {"round": r.round, "cost": float(c), "accuracy": r.test_accuracy}
            for r, c in zip(trace.records, trace.normalized_costs())
        ]
