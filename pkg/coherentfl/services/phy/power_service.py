"""
Pilot/data power allocation, effective SNR and achievable rates.
"""
import logging
from typing import Callable, Optional

import numpy as np

from coherentfl.config import MC_CHUNK
from coherentfl.schemas.models import FramePowerReport, PowerAllocation, RateEstimate
from coherentfl.utils.errors import ConfigurationError, DomainError, InfeasibleBudgetError
from coherentfl.utils.phymath import complex_normal

logger = logging.getLogger(__name__)


def _monte_carlo(
    draw: Callable[[int, np.random.Generator], np.ndarray],
    trials: int,
    rng: np.random.Generator,
    chunk: Optional[int] = None,
) -> RateEstimate:
    """Mean and standard error of ``draw`` samples accumulated chunk by chunk."""
    if trials < 1:
        raise DomainError(f"Monte Carlo needs at least one trial, got {trials}")
    chunk = chunk or MC_CHUNK
    total, total_sq, done = 0.0, 0.0, 0
    while done < trials:
        n = min(chunk, trials - done)
        values = draw(n, rng)
        total += float(values.sum())
        total_sq += float(np.square(values).sum())
        done += n
    mean = total / trials
    var = max(total_sq / trials - mean**2, 0.0)
    stderr = float(np.sqrt(var / (trials - 1))) if trials > 1 else 0.0
    return RateEstimate(mean=mean, stderr=stderr, trials=trials)


class PowerService:
    """Closed-form allocation plus Monte Carlo rate evaluation."""

    @staticmethod
    def _check_block(t_k: int, m: int) -> None:
        if m < 1:
            raise ConfigurationError(f"Antenna count must be at least 1, got {m}")
        if t_k <= m:
            raise ConfigurationError(f"Coherence time {t_k} leaves no data phase for M={m}")

    @staticmethod
    def minimum_feasible_rho(t_k: int, m: int, noise_var: float = 1.0) -> float:
        """Smallest budget for which the optimal pilot power is non-negative."""
        return noise_var * np.sqrt(t_k - m) / t_k

    @classmethod
    def optimal_allocation(
        cls, rho: float, t_k: int, m: int, noise_var: float = 1.0
    ) -> PowerAllocation:
        """Pilot/data split maximizing the effective SNR, with the frame budget spent exactly."""
        cls._check_block(t_k, m)
        if rho <= 0 or noise_var <= 0:
            raise DomainError(
                f"Budget and noise must be positive, got rho={rho}, noise={noise_var}"
            )
        r = np.sqrt(t_k - m)
        rho_d = (noise_var + rho * t_k) / (m * r * (1 + r))
        rho_p = rho * t_k / m - rho_d * (t_k - m)
        if rho_p < 0:
            minimum = cls.minimum_feasible_rho(t_k, m, noise_var)
            raise InfeasibleBudgetError(
                f"Budget rho={rho} is infeasible for M={m}, T_K={t_k}; need rho >= {minimum:.6g}",
                minimum,
            )
        return PowerAllocation(
            rho_p=float(rho_p),
            rho_d=float(rho_d),
            rho_total=rho,
            t_k=t_k,
            m=m,
            noise_var=noise_var,
        )

    @classmethod
    def equal_allocation(
        cls, rho: float, t_k: int, m: int, noise_var: float = 1.0
    ) -> PowerAllocation:
        """Naive split with equal pilot and data powers, scaled to spend the budget."""
        cls._check_block(t_k, m)
        level = rho * t_k / (m * (t_k - m + 1))
        return PowerAllocation(
            rho_p=level, rho_d=level, rho_total=rho, t_k=t_k, m=m, noise_var=noise_var
        )

    @classmethod
    def baseline_allocation(
        cls, rho: float, t_c: int, m: int, noise_var: float = 1.0
    ) -> PowerAllocation:
        """Orthogonal signaling with equal per-slot power, meeting its budget with equality."""
        cls._check_block(t_c, m)
        return PowerAllocation(
            rho_p=rho, rho_d=rho, rho_total=rho, t_k=t_c, m=m, noise_var=noise_var, orthogonal=True
        )

    @staticmethod
    def effective_snr(rho_p, rho_d, m: int, noise_var: float):
        """Data-phase SNR after MMSE virtual-channel estimation."""
        if noise_var <= 0:
            raise DomainError(f"Noise variance must be positive, got {noise_var}")
        pilot_term = noise_var + m * np.asarray(rho_p, dtype=float)
        gamma = rho_d * pilot_term / (noise_var * (pilot_term + m * np.asarray(rho_d, dtype=float)))
        return float(gamma) if np.ndim(gamma) == 0 else gamma

    @staticmethod
    def baseline_effective_snr(rho_p: float, rho_d: float, m: int, noise_var: float) -> float:
        """Effective SNR of orthogonal pilots then data, physical channel estimated by MMSE."""
        if noise_var <= 0:
            raise DomainError(f"Noise variance must be positive, got {noise_var}")
        return rho_d * (rho_p + noise_var) / (noise_var * (rho_p + noise_var + m * rho_d))

    @classmethod
    def additive_effective_snr(cls, rho_p: float, rho_d: float, m: int, noise_var: float) -> float:
        """Effective SNR of additive superposition: the parameters interfere with the pilots."""
        return cls.baseline_effective_snr(rho_p, rho_d, m, noise_var + m * rho_d)

    @staticmethod
    def objective(rho_d, rho: float, t_k: int, m: int, noise_var: float = 1.0):
        """Reciprocal effective SNR as a function of the data power on the budget line."""
        rho_d = np.asarray(rho_d, dtype=float)
        rho_p = rho * t_k / m - rho_d * (t_k - m)
        value = noise_var / rho_d + noise_var * m / (noise_var + m * rho_p)
        return float(value) if value.ndim == 0 else value

    @classmethod
    def grid_minimum(
        cls, rho: float, t_k: int, m: int, noise_var: float = 1.0, points: int = 10_000
    ) -> float:
        """Brute-force minimum of the objective over equispaced feasible data powers."""
        upper = rho * t_k / (m * (t_k - m))
        grid = np.linspace(upper / points, upper, points)
        return float(np.min(cls.objective(grid, rho, t_k, m, noise_var)))

    @staticmethod
    def first_order_residual(alloc: PowerAllocation) -> float:
        """Relative gap between the two sides of the stationarity condition at ``alloc``."""
        m, t_k, s2 = alloc.m, alloc.t_k, alloc.noise_var
        c = alloc.rho_total * t_k / m
        lhs = s2 / alloc.rho_d**2
        rhs = s2 * m**2 * (t_k - m) / (s2 + m * c - m * (t_k - m) * alloc.rho_d) ** 2
        return abs(lhs - rhs) / abs(lhs)

    @staticmethod
    def static_rate(
        rho_p: float,
        m: int,
        t_k: int,
        noise_var: float,
        trials: int,
        rng: np.random.Generator,
    ) -> RateEstimate:
        """Extra rate static devices get from the pilot phase, in bits per slot."""
        scale = rho_p / (m * noise_var)

        def draw(n: int, gen: np.random.Generator) -> np.ndarray:
            gain = np.sum(np.abs(complex_normal((n, m), 1.0, gen)) ** 2, axis=-1)
            return (m / t_k) * np.log2(1.0 + scale * gain)

        return _monte_carlo(draw, trials, rng)

    @classmethod
    def dynamic_rate(
        cls, alloc: PowerAllocation, trials: int, rng: np.random.Generator
    ) -> RateEstimate:
        """Data-phase rate of a dynamic device with an MMSE virtual-channel estimate."""
        m, t_k, s2 = alloc.m, alloc.t_k, alloc.noise_var
        gamma = cls.effective_snr(alloc.rho_p, alloc.rho_d, m, s2)
        alpha2 = m * alloc.rho_p / (m * alloc.rho_p + s2)

        def draw(n: int, gen: np.random.Generator) -> np.ndarray:
            gain = np.sum(np.abs(complex_normal((n, m), alpha2, gen)) ** 2, axis=-1)
            return (1.0 - m / t_k) * np.log2(1.0 + gamma * gain)

        return _monte_carlo(draw, trials, rng)

    @staticmethod
    def check_frame_power(
        q: int, alloc: PowerAllocation, s: int, rho: Optional[float] = None
    ) -> FramePowerReport:
        """Compare the energy of ``q`` sub-blocks with the frame budget ``rho * s``."""
        rho = alloc.rho_total if rho is None else rho
        used = q * alloc.sub_block_energy()
        slack = rho * s - used
        ok = slack >= -1e-9
        if not ok:
            logger.warning(f"Frame power exceeds budget by {-slack:.6g}")
        return FramePowerReport(ok=ok, slack=float(slack), excess=float(max(0.0, -slack)))
