"""
Downlink frame construction and reception for the three signaling schemes.

Model symbols ``s`` are embedded into a sub-block as

    X_p^theta = sqrt(M) diag(s_1..s_M) U          (pilot phase, M x M)
    X_d^theta[:, j] = s_{M+j} u_{j mod M}         (data phase, one symbol per slot)

with ``U`` the fixed unitary mixing matrix. A dynamic device sees the virtual channel
``f = h^H X_p^theta / sqrt(M)``, whose entries have unit variance.
"""
import logging
from typing import Optional

import numpy as np

from coherentfl.config import MC_CHUNK
from coherentfl.schemas.models import (
    DataDecodeResult,
    PowerAllocation,
    Scheme,
    SubBlockFrame,
    SymbolEmbedding,
    VirtualChannelEstimate,
)
from coherentfl.utils.errors import DimensionError, DomainError, PowerConstraintError
from coherentfl.utils.phymath import (
    complex_normal,
    draw_rayleigh_channel,
    hermitian,
    unitary_mixing,
    unitary_pilot,
)

logger = logging.getLogger(__name__)

# Effective gains below this magnitude erase the slot instead of dividing by it
ERASURE_THRESHOLD = 1e-9


def _check_powers(**powers: float) -> None:
    for name, value in powers.items():
        if value < 0:
            raise DomainError(f"{name} must be non-negative, got {value}")


class SignalingService:
    """Frame builders, receiver front-end and decoders."""

    @staticmethod
    def embed_symbols(symbols: np.ndarray, m: int) -> SymbolEmbedding:
        """Embed ``T_K`` symbols per sub-block (last axis) into pilot- and data-phase matrices."""
        symbols = np.asarray(symbols, dtype=np.complex128)
        if symbols.shape[-1] <= m:
            raise DimensionError(
                f"A sub-block needs more than {m} symbols, got {symbols.shape[-1]}"
            )
        mixing = unitary_mixing(m)
        pilot_params = np.sqrt(m) * symbols[..., :m, None] * mixing
        cols = np.arange(symbols.shape[-1] - m) % m
        data_params = mixing[:, cols] * symbols[..., None, m:]
        return SymbolEmbedding(pilot_params=pilot_params, data_params=data_params, mixing=mixing)

    @classmethod
    def build_frame(cls, symbols: np.ndarray, alloc: PowerAllocation) -> SubBlockFrame:
        """Product-superposition sub-block carrying one sub-block's worth of symbols."""
        embedding = cls.embed_symbols(symbols, alloc.m)
        return SubBlockFrame(
            pilot=unitary_pilot(alloc.m),
            pilot_phase_params=embedding.pilot_params,
            data_phase_params=embedding.data_params,
            rho_p=alloc.rho_p,
            rho_d=alloc.rho_d,
            scheme=Scheme.PRODUCT_SUPERPOSITION,
        )

    @staticmethod
    def build_baseline_block(
        params: np.ndarray,
        pilot: np.ndarray,
        rho_p: float,
        rho_d: float,
        t_c: int,
        rho: Optional[float] = None,
    ) -> np.ndarray:
        """
        Orthogonal pilot-then-data block ``[sqrt(rho_p) X_p, sqrt(rho_d) X_d]``.

        When the budget ``rho`` is given the powers must satisfy
        ``rho_p M + rho_d (T_c - M) <= rho T_c``.
        """
        _check_powers(rho_p=rho_p, rho_d=rho_d)
        m = pilot.shape[-1]
        if t_c <= m:
            raise DimensionError(f"Coherence time {t_c} leaves no data phase for M={m}")
        if params.shape[-2:] != (m, t_c - m):
            raise DimensionError(f"Data matrix must be {m} x {t_c - m}, got {params.shape[-2:]}")
        if rho is not None:
            excess = rho_p * m + rho_d * (t_c - m) - rho * t_c
            if excess > 1e-9:
                raise PowerConstraintError(
                    f"Baseline block exceeds its power budget by {excess:.6g}", excess
                )
        pilot_part = np.broadcast_to(np.sqrt(rho_p) * pilot, params.shape[:-2] + (m, m))
        return np.concatenate([pilot_part, np.sqrt(rho_d) * params], axis=-1)

    @staticmethod
    def build_superposition_block(
        params_pilot_phase: np.ndarray,
        params_data_phase: np.ndarray,
        pilot: np.ndarray,
        rho_p: float,
        rho_d: float,
    ) -> np.ndarray:
        """Product superposition ``[sqrt(rho_p) X_p^theta X_p, sqrt(rho_d) X_p^theta X_d^theta]``"""
        _check_powers(rho_p=rho_p, rho_d=rho_d)
        m = pilot.shape[-1]
        if params_pilot_phase.shape[-2:] != (m, m) or params_data_phase.shape[-2] != m:
            raise DimensionError(
                f"Superposition parameters {params_pilot_phase.shape} / "
                f"{params_data_phase.shape} do not match M={m}"
            )
        pilot_phase = np.sqrt(rho_p) * (params_pilot_phase @ pilot)
        data_phase = np.sqrt(rho_d) * (params_pilot_phase @ params_data_phase)
        return np.concatenate([pilot_phase, data_phase], axis=-1)

    @staticmethod
    def build_additive_block(
        params: np.ndarray, pilot: np.ndarray, rho_p: float, rho_d: float
    ) -> np.ndarray:
        """
        Additive superposition: pilots and parameters share the first ``M`` slots.

        Interference limited: the parameters stay in the pilot phase after pilot cancellation.
        """
        _check_powers(rho_p=rho_p, rho_d=rho_d)
        m = pilot.shape[-1]
        if params.shape[-2] != m or params.shape[-1] <= m:
            raise DimensionError(f"Additive parameters must be {m} x T_K with T_K > {m}")
        block = np.sqrt(rho_d) * params
        head = block[..., :m] + np.sqrt(rho_p) * pilot
        return np.concatenate([head, block[..., m:]], axis=-1)

    @staticmethod
    def receive(
        transmit: np.ndarray, channel: np.ndarray, noise_var: float, rng: np.random.Generator
    ) -> np.ndarray:
        """Received row ``y = h^H X + w``."""
        if channel.shape[-1] != transmit.shape[-2]:
            raise DimensionError(
                f"Channel of length {channel.shape[-1]} cannot see {transmit.shape[-2]} antennas"
            )
        clean = np.einsum("...i,...ij->...j", channel.conj(), transmit)
        return clean + complex_normal(clean.shape, noise_var, rng)

    @staticmethod
    def remove_pilot(y_pilot: np.ndarray, pilot: np.ndarray) -> np.ndarray:
        """Right-multiply the pilot-phase observation by ``X_p^H``."""
        if y_pilot.shape[-1] != pilot.shape[-1]:
            raise DimensionError(
                f"Pilot phase of {y_pilot.shape[-1]} slots does not match a {pilot.shape} pilot"
            )
        return y_pilot @ hermitian(pilot)

    @classmethod
    def static_decode_pilot_phase(
        cls, y_pilot: np.ndarray, channel: np.ndarray, pilot: np.ndarray, rho_p: float
    ) -> np.ndarray:
        """Pilot removal for a device that knows its channel: ``sqrt(rho_p) h^H X^theta + w'``."""
        _check_powers(rho_p=rho_p)
        if channel.shape[-1] != pilot.shape[-1]:
            raise DimensionError("Channel and pilot disagree on the antenna count")
        return cls.remove_pilot(y_pilot, pilot)

    @staticmethod
    def demap_pilot_symbols(rotated: np.ndarray, channel: np.ndarray, rho_p: float) -> np.ndarray:
        """Pilot-phase symbol estimates from a static device's rotated observation."""
        m = channel.shape[-1]
        gain = np.sqrt(m * rho_p) * channel.conj()
        unmixed = rotated @ hermitian(unitary_mixing(m))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(np.abs(gain) > ERASURE_THRESHOLD, unmixed / gain, 0.0)

    @classmethod
    def mmse_virtual_channel(
        cls,
        y_pilot: np.ndarray,
        rho_p: float,
        noise_var: float,
        m: int,
        pilot: Optional[np.ndarray] = None,
        shrinkage: Optional[float] = None,
    ) -> VirtualChannelEstimate:
        """
        MMSE estimate of the virtual channel from the pilot phase of a sub-block.

        ``shrinkage`` replaces the MMSE coefficient ``alpha^2``; only fault-injection runs set it.
        """
        _check_powers(rho_p=rho_p)
        if noise_var <= 0:
            raise DomainError(f"Noise variance must be positive, got {noise_var}")
        if m < 1:
            raise DimensionError(f"Antenna count must be at least 1, got {m}")
        if rho_p == 0:
            return VirtualChannelEstimate(
                estimate=np.zeros(y_pilot.shape[:-1] + (m,), dtype=np.complex128),
                error_variance=float(m),
            )
        rotated = cls.remove_pilot(y_pilot, unitary_pilot(m) if pilot is None else pilot)
        alpha2 = m * rho_p / (m * rho_p + noise_var)
        if shrinkage is not None:
            alpha2 = shrinkage
        return VirtualChannelEstimate(
            estimate=alpha2 * rotated / np.sqrt(m * rho_p),
            error_variance=m * noise_var / (m * rho_p + noise_var),
        )

    @staticmethod
    def coherent_data_decode(
        y_data: np.ndarray,
        estimate: VirtualChannelEstimate,
        rho_d: float,
        noise_var: float,
    ) -> DataDecodeResult:
        """Divide each data slot by its estimated gain ``sqrt(M rho_d) f_bar u_j``."""
        _check_powers(rho_d=rho_d)
        m = estimate.m
        cols = np.arange(y_data.shape[-1]) % m
        projection = estimate.estimate @ unitary_mixing(m)[:, cols]
        erased = np.abs(projection) < ERASURE_THRESHOLD
        gain = np.sqrt(m * rho_d) * projection
        with np.errstate(divide="ignore", invalid="ignore"):
            symbols = np.where(erased | (gain == 0), 0.0, y_data / gain)
        return DataDecodeResult(
            symbols=symbols,
            erased=erased | (gain == 0),
            effective_noise_var=noise_var + rho_d * estimate.error_variance,
        )

    @classmethod
    def estimate_decoded_snr(
        cls,
        rho_p: float,
        rho_d: float,
        m: int,
        noise_var: float,
        trials: int,
        rng: np.random.Generator,
        chunk: Optional[int] = None,
    ) -> float:
        """
        Monte Carlo SNR of data slots decoded through the full symbol path.

        Signal power is measured on the estimated gain, everything else counts as noise. Trials
        are drawn ``chunk`` at a time and the power sums reduced in chunk order.
        """
        if trials < 1:
            raise DomainError(f"Monte Carlo needs at least one trial, got {trials}")
        chunk = chunk or MC_CHUNK
        t_k = 2 * m
        pilot = unitary_pilot(m)
        signal, residual, done = 0.0, 0.0, 0
        while done < trials:
            n = min(chunk, trials - done)
            channel = draw_rayleigh_channel(m, rng, n)
            symbols = complex_normal((n, t_k), 1.0, rng)
            embedding = cls.embed_symbols(symbols, m)
            block = cls.build_superposition_block(
                embedding.pilot_params, embedding.data_params, pilot, rho_p, rho_d
            )
            y = cls.receive(block, channel, noise_var, rng)
            estimate = cls.mmse_virtual_channel(y[:, :m], rho_p, noise_var, m, pilot)

            projection = estimate.estimate @ embedding.mixing[:, np.arange(t_k - m) % m]
            useful = np.sqrt(m * rho_d) * projection * symbols[:, m:]
            signal += float(np.sum(np.abs(useful) ** 2))
            residual += float(np.sum(np.abs(y[:, m:] - useful) ** 2))
            done += n
        return signal / residual

    @classmethod
    def pilot_phase_sinr(
        cls,
        scheme: Scheme,
        rho_p: float,
        rho_d: float,
        m: int,
        noise_var: float,
        trials: int,
        rng: np.random.Generator,
    ) -> float:
        """
        Monte Carlo SINR of the pilot phase after pilot removal.

        Product superposition keeps the whole pilot phase as channel-bearing signal; additive
        superposition only keeps the pilot part and leaves the parameters as interference.
        """
        pilot = unitary_pilot(m)
        channel = draw_rayleigh_channel(m, rng, trials)
        t_k = 2 * m
        if scheme == Scheme.ADDITIVE_SUPERPOSITION:
            params = complex_normal((trials, m, t_k), 1.0, rng)
            block = cls.build_additive_block(params, pilot, rho_p, rho_d)
            useful = np.sqrt(rho_p) * channel.conj()
        elif scheme == Scheme.PRODUCT_SUPERPOSITION:
            embedding = cls.embed_symbols(complex_normal((trials, t_k), 1.0, rng), m)
            block = cls.build_superposition_block(
                embedding.pilot_params, embedding.data_params, pilot, rho_p, rho_d
            )
            useful = np.sqrt(rho_p) * np.einsum(
                "...i,...ij->...j", channel.conj(), embedding.pilot_params
            )
        else:
            raise DomainError(f"Pilot-phase SINR needs a superposition scheme, not {scheme}")
        rotated = cls.remove_pilot(cls.receive(block, channel, noise_var, rng)[:, :m], pilot)
        residual = rotated - useful
        return float(np.mean(np.abs(useful) ** 2) / np.mean(np.abs(residual) ** 2))

