"""
Parameter-level view of the downlink: masks, noise variances and model corruption.
"""
import logging
from typing import Optional

import numpy as np

from coherentfl.schemas.models import (
    DeviceClass,
    DownlinkNoiseSpec,
    FrameLayout,
    MaskBits,
    PowerAllocation,
    ReceivedModel,
    Scheme,
)
from coherentfl.services.phy.power_service import PowerService
from coherentfl.utils.errors import ConfigurationError, DimensionError, DomainError

logger = logging.getLogger(__name__)


class ImpairmentService:
    """Maps PHY statistics onto what each device receives of the global model."""

    @staticmethod
    def build_mask(d: int, m: int, t_k: int, device_class: DeviceClass) -> MaskBits:
        """
        Positional mask: parameter ``p`` travels in slot ``p``; dynamic devices lose the
        pilot-phase slots ``p mod T_K < M``.
        """
        if d < 1:
            raise DimensionError(f"Model dimension must be at least 1, got {d}")
        if device_class == DeviceClass.STATIC:
            return MaskBits.full(d)
        if t_k <= m:
            raise ConfigurationError(f"Coherence time {t_k} leaves no data phase for M={m}")
        return MaskBits(bits=np.arange(d) % t_k >= m)

    @staticmethod
    def mask_from_layout(
        d: int,
        layout: FrameLayout,
        device_class: DeviceClass,
        lost_subblocks: Optional[np.ndarray] = None,
    ) -> MaskBits:
        """
        Mask of a device under an explicit frame layout.

        Dynamic devices lose orphan slots and the pilot-phase slots of every pilot flagged in
        ``lost_subblocks`` (all pilots when omitted). Parameters beyond the frame wrap around.
        """
        if d < 1:
            raise DimensionError(f"Model dimension must be at least 1, got {d}")
        if device_class == DeviceClass.STATIC or not layout.pilot_starts + layout.orphan_ranges:
            return MaskBits.full(d)
        lost = np.zeros(layout.frame_len, dtype=bool)
        flags = (
            np.ones(len(layout.pilot_starts), dtype=bool)
            if lost_subblocks is None
            else np.asarray(lost_subblocks, dtype=bool)
        )
        if flags.size != len(layout.pilot_starts):
            raise DimensionError(
                f"{flags.size} sub-block flags for {len(layout.pilot_starts)} pilots"
            )
        for start, flagged in zip(layout.pilot_starts, flags):
            if flagged:
                lost[start:start + layout.m] = True
        lost |= layout.orphan_slot_mask()
        return MaskBits(bits=~lost[np.arange(d) % layout.frame_len])

    @staticmethod
    def noise_spec(
        snr_linear: float,
        est_error_var: float,
        m: int,
        rho_p: float,
        rho_d: float,
        noise_var: float = 1.0,
    ) -> DownlinkNoiseSpec:
        """
        Per-parameter noise of static and dynamic devices under product superposition.

        Static devices see ``1/SNR``; dynamic devices see the reciprocal effective SNR inflated by
        the per-entry estimation error.
        """
        if snr_linear <= 0:
            raise DomainError(f"SNR must be positive, got {snr_linear}")
        gamma = PowerService.effective_snr(rho_p, rho_d, m, noise_var)
        if gamma <= 0:
            raise ConfigurationError("Dynamic devices receive no data power")
        return ImpairmentService._ordered(
            1.0 / snr_linear, (1.0 / gamma) * (1.0 + est_error_var / m)
        )

    @classmethod
    def scheme_noise_spec(
        cls, scheme: Scheme, snr_linear: float, alloc: PowerAllocation
    ) -> DownlinkNoiseSpec:
        """Static/dynamic parameter noise for each signaling scheme at the given powers."""
        m, s2 = alloc.m, alloc.noise_var
        if scheme == Scheme.PRODUCT_SUPERPOSITION:
            error_var = m * s2 / (m * alloc.rho_p + s2)
            return cls.noise_spec(snr_linear, error_var, m, alloc.rho_p, alloc.rho_d, s2)
        if scheme == Scheme.CONVENTIONAL:
            gamma = PowerService.baseline_effective_snr(alloc.rho_p, alloc.rho_d, m, s2)
            entry_error = s2 / (alloc.rho_p + s2)
        else:
            interference = s2 + m * alloc.rho_d
            gamma = PowerService.additive_effective_snr(alloc.rho_p, alloc.rho_d, m, s2)
            entry_error = interference / (alloc.rho_p + interference)
        return cls._ordered(1.0 / snr_linear, (1.0 / gamma) * (1.0 + entry_error))

    @staticmethod
    def _ordered(sigma2_static: float, sigma2_dynamic: float) -> DownlinkNoiseSpec:
        if not sigma2_static < sigma2_dynamic:
            raise ConfigurationError(
                f"Static noise {sigma2_static:.6g} is not below dynamic noise {sigma2_dynamic:.6g}"
            )
        return DownlinkNoiseSpec(sigma2_static=sigma2_static, sigma2_dynamic=sigma2_dynamic)

    @staticmethod
    def corrupt_broadcast(
        theta: np.ndarray, mask: MaskBits, sigma2: float, rng: np.random.Generator
    ) -> ReceivedModel:
        """Received support values ``theta_i + e_i`` with ``e_i ~ N(0, sigma2)``."""
        if sigma2 < 0:
            raise DomainError(f"Noise variance must be non-negative, got {sigma2}")
        if theta.shape != (mask.d,):
            raise DimensionError(f"Model of shape {theta.shape} does not match mask of {mask.d}")
        support = theta[mask.bits]
        if sigma2 > 0:
            support = support + rng.normal(0.0, np.sqrt(sigma2), size=support.shape)
        return ReceivedModel(values=np.array(support, dtype=np.float64), mask=mask)
