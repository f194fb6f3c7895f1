"""
Per-round downlink planning: which slots carry pilots, what each device receives and at what noise.
"""
import logging

from coherentfl.schemas.models import (
    Cohort,
    DeviceClass,
    FrameLayout,
    MaskBits,
    RoundPlan,
    Scheme,
)
from coherentfl.services.analysis.bound_service import BoundService
from coherentfl.services.learning.impairment_service import ImpairmentService
from coherentfl.services.phy.fading_service import FadingService
from coherentfl.services.phy.power_service import PowerService

logger = logging.getLogger(__name__)


class RoundPlanner:
    """Turns a scheduled cohort into masks, noise levels and slot counts for one scheme."""

    def __init__(
        self,
        d: int,
        m: int,
        snr_linear: float,
        scheme: Scheme,
        noise_var: float = 1.0,
        flexible_placement: bool = False,
        fresh_block_full_decode: bool = False,
        offset: int = 0,
    ):
        self.d = d
        self.m = m
        self.snr_linear = snr_linear
        self.scheme = scheme
        self.noise_var = noise_var
        self.flexible_placement = flexible_placement
        self.fresh_block_full_decode = fresh_block_full_decode
        self.offset = offset

    @property
    def rho(self) -> float:
        return self.snr_linear * self.noise_var

    def plan(self, cohort: Cohort) -> RoundPlan:
        sigma2_static = 1.0 / self.snr_linear
        if not cohort.dynamic:
            return RoundPlan(
                cohort=cohort,
                layout=FrameLayout(frame_len=self.d, m=self.m),
                masks={p.id: MaskBits.full(self.d) for p in cohort.devices},
                noise={p.id: sigma2_static for p in cohort.devices},
                comm_cost_slots=self.d,
                pilot_overhead=0.0,
            )

        t_k = cohort.t_k
        layout = FadingService.frame_layout(
            cohort, self.m, self.d, self.flexible_placement, self.offset
        )
        if self.scheme == Scheme.CONVENTIONAL:
            allocation = PowerService.baseline_allocation(self.rho, t_k, self.m, self.noise_var)
        else:
            allocation = PowerService.optimal_allocation(self.rho, t_k, self.m, self.noise_var)
        noise_spec = ImpairmentService.scheme_noise_spec(self.scheme, self.snr_linear, allocation)

        slots = BoundService.downlink_slots(self.scheme, self.d, self.m, t_k)
        if self.scheme == Scheme.CONVENTIONAL:
            overhead = (slots - self.d) / slots
        else:
            overhead = layout.pilot_overhead

        masks = {}
        for profile in cohort.devices:
            if profile.is_static or self.scheme != Scheme.PRODUCT_SUPERPOSITION:
                masks[profile.id] = MaskBits.full(self.d)
                continue
            lost = None
            if self.fresh_block_full_decode:
                schedule = FadingService.coherence_schedule(profile, self.d)
                lost = FadingService.pilot_loss_subblocks(schedule, layout)
            masks[profile.id] = ImpairmentService.mask_from_layout(
                self.d, layout, DeviceClass.DYNAMIC, lost
            )

        noise = {p.id: noise_spec.for_class(p.device_class) for p in cohort.devices}
        logger.debug(
            f"Planned round: T_K={t_k} lambda={overhead:.3f} slots={slots} "
            f"sigma2_S={noise_spec.sigma2_static:.4g} sigma2_D={noise_spec.sigma2_dynamic:.4g}"
        )
        return RoundPlan(
            cohort=cohort,
            layout=layout,
            allocation=allocation,
            noise_spec=noise_spec,
            masks=masks,
            noise=noise,
            comm_cost_slots=slots,
            pilot_overhead=overhead,
        )
