"""
Block-fading channels, coherence schedules and coherence-aware device scheduling.
"""
import logging
from collections import Counter
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from coherentfl.schemas.models import (
    STATIC_COHERENCE,
    CoherenceSchedule,
    Cohort,
    DeviceClass,
    DeviceProfile,
    FrameLayout,
)
from coherentfl.utils.errors import ConfigurationError, SchedulingError
from coherentfl.utils.phymath import Shape, draw_rayleigh_channel

logger = logging.getLogger(__name__)


class FadingService:
    """Channel processes and the frame structure they impose."""

    @staticmethod
    def coherence_schedule(
        profile: DeviceProfile, frame_len: int, offset: int = 0
    ) -> CoherenceSchedule:
        """
        Block boundaries of a device over one frame.

        ``offset`` is how many slots of the device's first block already elapsed before the frame
        started, so its first boundary inside the frame lands at ``T_k - offset``.
        """
        if frame_len < 1:
            raise ConfigurationError(f"Frame length must be at least 1 slot, got {frame_len}")
        t = profile.coherence_time
        if not 0 <= offset < t:
            raise ConfigurationError(f"Offset {offset} outside [0, {t}) for device {profile.id}")
        first = t - offset if offset else t
        boundaries = [0] + list(range(first, frame_len, t)) if first < frame_len else [0]
        return CoherenceSchedule(
            device_id=profile.id,
            coherence_time=t,
            frame_len=frame_len,
            offset=offset,
            boundaries=tuple(boundaries),
        )

    @classmethod
    def channel_process(
        cls,
        profile: DeviceProfile,
        m: int,
        frame_len: int,
        rng: np.random.Generator,
        offset: int = 0,
        batch: Shape = (),
    ) -> List[Tuple[range, np.ndarray]]:
        """One fresh CN(0, I) channel per coherence block, constant inside the block."""
        schedule = cls.coherence_schedule(profile, frame_len, offset)
        return [(block, draw_rayleigh_channel(m, rng, batch)) for block in schedule.blocks()]

    @staticmethod
    def schedule_devices(
        pool: Sequence[DeviceProfile], k_total: int, k_static: int, rng: np.random.Generator
    ) -> Cohort:
        """
        Pick the round's participants.

        The first ``k_static`` static devices (by id) always participate; the remaining
        ``k_total - k_static`` slots go to dynamic devices drawn uniformly without replacement.
        """
        if k_static < 0 or k_total < k_static:
            raise ConfigurationError(f"Invalid cohort: k_total={k_total}, k_static={k_static}")
        static = sorted((p for p in pool if p.is_static), key=lambda p: p.id)
        dynamic = sorted((p for p in pool if not p.is_static), key=lambda p: p.id)
        k_dynamic = k_total - k_static
        if len(static) < k_static:
            raise SchedulingError(
                f"Pool holds {len(static)} static devices, {k_static} requested", "static"
            )
        if len(dynamic) < k_dynamic:
            raise SchedulingError(
                f"Pool holds {len(dynamic)} dynamic devices, {k_dynamic} requested", "dynamic"
            )

        chosen: List[DeviceProfile] = []
        if k_dynamic:
            index = rng.choice(len(dynamic), size=k_dynamic, replace=False)
            chosen = [dynamic[i] for i in sorted(index)]
        chosen.sort(key=lambda p: (-p.coherence_time, p.id))

        counts = Counter(p.coherence_time for p in chosen)
        repeated = sorted(t for t, c in counts.items() if c > 1)
        if repeated:
            logger.warning(f"Scheduled dynamic devices share coherence times {repeated}")

        return Cohort(static=tuple(static[:k_static]), dynamic=tuple(chosen))

    @classmethod
    def frame_layout(
        cls,
        cohort: Cohort,
        m: int,
        frame_len: Optional[int] = None,
        flexible_placement: bool = False,
        offset: int = 0,
    ) -> FrameLayout:
        """
        Pilot and orphan slots of a downlink frame.

        Pilots open every coherence block of the fastest dynamic device. A block shorter than or
        equal to ``m`` slots cannot hold a pilot plus data, so it is sent data-only and becomes an
        orphan that dynamic devices cannot decode. Without flexible placement the frame is aligned
        with that device's blocks and ``offset`` is ignored.
        """
        t_k = cohort.t_k
        if t_k is None:
            return FrameLayout(frame_len=frame_len or 1, m=m)
        if m >= t_k:
            raise ConfigurationError(
                f"Pilot of {m} slots cannot fit a coherence block of {t_k} slots"
            )
        frame_len = frame_len or t_k
        fastest = cohort.dynamic[-1]
        schedule = cls.coherence_schedule(
            fastest, frame_len, offset % t_k if flexible_placement else 0
        )

        pilots, orphans = [], []
        for block in schedule.blocks():
            if len(block) > m:
                pilots.append(block.start)
            else:
                orphans.append((block.start, block.stop))
        return FrameLayout(
            frame_len=frame_len,
            m=m,
            t_k=t_k,
            pilot_starts=tuple(pilots),
            orphan_ranges=tuple(orphans),
        )

    @classmethod
    def pilot_duty_cycle(
        cls,
        cohort: Cohort,
        m: int,
        frame_len: Optional[int] = None,
        flexible_placement: bool = False,
        offset: int = 0,
    ) -> float:
        """
        Fraction of the frame's slots that carry a pilot.

        Counts the first ``m`` slots of every sub-block laid out by ``frame_layout``. A trailing
        block of at most ``m`` slots carries no pilot, so it adds to the frame length only.
        """
        if not cohort.devices:
            raise ConfigurationError("Cannot compute pilot overhead of an empty cohort")
        if not cohort.dynamic:
            return 0.0
        return cls.frame_layout(cohort, m, frame_len, flexible_placement, offset).pilot_overhead

    @staticmethod
    def pilot_loss_subblocks(schedule: CoherenceSchedule, layout: FrameLayout) -> np.ndarray:
        """
        Flag, per pilot of ``layout``, whether the device's channel changed since its last estimate.

        The first pilot is always flagged; a later one is flagged when a block boundary of the
        device falls after the previous pilot and at or before this one.
        """
        starts = np.asarray(layout.pilot_starts, dtype=np.int64)
        if starts.size == 0:
            return np.zeros(0, dtype=bool)
        bounds = np.asarray(schedule.boundaries[1:], dtype=np.int64)
        changed = np.ones(starts.size, dtype=bool)
        for i in range(1, starts.size):
            changed[i] = bool(np.any((bounds > starts[i - 1]) & (bounds <= starts[i])))
        return changed

    @staticmethod
    def pool_from_lambda(
        m: int,
        lambda_target: float,
        n_static: int,
        n_dynamic: int,
        dataset_sizes: Union[int, Sequence[int]] = 0,
    ) -> List[DeviceProfile]:
        """
        Device pool whose fastest dynamic device gives pilot overhead ``lambda_target``.

        Its coherence time is ``round(M / lambda)``; the other dynamic devices get distinct
        ``T_K + j*M``. A zero target makes every device static.
        """
        if not 0 <= lambda_target < 1:
            raise ConfigurationError(f"Pilot overhead must lie in [0, 1), got {lambda_target}")
        total = n_static + n_dynamic
        sizes = [dataset_sizes] * total if isinstance(dataset_sizes, int) else list(dataset_sizes)
        if len(sizes) != total:
            raise ConfigurationError(f"Expected {total} dataset sizes, got {len(sizes)}")

        if lambda_target == 0:
            return [
                DeviceProfile(id=i, device_class=DeviceClass.STATIC, dataset_size=sizes[i])
                for i in range(total)
            ]
        t_k = int(round(m / lambda_target))
        if t_k <= m:
            raise ConfigurationError(
                f"Pilot overhead {lambda_target} leaves no data phase for M={m}"
            )
        pool = [
            DeviceProfile(id=i, device_class=DeviceClass.STATIC, dataset_size=sizes[i])
            for i in range(n_static)
        ]
        for j in range(n_dynamic):
            pool.append(
                DeviceProfile(
                    id=n_static + j,
                    device_class=DeviceClass.DYNAMIC,
                    coherence_time=min(t_k + j * m, STATIC_COHERENCE - 1),
                    dataset_size=sizes[n_static + j],
                )
            )
        return pool
