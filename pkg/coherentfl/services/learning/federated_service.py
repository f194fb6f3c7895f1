"""
Federated averaging over an impaired downlink.
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from coherentfl.schemas.models import (
    Dataset,
    DeviceProfile,
    DeviceState,
    FillStrategy,
    MaskBits,
    Purpose,
    ReceivedModel,
    RoundPlan,
    RoundRecord,
    RoundTrace,
    SeededRng,
    TrainConfig,
    TrainingResult,
)
from coherentfl.services.learning.impairment_service import ImpairmentService
from coherentfl.services.learning.models import LearningProblem
from coherentfl.services.learning.planner import RoundPlanner
from coherentfl.services.phy.fading_service import FadingService
from coherentfl.utils.errors import ConfigurationError, DimensionError, TrainingDivergenceError
from coherentfl.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

WEIGHT_TOLERANCE = 1e-12


def _check_weights(weights: Sequence[float], count: int) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (count,):
        raise DimensionError(f"Expected {count} weights, got {weights.shape}")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > WEIGHT_TOLERANCE:
        raise ConfigurationError("Aggregation weights must be non-negative and sum to 1")
    return weights


class FederatedService:
    """Global loss, local training, partial-model filling and aggregation for one problem."""

    def __init__(self, problem: LearningProblem):
        self.problem = problem

    @staticmethod
    def data_weights(datasets: Sequence[Dataset]) -> np.ndarray:
        """Weights ``B_k / B`` of the given datasets."""
        if not datasets:
            raise ConfigurationError("At least one dataset is required")
        sizes = np.array([ds.n for ds in datasets], dtype=np.float64)
        return sizes / sizes.sum()

    def global_loss(
        self, theta: np.ndarray, datasets: Sequence[Dataset], weights: Sequence[float]
    ) -> float:
        """Weighted average of the local empirical losses."""
        if not datasets:
            raise ConfigurationError("At least one dataset is required")
        weights = _check_weights(weights, len(datasets))
        return float(sum(w * self.problem.loss(theta, ds) for w, ds in zip(weights, datasets)))

    def global_gradient(
        self, theta: np.ndarray, datasets: Sequence[Dataset], weights: Sequence[float]
    ) -> np.ndarray:
        if not datasets:
            raise ConfigurationError("At least one dataset is required")
        weights = _check_weights(weights, len(datasets))
        grad = np.zeros(self.problem.dim)
        for w, ds in zip(weights, datasets):
            grad += w * self.problem.gradient(theta, ds)
        return grad

    def gradient_norm_sq(
        self, theta: np.ndarray, datasets: Sequence[Dataset], weights: Sequence[float]
    ) -> float:
        return float(np.sum(self.global_gradient(theta, datasets, weights) ** 2))

    def local_sgd(
        self,
        theta_init: np.ndarray,
        dataset: Dataset,
        tau: int,
        eta: float,
        batch: int,
        rng: np.random.Generator,
        device_id: Optional[int] = None,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """``tau`` minibatch SGD steps; returns the final model and its change from the start."""
        if batch < 1 or batch > dataset.n:
            raise ConfigurationError(
                f"Batch size {batch} must lie in [1, {dataset.n}] for device {device_id}"
            )
        theta = np.array(theta_init, dtype=np.float64)
        for step in range(tau):
            if batch == dataset.n:
                minibatch = dataset
            else:
                minibatch = dataset.subset(rng.choice(dataset.n, batch, replace=False))
            grad = self.problem.gradient(theta, minibatch)
            if not np.all(np.isfinite(grad)):
                norm = float(np.linalg.norm(grad))
                logger.error(f"Non-finite gradient on device {device_id} at step {step}")
                raise TrainingDivergenceError(
                    f"Local SGD diverged on device {device_id} at step {step}",
                    device_id,
                    step,
                    norm,
                )
            theta -= eta * grad
        return theta, theta - theta_init

    @staticmethod
    def fill_zero(received: ReceivedModel) -> np.ndarray:
        """Zero-filling: unreceived parameters are set to zero."""
        theta = np.zeros(received.mask.d)
        theta[received.mask.bits] = received.values
        return theta

    @staticmethod
    def fill_plmf(received: ReceivedModel, prev_local: np.ndarray) -> np.ndarray:
        """Previous-local-model filling: unreceived parameters come from the last local model."""
        if prev_local.shape != (received.mask.d,):
            raise DimensionError(
                f"Previous local model of shape {prev_local.shape} does not match "
                f"mask of {received.mask.d}"
            )
        theta = np.array(prev_local, dtype=np.float64)
        theta[received.mask.bits] = received.values
        return theta

    @staticmethod
    def aggregate(updates: Sequence[np.ndarray], weights: Sequence[float]) -> np.ndarray:
        """Weighted sum of the device updates, accumulated in the given order."""
        if not updates:
            raise ConfigurationError("Nothing to aggregate")
        weights = _check_weights(weights, len(updates))
        delta = np.zeros_like(updates[0], dtype=np.float64)
        for w, update in zip(weights, updates):
            delta += w * update
        return delta

    def run_round(
        self,
        theta: np.ndarray,
        states: Dict[int, DeviceState],
        datasets: Dict[int, Dataset],
        config: TrainConfig,
        plan: RoundPlan,
        round_index: int,
        rng: SeededRng,
    ) -> np.ndarray:
        """
        One broadcast / local-training / aggregation round.

        Devices run in ascending id order and each draws from its own streams, so the aggregate
        does not depend on how the work is scheduled. Returns the next global model and updates
        every participant's previous local model.
        """
        devices = list(plan.cohort.devices)
        if not devices:
            raise ConfigurationError("Round has no participants")

        def train_device(profile: DeviceProfile) -> Tuple[np.ndarray, np.ndarray]:
            mask: MaskBits = plan.masks[profile.id]
            received = ImpairmentService.corrupt_broadcast(
                theta,
                mask,
                plan.noise[profile.id],
                rng.stream(profile.id, round_index, Purpose.NOISE).generator(),
            )
            if config.fill_strategy == FillStrategy.PLMF:
                start = self.fill_plmf(received, states[profile.id].prev_local)
            else:
                start = self.fill_zero(received)
            return self.local_sgd(
                start,
                datasets[profile.id],
                config.tau,
                config.eta_local,
                min(config.batch_size, datasets[profile.id].n),
                rng.stream(profile.id, round_index, Purpose.SGD).generator(),
                profile.id,
            )

        results = ordered_map(train_device, devices)
        for profile, (local, _) in zip(devices, results):
            states[profile.id].prev_local = local

        sizes = np.array([datasets[p.id].n for p in devices], dtype=np.float64)
        delta = self.aggregate([update for _, update in results], sizes / sizes.sum())
        return theta + delta

    def train(
        self,
        pool: Sequence[DeviceProfile],
        datasets: Dict[int, Dataset],
        config: TrainConfig,
        planner: RoundPlanner,
        seed: int,
        k_total: int,
        k_static: int,
        test: Optional[Dataset] = None,
        theta0: Optional[np.ndarray] = None,
    ) -> TrainingResult:
        """
        Run ``config.rounds`` rounds and record the trace.

        Loss, gradient norm and model difference describe the model broadcast in each round,
        computed over the datasets of the whole pool; accuracy is measured on ``test`` after
        aggregation.
        """
        rng = SeededRng(seed=seed)
        members = sorted(pool, key=lambda p: p.id)
        all_data = [datasets[p.id] for p in members]
        weights = self.data_weights(all_data)
        theta = (
            np.array(theta0, dtype=np.float64)
            if theta0 is not None
            else self.problem.initial(rng.stream(0, 0, Purpose.DATA).generator())
        )
        if theta.shape != (self.problem.dim,):
            raise DimensionError(f"Initial model has shape {theta.shape}")
        states = {p.id: DeviceState(profile=p, prev_local=theta.copy()) for p in members}

        trace = RoundTrace()
        broadcasts: List[np.ndarray] = []
        max_noise = 0.0
        previous = theta
        for t in range(config.rounds):
            cohort = FadingService.schedule_devices(
                members, k_total, k_static, rng.stream(0, t, Purpose.SCHEDULE).generator()
            )
            plan = planner.plan(cohort)
            max_noise = max(max_noise, max(plan.noise.values()))
            loss = self.global_loss(theta, all_data, weights)
            grad_sq = self.gradient_norm_sq(theta, all_data, weights)
            diff_sq = float(np.sum((theta - previous) ** 2))
            broadcasts.append(theta.copy())

            next_theta = self.run_round(theta, states, datasets, config, plan, t, rng)
            accuracy = self.problem.accuracy(next_theta, test) if test is not None else None
            record = RoundRecord(
                round=t,
                global_loss=loss,
                grad_norm_sq=grad_sq,
                model_diff_sq=diff_sq,
                test_accuracy=accuracy,
                comm_cost_slots=plan.comm_cost_slots,
                parameter_slots=self.problem.dim,
                pilot_overhead=plan.pilot_overhead,
                scheme=config.scheme,
                fill_strategy=config.fill_strategy,
                seed=seed,
            )
            trace.records.append(record)
            logger.debug(
                f"Round {t}: loss={loss:.6g} grad_sq={grad_sq:.4g} accuracy={accuracy}"
            )
            previous, theta = theta, next_theta

        logger.info(
            f"Finished {config.rounds} rounds ({config.scheme.value}/{config.fill_strategy.value}, "
            f"seed {seed}): final loss {trace.records[-1].global_loss:.6g}"
        )
        return TrainingResult(
            trace=trace, theta=theta, broadcasts=broadcasts, max_parameter_noise=max_noise
        )

    def centralized_optimum(
        self,
        datasets: Sequence[Dataset],
        weights: Sequence[float],
        theta0: np.ndarray,
        eta: float,
        steps: int,
    ) -> Tuple[np.ndarray, float]:
        """
        Minimum of the global loss: closed form when the problem has one, else full-batch
        gradient descent for ``steps`` steps.
        """
        exact = self.problem.optimum(datasets, weights)
        if exact is not None:
            return exact
        theta = np.array(theta0, dtype=np.float64)
        for _ in range(steps):
            theta -= eta * self.global_gradient(theta, datasets, weights)
        return theta, self.global_loss(theta, datasets, weights)
