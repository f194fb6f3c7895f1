"""
Desk-scale learning problems trained by the federated loop.

Each problem works on a flat float64 parameter vector and exposes the mean loss and its
gradient over a ``Dataset`` (or a minibatch of it).
"""
import logging
from abc import ABC, abstractmethod
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from coherentfl.schemas.models import Dataset
from coherentfl.utils.errors import ConfigurationError, DimensionError

logger = logging.getLogger(__name__)


class LearningProblem(ABC):
    """Loss, gradient and accuracy of a model on a dataset."""

    name: str = "problem"

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @abstractmethod
    def loss(self, theta: np.ndarray, data: Dataset) -> float:
        ...

    @abstractmethod
    def gradient(self, theta: np.ndarray, data: Dataset) -> np.ndarray:
        ...

    def accuracy(self, theta: np.ndarray, data: Dataset) -> Optional[float]:
        return None

    def initial(self, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        return np.zeros(self.dim)

    def hessian_vector(
        self, theta: np.ndarray, data: Dataset, v: np.ndarray, eps: float = 1e-5
    ) -> np.ndarray:
        """Central finite-difference Hessian-vector product."""
        return (self.gradient(theta + eps * v, data) - self.gradient(theta - eps * v, data)) / (
            2 * eps
        )

    def smoothness(self) -> Optional[float]:
        """Exact smoothness constant when the problem knows it."""
        return None

    def optimum(
        self, datasets: Sequence[Dataset], weights: Sequence[float]
    ) -> Optional[Tuple[np.ndarray, float]]:
        """Closed-form minimizer and minimum of the weighted global loss, if available."""
        return None

    def _check(self, theta: np.ndarray) -> None:
        if theta.shape != (self.dim,):
            raise DimensionError(f"{self.name} expects {self.dim} parameters, got {theta.shape}")


class QuadraticProblem(LearningProblem):
    """Per-sample loss ``0.5 (theta - x)^T A (theta - x)`` with curvature ``A`` shared by all."""

    name = "quadratic"

    def __init__(self, curvature: np.ndarray):
        curvature = np.asarray(curvature, dtype=np.float64)
        self.curvature = np.diag(curvature) if curvature.ndim == 1 else curvature
        if self.curvature.shape[0] != self.curvature.shape[1]:
            raise DimensionError(f"Curvature must be square, got {self.curvature.shape}")
        if not np.allclose(self.curvature, self.curvature.T):
            raise DimensionError("Curvature must be symmetric")

    @property
    def dim(self) -> int:
        return self.curvature.shape[0]

    def loss(self, theta: np.ndarray, data: Dataset) -> float:
        self._check(theta)
        diff = theta[None, :] - data.features
        return float(0.5 * np.mean(np.einsum("ni,ij,nj->n", diff, self.curvature, diff)))

    def gradient(self, theta: np.ndarray, data: Dataset) -> np.ndarray:
        self._check(theta)
        return self.curvature @ (theta - data.features.mean(axis=0))

    def hessian_vector(self, theta, data, v, eps=1e-5):
        return self.curvature @ v

    def smoothness(self) -> float:
        return float(np.linalg.eigvalsh(self.curvature)[-1])

    def optimum(self, datasets, weights):
        theta = sum(w * ds.features.mean(axis=0) for w, ds in zip(weights, datasets))
        theta = np.asarray(theta, dtype=np.float64)
        value = sum(w * self.loss(theta, ds) for w, ds in zip(weights, datasets))
        return theta, float(value)


class LogisticProblem(LearningProblem):
    """Multinomial logistic regression with an L2 penalty on the weights."""

    name = "logistic"

    def __init__(self, features: int, classes: int, l2: float = 1e-3):
        self.features = features
        self.classes = classes
        self.l2 = l2

    @property
    def dim(self) -> int:
        return self.features * self.classes + self.classes

    def _unpack(self, theta: np.ndarray):
        self._check(theta)
        split = self.features * self.classes
        return theta[:split].reshape(self.features, self.classes), theta[split:]

    def _log_probs(self, theta: np.ndarray, data: Dataset) -> np.ndarray:
        weights, bias = self._unpack(theta)
        logits = data.features @ weights + bias
        return logits - logsumexp(logits, axis=1, keepdims=True)

    def loss(self, theta: np.ndarray, data: Dataset) -> float:
        weights, _ = self._unpack(theta)
        log_probs = self._log_probs(theta, data)
        nll = -np.mean(log_probs[np.arange(data.n), data.labels])
        return float(nll + 0.5 * self.l2 * np.sum(weights**2))

    def gradient(self, theta: np.ndarray, data: Dataset) -> np.ndarray:
        weights, _ = self._unpack(theta)
        residual = np.exp(self._log_probs(theta, data))
        residual[np.arange(data.n), data.labels] -= 1.0
        residual /= data.n
        grad_w = data.features.T @ residual + self.l2 * weights
        return np.concatenate([grad_w.ravel(), residual.sum(axis=0)])

    def accuracy(self, theta: np.ndarray, data: Dataset) -> float:
        return float(np.mean(np.argmax(self._log_probs(theta, data), axis=1) == data.labels))


class MlpProblem(LearningProblem):
    """One tanh hidden layer followed by a softmax output."""

    name = "mlp"

    def __init__(self, features: int, hidden: int, classes: int, l2: float = 1e-4):
        self.features = features
        self.hidden = hidden
        self.classes = classes
        self.l2 = l2
        self._shapes = [(features, hidden), (hidden,), (hidden, classes), (classes,)]

    @property
    def dim(self) -> int:
        return int(sum(np.prod(s) for s in self._shapes))

    def _unpack(self, theta: np.ndarray):
        self._check(theta)
        parts, start = [], 0
        for shape in self._shapes:
            size = int(np.prod(shape))
            parts.append(theta[start:start + size].reshape(shape))
            start += size
        return parts

    def _forward(self, theta: np.ndarray, data: Dataset):
        w1, b1, w2, b2 = self._unpack(theta)
        hidden = np.tanh(data.features @ w1 + b1)
        logits = hidden @ w2 + b2
        return hidden, logits - logsumexp(logits, axis=1, keepdims=True)

    def initial(self, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        rng = rng or np.random.default_rng(0)
        w1 = rng.normal(0.0, 1.0 / np.sqrt(self.features), size=self._shapes[0])
        w2 = rng.normal(0.0, 1.0 / np.sqrt(self.hidden), size=self._shapes[2])
        return np.concatenate(
            [w1.ravel(), np.zeros(self.hidden), w2.ravel(), np.zeros(self.classes)]
        )

    def loss(self, theta: np.ndarray, data: Dataset) -> float:
        w1, _, w2, _ = self._unpack(theta)
        _, log_probs = self._forward(theta, data)
        nll = -np.mean(log_probs[np.arange(data.n), data.labels])
        return float(nll + 0.5 * self.l2 * (np.sum(w1**2) + np.sum(w2**2)))

    def gradient(self, theta: np.ndarray, data: Dataset) -> np.ndarray:
        w1, _, w2, _ = self._unpack(theta)
        hidden, log_probs = self._forward(theta, data)
        delta_out = np.exp(log_probs)
        delta_out[np.arange(data.n), data.labels] -= 1.0
        delta_out /= data.n
        delta_hidden = (delta_out @ w2.T) * (1.0 - hidden**2)
        grads = [
            data.features.T @ delta_hidden + self.l2 * w1,
            delta_hidden.sum(axis=0),
            hidden.T @ delta_out + self.l2 * w2,
            delta_out.sum(axis=0),
        ]
        return np.concatenate([g.ravel() for g in grads])

    def accuracy(self, theta: np.ndarray, data: Dataset) -> float:
        _, log_probs = self._forward(theta, data)
        return float(np.mean(np.argmax(log_probs, axis=1) == data.labels))


def build_problem(kind: str, features: int, classes: int, **options) -> LearningProblem:
    """Problem factory used by the experiment configuration."""
    if kind == "quadratic":
        curvature = options.get("curvature")
        if curvature is None:
            curvature = np.linspace(1.0, options.get("condition", 4.0), features)
        return QuadraticProblem(curvature)
    if kind == "logistic":
        return LogisticProblem(features, classes, options.get("l2", 1e-3))
    if kind == "mlp":
        return MlpProblem(features, options.get("hidden", 16), classes, options.get("l2", 1e-4))
    raise ConfigurationError(f"Unknown model kind {kind!r}")
