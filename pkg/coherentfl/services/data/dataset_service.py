"""
Synthetic datasets, federated partitioning and IDX ingestion.
"""
import logging
from typing import List, Optional, Tuple

import numpy as np

from coherentfl.schemas.models import Dataset, PartitionMode, SeededRng
from coherentfl.services.data.idx import IdxTensor, load_idx_file
from coherentfl.utils.errors import ConfigurationError, DimensionError

logger = logging.getLogger(__name__)


class DatasetService:
    """Builds the datasets a federated run trains and evaluates on."""

    @staticmethod
    def synthetic_classification(
        n: int, p: int, classes: int, separation: float, seed: int
    ) -> Dataset:
        """
        Balanced Gaussian class clusters.

        Class means are random unit directions scaled by ``separation``; samples add unit
        isotropic noise, so ``separation`` is measured in noise standard deviations.
        """
        if classes < 2 or n < classes:
            raise ConfigurationError(f"Need n >= classes >= 2, got n={n}, classes={classes}")
        rng = SeededRng(seed=seed).generator()
        directions = rng.standard_normal((classes, p))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        means = separation * directions
        labels = rng.permutation(np.arange(n) % classes)
        features = means[labels] + rng.standard_normal((n, p))
        return Dataset(features=features, labels=labels, classes=classes)

    @staticmethod
    def synthetic_quadratic(
        n: int, p: int, clusters: int, spread: float, seed: int
    ) -> Dataset:
        """Point clouds around ``clusters`` centers; labels record the cluster of each point."""
        if clusters < 1 or n < clusters:
            raise ConfigurationError(f"Need n >= clusters >= 1, got n={n}, clusters={clusters}")
        rng = SeededRng(seed=seed).generator()
        centers = rng.standard_normal((clusters, p))
        labels = rng.permutation(np.arange(n) % clusters)
        features = centers[labels] + spread * rng.standard_normal((n, p))
        return Dataset(features=features, labels=labels, classes=clusters)

    @staticmethod
    def partition(
        dataset: Dataset,
        k: int,
        mode: PartitionMode = PartitionMode.IID,
        shards_per_device: int = 2,
        seed: int = 0,
    ) -> List[Dataset]:
        """
        Split a dataset across ``k`` devices.

        ``iid`` shuffles and splits evenly. ``label-shard`` sorts by label, cuts
        ``k * shards_per_device`` contiguous shards and deals them out in random order.
        """
        if k < 1:
            raise ConfigurationError(f"Need at least one device, got {k}")
        if dataset.n < k:
            raise ConfigurationError(f"Cannot split {dataset.n} samples across {k} devices")
        rng = SeededRng(seed=seed).generator()
        if mode == PartitionMode.IID:
            parts = np.array_split(rng.permutation(dataset.n), k)
        else:
            shards = k * shards_per_device
            if dataset.n < shards:
                raise ConfigurationError(f"Cannot cut {dataset.n} samples into {shards} shards")
            order = np.argsort(dataset.labels, kind="stable")
            pieces = np.array_split(order, shards)
            dealt = rng.permutation(shards)
            parts = []
            for i in range(k):
                mine = dealt[i * shards_per_device:(i + 1) * shards_per_device]
                parts.append(np.concatenate([pieces[s] for s in mine]))
        return [dataset.subset(np.sort(index)) for index in parts]

    @staticmethod
    def train_test_split(
        dataset: Dataset, test_fraction: float, seed: int
    ) -> Tuple[Dataset, Dataset]:
        if not 0 < test_fraction < 1:
            raise ConfigurationError(f"Test fraction must lie in (0, 1), got {test_fraction}")
        order = SeededRng(seed=seed).generator().permutation(dataset.n)
        n_test = max(1, int(round(test_fraction * dataset.n)))
        if n_test >= dataset.n:
            raise ConfigurationError("Test split leaves no training samples")
        return dataset.subset(np.sort(order[n_test:])), dataset.subset(np.sort(order[:n_test]))

    @staticmethod
    def from_idx(
        images: IdxTensor,
        labels: IdxTensor,
        normalize: bool = True,
        classes: Optional[int] = None,
    ) -> Dataset:
        """Flatten image tensors into feature rows; ``normalize`` maps bytes onto [0, 1]."""
        if labels.data.ndim != 1:
            raise DimensionError(f"Label tensor must be 1-D, got shape {labels.shape}")
        if images.shape[0] != labels.shape[0]:
            raise DimensionError(
                f"{images.shape[0]} images but {labels.shape[0]} labels"
            )
        if labels.shape[0] == 0:
            raise ConfigurationError("IDX files hold no samples")
        features = images.data.reshape(images.shape[0], -1).astype(np.float64)
        if normalize:
            features /= 255.0
        label_values = labels.data.astype(np.int64)
        return Dataset(
            features=features,
            labels=label_values,
            classes=classes or int(label_values.max()) + 1,
        )

    @classmethod
    def load_idx_dataset(
        cls, images_path: str, labels_path: str, normalize: bool = True
    ) -> Dataset:
        dataset = cls.from_idx(load_idx_file(images_path), load_idx_file(labels_path), normalize)
        logger.info(f"Loaded {dataset.n} samples with {dataset.p} features from {images_path}")
        return dataset
