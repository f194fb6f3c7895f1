"""
Shared fixtures: seeded generators and small configurations that run in a few seconds.
"""
import numpy as np
import pytest

from coherentfl.schemas.config import ExperimentConfig, parse_config
from coherentfl.schemas.models import Dataset, SeededRng


@pytest.fixture
def rng() -> np.random.Generator:
    return SeededRng(seed=20240611).generator()


@pytest.fixture
def make_rng():
    def _make(seed: int = 0, stream_id: int = 0) -> np.random.Generator:
        return SeededRng(seed=seed, stream_id=stream_id).generator()

    return _make


@pytest.fixture
def small_document() -> dict:
    """Two static and two dynamic devices, a logistic model with 18 parameters, M=2, T_K=5."""
    return {
        "seed": 3,
        "antennas": 2,
        "rounds": 3,
        "tau": 2,
        "batch_size": 8,
        "constant_probes": 2,
        "constant_trials": 3,
        "pool": {"n_static": 2, "n_dynamic": 2},
        "frame": {"lambda_target": 0.4},
        "dataset": {"n": 400, "features": 5, "classes": 3},
        "validation": {
            "antennas": [1, 2],
            "pilot_powers": [1.0],
            "trials": 100_000,
            "grid_antennas": [1, 2],
            "grid_coherence": [8],
            "grid_rho": [10.0],
            "grid_points": 1000,
        },
        "sweep": {"antennas": [2], "coherence": [6, 2], "rho": [1.0], "trials": 500},
    }


@pytest.fixture
def small_config(small_document, tmp_path) -> ExperimentConfig:
    return parse_config(small_document, {"output_dir": str(tmp_path / "out")})


@pytest.fixture
def quadratic_points() -> Dataset:
    return Dataset(features=[[1.0, 0.0], [3.0, 0.0], [-1.0, 0.0]], labels=[0, 0, 0], classes=1)
