"""
Complex linear-algebra helpers and random draws shared by the PHY services.

Every function accepts a ``numpy.random.Generator`` obtained from ``SeededRng.generator()``, and
every draw broadcasts over an optional leading ``batch`` shape for vectorised Monte Carlo audits.
"""
import logging
from typing import Tuple, Union

import numpy as np
from scipy.linalg import dft

from coherentfl.utils.errors import DimensionError, DomainError

logger = logging.getLogger(__name__)

Shape = Union[int, Tuple[int, ...]]


def _shape(batch: Shape, tail: int) -> Tuple[int, ...]:
    if isinstance(batch, int):
        batch = (batch,)
    return tuple(batch) + (tail,)


def complex_normal(shape: Tuple[int, ...], variance: float, rng: np.random.Generator) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples, real and imaginary parts variance/2 each."""
    if variance < 0:
        raise DomainError(f"Variance must be non-negative, got {variance}")
    if variance == 0:
        return np.zeros(shape, dtype=np.complex128)
    scale = np.sqrt(variance / 2.0)
    # One draw of 2x the size keeps the stream layout fixed for a given shape
    parts = rng.standard_normal(shape + (2,)) * scale
    return parts[..., 0] + 1j * parts[..., 1]


def draw_rayleigh_channel(m: int, rng: np.random.Generator, batch: Shape = ()) -> np.ndarray:
    """Rayleigh channel vector(s) with i.i.d. CN(0, 1) entries."""
    if m < 0:
        raise DimensionError(f"Antenna count must be non-negative, got {m}")
    return complex_normal(_shape(batch, m), 1.0, rng)


def awgn(length: int, variance: float, rng: np.random.Generator, batch: Shape = ()) -> np.ndarray:
    """Additive white complex Gaussian noise."""
    if length < 0:
        raise DimensionError(f"Noise length must be non-negative, got {length}")
    return complex_normal(_shape(batch, length), variance, rng)


def unitary_pilot(m: int) -> np.ndarray:
    """Normalized DFT pilot, entry (j, k) = exp(-2 pi i jk / M) / sqrt(M)."""
    if m < 1:
        raise DimensionError(f"Pilot needs at least one antenna, got {m}")
    return dft(m, scale="sqrtn").astype(np.complex128)


def unitary_mixing(m: int) -> np.ndarray:
    """Fixed mixing matrix used to embed model symbols: the inverse normalized DFT."""
    return unitary_pilot(m).conj()


def hermitian(x: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(x, -1, -2))


def frobenius_norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x, ord="fro"))


def is_unitary(x: np.ndarray, tol: float = 1e-12) -> bool:
    """Whether ``x x^H`` equals the identity within ``tol`` in Frobenius norm."""
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        return False
    return frobenius_norm(x @ hermitian(x) - np.eye(x.shape[0])) < tol
