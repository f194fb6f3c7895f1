import numpy as np
import pytest

from coherentfl.schemas.models import Purpose, SeededRng
from coherentfl.utils.errors import DimensionError, DomainError
from coherentfl.utils.phymath import (
    awgn,
    draw_rayleigh_channel,
    frobenius_norm,
    hermitian,
    is_unitary,
    unitary_mixing,
    unitary_pilot,
)


class TestRayleighChannel:
    def test_zero_antennas_gives_empty_vector(self, rng):
        assert draw_rayleigh_channel(0, rng).shape == (0,)

    def test_moments(self, rng):
        draws = draw_rayleigh_channel(8, rng, 100_000)
        mean = draws.mean(axis=0)
        var = np.mean(np.abs(draws - mean) ** 2, axis=0)
        assert np.all(np.abs(mean) < 0.02)
        assert np.all((var > 0.98) & (var < 1.02))

    def test_same_stream_same_draws(self):
        a = draw_rayleigh_channel(4, SeededRng(seed=9, stream_id=77).generator())
        b = draw_rayleigh_channel(4, SeededRng(seed=9, stream_id=77).generator())
        np.testing.assert_array_equal(a, b)

    def test_different_streams_differ(self):
        a = draw_rayleigh_channel(4, SeededRng(seed=9, stream_id=1).generator())
        b = draw_rayleigh_channel(4, SeededRng(seed=9, stream_id=2).generator())
        assert not np.allclose(a, b)


class TestPilot:
    def test_single_antenna(self):
        np.testing.assert_array_equal(unitary_pilot(1), np.array([[1.0 + 0j]]))

    def test_unitary(self):
        pilot = unitary_pilot(8)
        assert frobenius_norm(pilot @ hermitian(pilot) - np.eye(8)) < 1e-12
        assert is_unitary(pilot)

    def test_column_norms(self):
        norms = np.linalg.norm(unitary_pilot(4), axis=0)
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)

    def test_mixing_is_unitary(self):
        assert is_unitary(unitary_mixing(5))

    def test_zero_antennas_rejected(self):
        with pytest.raises(DimensionError):
            unitary_pilot(0)

    def test_is_unitary_rejects_non_square(self):
        assert not is_unitary(np.ones((2, 3)))


class TestAwgn:
    def test_zero_variance(self, rng):
        np.testing.assert_array_equal(awgn(16, 0.0, rng), np.zeros(16))

    def test_variance(self, rng):
        noise = awgn(100_000, 2.0, rng)
        assert abs(np.var(noise) - 2.0) < 0.04

    def test_empty(self, rng):
        assert awgn(0, 1.0, rng).shape == (0,)

    def test_negative_variance(self, rng):
        with pytest.raises(DomainError):
            awgn(4, -1.0, rng)


class TestStreams:
    def test_stream_id_layout(self):
        derived = SeededRng(seed=5).stream(device=2, round_index=7, purpose=Purpose.SGD)
        assert derived.seed == 5
        assert derived.stream_id == (3 << 32) | (7 << 8) | int(Purpose.SGD)

    def test_purposes_give_distinct_streams(self):
        root = SeededRng(seed=5)
        ids = {root.stream(0, 0, purpose).stream_id for purpose in Purpose}
        assert len(ids) == len(Purpose)

    def test_out_of_range_round(self):
        with pytest.raises(ValueError):
            SeededRng(seed=1).stream(0, 2**24, Purpose.NOISE)

    @pytest.mark.parametrize("purpose", [Purpose.CHANNEL, Purpose.NOISE])
    def test_sibling_streams_are_uncorrelated(self, purpose):
        n = 100_000
        root = SeededRng(seed=12)
        a = draw_rayleigh_channel(n, root.stream(0, 0, purpose).generator())
        b = draw_rayleigh_channel(n, root.stream(1, 0, purpose).generator())
        r = np.vdot(b, a) / np.sqrt(np.vdot(a, a).real * np.vdot(b, b).real)
        assert abs(r) < 3 / np.sqrt(n)
