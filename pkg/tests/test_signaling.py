import numpy as np
import pytest

from coherentfl.schemas.models import Scheme, VirtualChannelEstimate
from coherentfl.services.phy.power_service import PowerService
from coherentfl.services.phy.signaling_service import SignalingService
from coherentfl.utils.errors import DimensionError, DomainError, PowerConstraintError
from coherentfl.utils.phymath import (
    complex_normal,
    draw_rayleigh_channel,
    hermitian,
    unitary_mixing,
    unitary_pilot,
)


def superposed(m: int, n: int, rng, rho_p: float = 1.0, rho_d: float = 1.0):
    """Channels, embedding and transmitted blocks of ``n`` random sub-blocks of length 2M."""
    channel = draw_rayleigh_channel(m, rng, n)
    symbols = complex_normal((n, 2 * m), 1.0, rng)
    embedding = SignalingService.embed_symbols(symbols, m)
    block = SignalingService.build_superposition_block(
        embedding.pilot_params, embedding.data_params, unitary_pilot(m), rho_p, rho_d
    )
    return channel, symbols, embedding, block


class TestBaselineBlock:
    def test_zero_data_power(self, rng):
        block = SignalingService.build_baseline_block(
            complex_normal((2, 4), 1.0, rng), unitary_pilot(2), 1.0, 0.0, 6
        )
        np.testing.assert_array_equal(block[:, 2:], 0)

    def test_equal_powers_spend_the_budget(self):
        pilot = unitary_pilot(2)
        block = SignalingService.build_baseline_block(
            np.hstack([pilot, pilot]), pilot, 1.5, 1.5, 6, rho=1.5
        )
        assert np.sum(np.abs(block) ** 2) == pytest.approx(1.5 * 6, abs=1e-12)

    def test_pilot_columns(self, rng):
        pilot = unitary_pilot(3)
        block = SignalingService.build_baseline_block(
            complex_normal((3, 5), 1.0, rng), pilot, 2.0, 0.5, 8
        )
        np.testing.assert_allclose(block[:, :3], np.sqrt(2.0) * pilot, atol=1e-15, rtol=0)

    def test_power_violation_reports_excess(self, rng):
        with pytest.raises(PowerConstraintError) as info:
            SignalingService.build_baseline_block(
                complex_normal((2, 4), 1.0, rng), unitary_pilot(2), 2.0, 2.0, 6, rho=1.0
            )
        assert info.value.excess == pytest.approx(6.0)

    def test_data_shape(self, rng):
        with pytest.raises(DimensionError):
            SignalingService.build_baseline_block(
                complex_normal((2, 3), 1.0, rng), unitary_pilot(2), 1.0, 1.0, 6
            )


class TestSuperpositionBlock:
    def test_identity_parameters_give_plain_pilots(self, rng):
        pilot = unitary_pilot(3)
        block = SignalingService.build_superposition_block(
            np.eye(3), complex_normal((3, 2), 1.0, rng), pilot, 2.0, 1.0
        )
        np.testing.assert_allclose(block[:, :3], np.sqrt(2.0) * pilot, atol=1e-15)

    def test_unitary_parameters_keep_pilot_gram(self, rng):
        phases = np.exp(2j * np.pi * rng.random(4))
        params = np.diag(phases) @ unitary_mixing(4)
        block = SignalingService.build_superposition_block(
            params, np.zeros((4, 1)), unitary_pilot(4), 0.7, 1.0
        )
        gram = block[:, :4] @ hermitian(block[:, :4])
        np.testing.assert_allclose(gram, 0.7 * np.eye(4), atol=1e-12)

    def test_average_pilot_phase_power(self, rng):
        m, rho_p = 4, 2.0
        params = complex_normal((10_000, m, m), 1.0, rng)
        block = SignalingService.build_superposition_block(
            params, np.zeros((10_000, m, 1)), unitary_pilot(m), rho_p, 1.0
        )
        per_slot = np.mean(np.sum(np.abs(block[..., :m]) ** 2, axis=-2))
        assert per_slot == pytest.approx(rho_p * m, rel=0.02)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            SignalingService.build_superposition_block(
                np.eye(3), np.zeros((3, 1)), unitary_pilot(2), 1.0, 1.0
            )

    def test_negative_power(self):
        with pytest.raises(DomainError):
            SignalingService.build_superposition_block(
                np.eye(2), np.zeros((2, 1)), unitary_pilot(2), -1.0, 1.0
            )

    def test_embedding_needs_a_data_phase(self):
        with pytest.raises(DimensionError):
            SignalingService.embed_symbols(np.ones(2), 2)


class TestAdditiveBlock:
    def test_zero_data_power_is_plain_pilot(self, rng):
        pilot = unitary_pilot(2)
        block = SignalingService.build_additive_block(
            complex_normal((2, 5), 1.0, rng), pilot, 1.5, 0.0
        )
        np.testing.assert_allclose(block[:, :2], np.sqrt(1.5) * pilot)
        np.testing.assert_array_equal(block[:, 2:], 0)

    def test_zero_pilot_power_is_data_only(self, rng):
        params = complex_normal((2, 5), 1.0, rng)
        block = SignalingService.build_additive_block(params, unitary_pilot(2), 0.0, 3.0)
        np.testing.assert_allclose(block, np.sqrt(3.0) * params)

    def test_pilot_phase_is_interference_limited(self, rng):
        sinr = SignalingService.pilot_phase_sinr(
            Scheme.ADDITIVE_SUPERPOSITION, 1.0, 1.0, 2, 1.0, 20_000, rng
        )
        assert sinr < PowerService.effective_snr(1.0, 1.0, 2, 1.0)


class TestReceive:
    def test_noiseless_unit_channel(self, rng):
        y = SignalingService.receive(np.eye(2, dtype=complex), np.array([1.0, 0.0]), 0.0, rng)
        np.testing.assert_array_equal(y, [1.0, 0.0])

    def test_noiseless_inner_products(self, rng):
        x = complex_normal((3, 5), 1.0, rng)
        h = draw_rayleigh_channel(3, rng)
        y = SignalingService.receive(x, h, 0.0, rng)
        np.testing.assert_allclose(y, h.conj() @ x, atol=1e-14)

    def test_noise_variance(self, rng):
        y = SignalingService.receive(np.zeros((1, 100_000)), np.ones(1), 0.5, rng)
        assert np.var(y) == pytest.approx(0.5, rel=0.02)

    def test_antenna_mismatch(self, rng):
        with pytest.raises(DimensionError):
            SignalingService.receive(np.zeros((3, 4)), np.ones(2), 1.0, rng)


class TestStaticDecode:
    def test_noiseless_pilot_phase(self, rng):
        m, rho_p = 4, 2.5
        channel, _, embedding, block = superposed(m, 50, rng, rho_p=rho_p)
        y = SignalingService.receive(block, channel, 0.0, rng)
        rotated = SignalingService.static_decode_pilot_phase(
            y[:, :m], channel, unitary_pilot(m), rho_p
        )
        target = np.sqrt(rho_p) * np.einsum("ni,nij->nj", channel.conj(), embedding.pilot_params)
        np.testing.assert_allclose(rotated, target, atol=1e-12)

    def test_demapped_symbols(self, rng):
        m, rho_p = 3, 1.0
        channel, symbols, _, block = superposed(m, 20, rng, rho_p=rho_p)
        y = SignalingService.receive(block, channel, 0.0, rng)
        rotated = SignalingService.static_decode_pilot_phase(
            y[:, :m], channel, unitary_pilot(m), rho_p
        )
        recovered = SignalingService.demap_pilot_symbols(rotated, channel, rho_p)
        np.testing.assert_allclose(recovered, symbols[:, :m], atol=1e-10)

    def test_single_antenna_pass_through(self, rng):
        y = complex_normal((7, 1), 1.0, rng)
        np.testing.assert_array_equal(SignalingService.remove_pilot(y, unitary_pilot(1)), y)

    def test_rotation_keeps_noise_white(self, rng):
        m, noise_var = 3, 2.0
        noise = complex_normal((100_000, m), noise_var, rng)
        rotated = SignalingService.remove_pilot(noise, unitary_pilot(m))
        for sample in (noise, rotated):
            cov = sample.T @ sample.conj() / sample.shape[0]
            np.testing.assert_allclose(np.diag(cov).real, noise_var, rtol=0.02)
            off = cov - np.diag(np.diag(cov))
            assert np.max(np.abs(off)) < 0.02 * noise_var


class TestMmseEstimate:
    def test_coefficients(self):
        pilot = unitary_pilot(4)
        v = np.array([1.0, -2.0, 0.5j, 3.0])
        estimate = SignalingService.mmse_virtual_channel(v @ pilot, 1.0, 1.0, 4, pilot)
        assert estimate.error_variance == pytest.approx(0.8)
        np.testing.assert_allclose(estimate.estimate, 0.8 * v / 2.0, atol=1e-14)

    def test_strong_pilot(self):
        estimate = SignalingService.mmse_virtual_channel(np.ones(4), 1e9, 1.0, 4)
        assert estimate.error_variance < 1e-8 * 4

    def test_error_energy_may_underflow(self):
        estimate = SignalingService.mmse_virtual_channel(np.ones(4), 1e300, 1e-300, 4)
        assert estimate.error_variance == 0.0
        assert np.all(np.isfinite(estimate.estimate))

    def test_zero_pilot_power(self):
        estimate = SignalingService.mmse_virtual_channel(np.ones(2), 0.0, 1.0, 2)
        assert estimate.error_variance == 2.0
        np.testing.assert_array_equal(estimate.estimate, 0)

    def test_negative_pilot_power(self):
        with pytest.raises(DomainError):
            SignalingService.mmse_virtual_channel(np.ones(2), -1.0, 1.0, 2)

    def test_error_orthogonal_to_estimate(self, rng):
        m, rho_p, trials = 2, 1.0, 100_000
        channel, _, embedding, block = superposed(m, trials, rng, rho_p=rho_p)
        y = SignalingService.receive(block, channel, 1.0, rng)
        estimate = SignalingService.mmse_virtual_channel(y[:, :m], rho_p, 1.0, m).estimate
        virtual = np.einsum("ni,nij->nj", channel.conj(), embedding.pilot_params) / np.sqrt(m)
        error = virtual - estimate
        products = estimate[:, :, None] * error.conj()[:, None, :]
        mean = products.mean(axis=0)
        stderr = np.sqrt(np.mean(np.abs(products) ** 2, axis=0) / trials)
        assert np.all(np.abs(mean) < 3 * stderr)


class TestDataDecode:
    def test_perfect_estimate_recovers_symbols(self, rng):
        m, rho_d = 2, 1.5
        channel, symbols, embedding, block = superposed(m, 10, rng, rho_d=rho_d)
        y = SignalingService.receive(block, channel, 0.0, rng)
        virtual = np.einsum("ni,nij->nj", channel.conj(), embedding.pilot_params) / np.sqrt(m)
        exact = VirtualChannelEstimate(estimate=virtual, error_variance=1e-12)
        result = SignalingService.coherent_data_decode(y[:, m:], exact, rho_d, 1.0)
        np.testing.assert_allclose(result.symbols, symbols[:, m:], atol=1e-10)
        assert not result.erased.any()

    def test_effective_noise_variance(self):
        estimate = SignalingService.mmse_virtual_channel(np.ones(4), 1.0, 1.0, 4)
        result = SignalingService.coherent_data_decode(np.ones(4), estimate, 1.0, 1.0)
        assert result.effective_noise_var == pytest.approx(1.8)

    def test_zero_estimate_erases(self):
        estimate = VirtualChannelEstimate(estimate=np.zeros(2, dtype=complex), error_variance=2.0)
        result = SignalingService.coherent_data_decode(np.ones(3), estimate, 1.0, 1.0)
        assert result.erased.all()
        np.testing.assert_array_equal(result.symbols, 0)

    def test_decoded_snr_matches_prediction(self, rng):
        m, rho_p, rho_d = 4, 1.0, 1.0
        measured = SignalingService.estimate_decoded_snr(rho_p, rho_d, m, 1.0, 100_000, rng)
        alpha2 = m * rho_p / (m * rho_p + 1.0)
        predicted = PowerService.effective_snr(rho_p, rho_d, m, 1.0) * m * alpha2
        assert measured == pytest.approx(predicted, rel=0.05)
