import numpy as np
import pytest
from scipy import integrate

from coherentfl.services.phy.power_service import PowerService
from coherentfl.utils.errors import ConfigurationError, DomainError, InfeasibleBudgetError


class TestOptimalAllocation:
    def test_worked_point(self):
        alloc = PowerService.optimal_allocation(1.0, 6, 2, 1.0)
        assert alloc.rho_d == pytest.approx(7 / 12, abs=1e-9)
        assert alloc.rho_p == pytest.approx(2 / 3, abs=1e-9)

    @pytest.mark.parametrize("m", [1, 2, 4])
    @pytest.mark.parametrize("t_k", [8, 12, 24])
    @pytest.mark.parametrize("rho", [1.0, 10.0, 100.0])
    def test_budget_spent_and_grid_optimal(self, m, t_k, rho):
        alloc = PowerService.optimal_allocation(rho, t_k, m, 1.0)
        assert m * (alloc.rho_p + alloc.rho_d * (t_k - m)) == pytest.approx(rho * t_k, abs=1e-9)
        value = PowerService.objective(alloc.rho_d, rho, t_k, m, 1.0)
        assert value <= PowerService.grid_minimum(rho, t_k, m, 1.0, 10_000) + 1e-9
        assert PowerService.first_order_residual(alloc) < 1e-6

    def test_infeasible_budget_reports_minimum(self):
        with pytest.raises(InfeasibleBudgetError) as info:
            PowerService.optimal_allocation(0.01, 6, 2, 1.0)
        assert info.value.minimum_rho == pytest.approx(1 / 3)
        PowerService.optimal_allocation(info.value.minimum_rho * 1.001, 6, 2, 1.0)

    def test_no_data_phase(self):
        with pytest.raises(ConfigurationError):
            PowerService.optimal_allocation(1.0, 2, 2, 1.0)

    def test_non_positive_budget(self):
        with pytest.raises(DomainError):
            PowerService.optimal_allocation(0.0, 6, 2, 1.0)

    def test_optimal_beats_equal_split(self):
        optimal = PowerService.optimal_allocation(1.0, 6, 2, 1.0)
        equal = PowerService.equal_allocation(1.0, 6, 2, 1.0)
        assert equal.sub_block_energy() == pytest.approx(6.0)
        gamma = PowerService.effective_snr
        best = gamma(optimal.rho_p, optimal.rho_d, 2, 1.0)
        assert best >= gamma(equal.rho_p, equal.rho_d, 2, 1.0)


class TestEffectiveSnr:
    def test_no_data_power(self):
        assert PowerService.effective_snr(1.0, 0.0, 4, 1.0) == 0.0

    def test_substitution(self):
        assert PowerService.effective_snr(1.0, 1.0, 4, 1.0) == pytest.approx(5 / 9)

    def test_perfect_csi_limit(self):
        assert PowerService.effective_snr(1e9, 2.0, 4, 1.0) == pytest.approx(2.0, rel=1e-6)

    def test_vectorised(self):
        values = PowerService.effective_snr(np.array([1.0, 1e9]), 1.0, 4, 1.0)
        assert values.shape == (2,)

    def test_baseline_and_additive_ordering(self):
        baseline = PowerService.baseline_effective_snr(1.0, 1.0, 2, 1.0)
        additive = PowerService.additive_effective_snr(1.0, 1.0, 2, 1.0)
        assert additive < baseline


class TestRates:
    def test_static_rate_without_pilot_power(self, rng):
        estimate = PowerService.static_rate(0.0, 4, 8, 1.0, 100, rng)
        assert estimate.mean == 0.0

    def test_static_rate_against_quadrature(self, rng):
        estimate = PowerService.static_rate(1.0, 1, 1, 1.0, 200_000, rng)
        oracle, _ = integrate.quad(lambda x: np.log2(1.0 + x) * np.exp(-x), 0.0, np.inf)
        assert abs(estimate.mean - oracle) < 3 * estimate.stderr

    def test_static_rate_pre_log(self, make_rng):
        short = PowerService.static_rate(1.0, 2, 4, 1.0, 1000, make_rng(1))
        long = PowerService.static_rate(1.0, 2, 8, 1.0, 1000, make_rng(1))
        assert long.mean == pytest.approx(short.mean / 2)

    def test_dynamic_rate_without_data_power(self, rng):
        alloc = PowerService.optimal_allocation(1.0, 6, 2, 1.0).model_copy(update={"rho_d": 0.0})
        assert PowerService.dynamic_rate(alloc, 100, rng).mean == 0.0

    def test_optimal_dynamic_rate_beats_equal_split(self, make_rng):
        optimal = PowerService.dynamic_rate(
            PowerService.optimal_allocation(1.0, 6, 2, 1.0), 200_000, make_rng(4)
        )
        equal = PowerService.dynamic_rate(
            PowerService.equal_allocation(1.0, 6, 2, 1.0), 200_000, make_rng(4)
        )
        assert optimal.mean >= equal.mean
        assert optimal.stderr > 0

    def test_trials_must_be_positive(self, rng):
        with pytest.raises(DomainError):
            PowerService.static_rate(1.0, 1, 2, 1.0, 0, rng)


class TestFramePower:
    def test_optimal_allocation_has_no_slack(self):
        alloc = PowerService.optimal_allocation(1.0, 6, 2, 1.0)
        report = PowerService.check_frame_power(3, alloc, 18)
        assert report.ok
        assert abs(report.slack) < 1e-9

    def test_inflated_data_power(self):
        alloc = PowerService.optimal_allocation(1.0, 6, 2, 1.0)
        inflated = alloc.model_copy(update={"rho_d": 2 * alloc.rho_d})
        report = PowerService.check_frame_power(3, inflated, 18)
        assert not report.ok
        assert report.excess > 0

    def test_no_sub_blocks(self):
        alloc = PowerService.optimal_allocation(1.0, 6, 2, 1.0)
        assert PowerService.check_frame_power(0, alloc, 0).ok

    def test_baseline_allocation_meets_budget(self):
        alloc = PowerService.baseline_allocation(2.0, 10, 4)
        assert alloc.sub_block_energy() == pytest.approx(20.0)
