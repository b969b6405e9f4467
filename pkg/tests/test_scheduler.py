"""Tests for the flat power profile, beta-rule assignment, PTF, PTF-On and SG+TDMA."""
import numpy as np
import pytest

from solarsched.domain import check_feasibility, frame_utility, rate_bits_per_sec
from solarsched.engines.predictor import OracleForecaster, default_noise, fit_weights
from solarsched.engines.scheduler import (
    PtfOnScheduler,
    assign_slot,
    build_predicted_series,
    flat_power_allocation,
    ptf_offline,
    ptfon_run,
    sg_tdma,
)
from solarsched.errors import InsufficientHistoryError, InvalidInputError
from solarsched.schemas.energy import EnergySeries, Provenance, SubHourSeries
from solarsched.schemas.predictor import PredictorParams, WeightSet
from solarsched.schemas.schedule import CumulativeBits
from solarsched.schemas.system import SystemConfig
from solarsched.utils.synthetic import synthetic_series
from tests.conftest import random_frame


class _FixedForecaster:
    """Forecaster returning the same value for every future sub-hour"""

    def __init__(self, value):
        self.value = value

    def forecast(self, index, horizon):
        if horizon < 2:
            return None, np.zeros(0)
        return self.value, np.full(horizon - 2, self.value)


class _NoisyForecaster:
    def __init__(self, series, seed):
        self.energies = series.energies
        self.rng = np.random.default_rng(seed)

    def forecast(self, index, horizon):
        if horizon < 2:
            return None, np.zeros(0)
        truth = np.zeros(horizon - 1)
        known = self.energies[index + 1:index + horizon]
        truth[:known.size] = known
        noisy = truth * self.rng.uniform(0.0, 3.0, truth.size) - 500.0
        return float(noisy[0]), noisy[1:]


def _measured_feasible(frame, cfg):
    energies = EnergySeries.measured(frame.measured_j)
    return check_feasibility(frame.schedule.allocation, energies, cfg, initial_energy_j=frame.initial_residual_j)


class TestFlatPowerAllocation:
    def test_spreads_early_harvest(self, default_cfg):
        assert flat_power_allocation([3600.0, 0.0], default_cfg).tolist() == [1.0, 1.0]

    def test_cannot_spend_before_harvest(self, default_cfg):
        assert flat_power_allocation([0.0, 3600.0], default_cfg).tolist() == [0.0, 2.0]

    def test_single_slot(self, default_cfg):
        assert flat_power_allocation([5000.0], default_cfg)[0] == pytest.approx(5000.0 / 1800.0)

    def test_all_zero(self, default_cfg):
        assert np.all(flat_power_allocation(np.zeros(48), default_cfg) == 0.0)

    def test_accepts_energy_series(self, default_cfg):
        p = flat_power_allocation(EnergySeries.measured([3600.0, 0.0]), default_cfg)
        assert p.tolist() == [1.0, 1.0]

    def test_rejects_negative(self, default_cfg):
        with pytest.raises(InvalidInputError):
            flat_power_allocation([100.0, -1.0], default_cfg)

    @pytest.mark.parametrize("seed", range(8))
    def test_profile_properties(self, default_cfg, seed):
        rng = np.random.default_rng(seed)
        E = rng.uniform(0.0, 20000.0, 48) * (rng.random(48) > 0.3)
        p = flat_power_allocation(E, default_cfg)
        T = default_cfg.slot_length_s
        assert np.all(np.diff(p) >= -1e-12 * p.max())
        assert np.all(np.cumsum(p * T) <= np.cumsum(E) * (1 + 1e-12) + 1e-9)
        assert np.sum(p * T) == pytest.approx(E.sum(), rel=1e-9)

    @pytest.mark.slow
    def test_profile_properties_on_many_series(self, default_cfg):
        rng = np.random.default_rng(2024)
        T = default_cfg.slot_length_s
        for _ in range(1000):
            K = int(rng.integers(1, 97))
            E = rng.uniform(0.0, 20000.0, K) * (rng.random(K) > rng.uniform(0.0, 0.8))
            p = flat_power_allocation(E, default_cfg)
            scale = max(p.max(), 1e-300)
            assert np.all(np.diff(p) >= -1e-12 * scale)
            assert np.all(np.cumsum(p * T) <= np.cumsum(E) * (1 + 1e-12) + 1e-9)
            assert np.sum(p * T) == pytest.approx(E.sum(), rel=1e-9, abs=1e-9)

    def test_scale_equivariance(self, default_cfg):
        E = random_frame(np.random.default_rng(3), 48).energies
        base = flat_power_allocation(E, default_cfg)
        for c in (0.5, 2.0):
            assert np.array_equal(flat_power_allocation(c * E, default_cfg), c * base)
        assert np.allclose(flat_power_allocation(10.0 * E, default_cfg), 10.0 * base, rtol=1e-12)


class TestAssignSlot:
    def test_first_slot_takes_highest_rate(self, default_cfg):
        n = assign_slot(0, [2.0, 1.0, 3.0], CumulativeBits.zeros(3), default_cfg)
        assert n == 2

    def test_unserved_gateway_wins_with_best_channel(self, default_cfg):
        cumulative = CumulativeBits(totals=[1e6, 0.0, 0.0])
        assert assign_slot(1, [5.0, 5.0, 5.0], cumulative, default_cfg) == 1

    def test_constant_rates_sequence(self):
        cfg = SystemConfig.from_path_losses((78.0, 92.0), slot_length_s=1.0, slots_per_frame=3)
        cumulative = CumulativeBits.zeros(2)
        rates = [2.0, 1.0]
        sequence = []
        for t in range(3):
            n = assign_slot(t, rates, cumulative, cfg)
            cumulative = cumulative.add(n, rates[n] * cfg.slot_length_s)
            sequence.append(n)
        assert sequence == [0, 1, 0]

    def test_largest_beta_wins(self, default_cfg):
        cumulative = CumulativeBits(totals=[100.0, 10.0, 50.0])
        # betas 1800*[1, 0.5, 2] / [100, 10, 50] = [18, 90, 72]
        assert assign_slot(3, [1.0, 0.5, 2.0], cumulative, default_cfg) == 1

    def test_zero_rate_slot_follows_beta_chain(self, default_cfg):
        cumulative = CumulativeBits(totals=[5.0, 0.0, 3.0])
        assert assign_slot(4, [0.0, 0.0, 0.0], cumulative, default_cfg) == 1

    def test_zero_rate_slot_among_served_gateways(self, default_cfg):
        cumulative = CumulativeBits(totals=[5.0, 2.0, 3.0])
        # every beta is zero, so the best channel wins
        assert assign_slot(4, [0.0, 0.0, 0.0], cumulative, default_cfg) == 0

    def test_zero_rates_on_an_empty_frame(self, default_cfg):
        assert assign_slot(0, [0.0, 0.0, 0.0], CumulativeBits.zeros(3), default_cfg) == 0

    def test_rejects_bad_rates(self, default_cfg):
        with pytest.raises(InvalidInputError):
            assign_slot(0, [1.0, -1.0, 1.0], CumulativeBits.zeros(3), default_cfg)
        with pytest.raises(InvalidInputError):
            assign_slot(0, [1.0, 1.0], CumulativeBits.zeros(3), default_cfg)


class TestPtfOffline:
    def test_single_gateway_gets_everything(self):
        cfg = SystemConfig.from_path_losses((78.0,), slots_per_frame=4)
        energies = EnergySeries.measured([4000.0, 0.0, 1000.0, 3000.0])
        schedule = ptf_offline(energies, cfg)
        assert schedule.assigned_gateway == [0, 0, 0, 0]
        expected = sum(1800.0 * rate_bits_per_sec(p, cfg.gateways[0], cfg) for p in schedule.allocation.power)
        assert schedule.bits_per_gateway[0] == pytest.approx(expected, rel=1e-12)

    def test_zero_energy_frame(self, default_cfg):
        schedule = ptf_offline(EnergySeries.measured(np.zeros(48)), default_cfg)
        assert np.all(schedule.allocation.power == 0.0)
        assert schedule.total_bits == 0.0
        assert schedule.assigned_gateway == [0] * 48
        assert np.allclose(schedule.allocation.tau, 600.0)
        assert check_feasibility(schedule.allocation, EnergySeries.measured(np.zeros(48)), default_cfg).feasible

    def test_dark_slots_share_airtime(self, default_cfg):
        E = np.zeros(48)
        E[40:] = 5000.0
        energies = EnergySeries.measured(E)
        schedule = ptf_offline(energies, default_cfg)
        assert schedule.assigned_gateway[:40] == [0] * 40
        assert np.allclose(schedule.allocation.tau[:40], 600.0)
        assert set(schedule.assigned_gateway[40:43]) == {0, 1, 2}
        assert check_feasibility(schedule.allocation, energies, default_cfg).feasible

    @pytest.mark.parametrize("seed", range(5))
    def test_feasible_and_serves_everyone(self, default_cfg, seed):
        energies = random_frame(np.random.default_rng(seed), 48)
        schedule = ptf_offline(energies, default_cfg)
        assert check_feasibility(schedule.allocation, energies, default_cfg).feasible
        assert set(schedule.assigned_gateway) == {0, 1, 2}
        assert np.isfinite(frame_utility(schedule, default_cfg))
        assert schedule.total_bits == pytest.approx(sum(schedule.bits_per_slot), rel=1e-12)

    def test_cloudy_day(self, cloudy_series, default_cfg):
        energies = cloudy_series.to_energy_series(96, 144)
        schedule = ptf_offline(energies, default_cfg)
        assert check_feasibility(schedule.allocation, energies, default_cfg).feasible
        assert schedule.algorithm == "ptf"

    def test_wrong_frame_length(self, default_cfg):
        with pytest.raises(InvalidInputError):
            ptf_offline(EnergySeries.measured([1.0, 2.0]), default_cfg)


class TestSgTdma:
    def test_spend_what_you_get(self, default_cfg):
        cfg = default_cfg.with_slots(2)
        schedule = sg_tdma(EnergySeries.measured([3600.0, 0.0]), cfg)
        assert schedule.allocation.power.tolist() == [2.0, 0.0]
        assert np.allclose(schedule.allocation.tau, 600.0)
        assert schedule.bits_per_slot[1] == 0.0
        assert schedule.algorithm == "sgtdma"

    def test_feasible(self, default_cfg):
        energies = random_frame(np.random.default_rng(9), 48)
        assert check_feasibility(sg_tdma(energies, default_cfg).allocation, energies, default_cfg).feasible

    def test_matches_ptf_for_one_gateway_and_constant_harvest(self):
        cfg = SystemConfig.from_path_losses((92.0,), slots_per_frame=6)
        energies = EnergySeries.measured([7200.0] * 6)
        assert sg_tdma(energies, cfg).total_bits == pytest.approx(ptf_offline(energies, cfg).total_bits, rel=1e-12)


class TestBuildPredictedSeries:
    def test_no_carryover(self):
        series = build_predicted_series(10000.0, 9000.0, [8000.0, 7000.0], 0.0)
        assert series.energies[0] == 10000.0
        assert series.entries.provenances == [Provenance.MEASURED, Provenance.KSEP, Provenance.SSEP, Provenance.SSEP]

    def test_residual_folds_into_first_entry(self):
        series = build_predicted_series(8000.0, 1.0, [], 10000.0 - 6000.0)
        assert series.energies[0] == 12000.0
        assert series.carryover_j == 4000.0

    def test_negative_prediction_is_clamped(self):
        series = build_predicted_series(500.0, -1000.0, [-5.0], 0.0)
        assert series.energies.tolist() == [500.0, 0.0, 0.0]

    def test_negative_residual(self):
        with pytest.raises(InvalidInputError):
            build_predicted_series(500.0, 100.0, [], -1.0)

    def test_one_slot_horizon(self):
        series = build_predicted_series(500.0, None, [], 20.0)
        assert len(series) == 1
        with pytest.raises(InvalidInputError):
            build_predicted_series(500.0, None, [1.0], 0.0)


class TestPtfOn:
    @pytest.mark.parametrize("seed", range(10))
    def test_perfect_prediction_reproduces_offline_ptf(self, default_cfg, seed):
        rng = np.random.default_rng(seed)
        energies = rng.uniform(500.0, 20000.0, 48)
        series = SubHourSeries.from_arrays(energies)
        frame = ptfon_run(series, 0, default_cfg, forecaster=OracleForecaster(series), horizon="frame")
        offline = ptf_offline(EnergySeries.measured(energies), default_cfg)
        assert frame.schedule.assigned_gateway == offline.assigned_gateway
        assert np.allclose(frame.schedule.allocation.power, offline.allocation.power, rtol=1e-9)
        assert frame_utility(frame.schedule, default_cfg) == pytest.approx(frame_utility(offline, default_cfg), abs=1e-9)
        assert frame.final_residual_j == pytest.approx(0.0, abs=1e-6)

    def test_zero_days(self, default_cfg):
        series = SubHourSeries.from_arrays(np.zeros(3 * 48), np.zeros(3 * 48))
        params = PredictorParams(weights=WeightSet(alpha1=0.9, alpha2=0.1, beta1=0.01), sigma_w_sq=1.0, sigma_v_sq=1e-4)
        frame = ptfon_run(series, 96, default_cfg, params=params)
        assert frame.schedule.total_bits == 0.0
        assert _measured_feasible(frame, default_cfg).feasible

    @pytest.mark.parametrize("forecaster", [
        _FixedForecaster(1e7), _FixedForecaster(0.0), _FixedForecaster(-3000.0),
    ], ids=["optimistic", "pessimistic", "negative"])
    def test_causality_against_measured_harvest(self, cloudy_series, default_cfg, forecaster):
        scheduler = PtfOnScheduler(cloudy_series, default_cfg, forecaster=forecaster, first_frame_start=96)
        for frame in scheduler.run(3):
            assert _measured_feasible(frame, default_cfg).feasible

    def test_spend_never_exceeds_stored_energy(self, cloudy_series, default_cfg):
        scheduler = PtfOnScheduler(cloudy_series, default_cfg, forecaster=_FixedForecaster(1e7), first_frame_start=96)
        T = default_cfg.slot_length_s
        for frame in scheduler.run(2):
            spend = frame.schedule.allocation.power * T
            stored = frame.initial_residual_j
            for t, e in enumerate(frame.measured_j):
                stored += e
                assert spend[t] <= stored * (1.0 + 1e-12)
                stored = max(stored - spend[t], 0.0)

    def test_causality_with_noisy_predictions(self, cloudy_series, default_cfg):
        scheduler = PtfOnScheduler(
            cloudy_series, default_cfg, forecaster=_NoisyForecaster(cloudy_series, 1), first_frame_start=96,
        )
        for frame in scheduler.run(4):
            assert _measured_feasible(frame, default_cfg).feasible
            assert frame.final_residual_j >= 0.0

    def test_residual_carries_between_frames(self, cloudy_series, default_cfg):
        params = default_noise(fit_weights(cloudy_series.window(0, 96)))
        scheduler = PtfOnScheduler(cloudy_series, default_cfg, params=params, first_frame_start=96)
        first, second = scheduler.run(2)
        assert second.frame_start == first.frame_start + 48
        assert second.initial_residual_j == first.final_residual_j
        assert first.final_residual_j > 0.0
        assert first.schedule.algorithm == "ptfon"
        assert len(first.predicted_next_j) == 48
        assert all(p is not None and p >= 0.0 for p in first.predicted_next_j)

    def test_frame_horizon_spends_everything(self, cloudy_series, default_cfg):
        params = default_noise(fit_weights(cloudy_series.window(0, 96)))
        frame = ptfon_run(cloudy_series, 96, default_cfg, params=params, horizon="frame")
        assert frame.final_residual_j == pytest.approx(0.0, abs=1e-6)
        assert frame.predicted_next_j[-1] is None

    def test_beats_sg_tdma_on_sunny_days(self, default_cfg):
        series = synthetic_series(default_cfg, days=12, seed=2, sunny=True)
        params = default_noise(fit_weights(series.window(0, 96)))
        scheduler = PtfOnScheduler(series, default_cfg, params=params, first_frame_start=96)
        for frame in scheduler.run(10):
            baseline = sg_tdma(series.to_energy_series(frame.frame_start, frame.frame_start + 48), default_cfg)
            assert frame.schedule.total_bits > baseline.total_bits

    def test_needs_two_days_of_history(self, cloudy_series, default_cfg):
        params = default_noise(fit_weights(cloudy_series.window(0, 96)))
        with pytest.raises(InsufficientHistoryError):
            ptfon_run(cloudy_series, 48, default_cfg, params=params)

    def test_frame_past_series_end(self, cloudy_series, default_cfg):
        with pytest.raises(InsufficientHistoryError):
            ptfon_run(cloudy_series, len(cloudy_series) - 10, default_cfg, forecaster=OracleForecaster(cloudy_series))

    def test_bad_arguments(self, cloudy_series, default_cfg):
        with pytest.raises(InvalidInputError):
            PtfOnScheduler(cloudy_series, default_cfg, forecaster=OracleForecaster(cloudy_series), horizon="weekly")
        with pytest.raises(InvalidInputError):
            PtfOnScheduler(cloudy_series, default_cfg)
