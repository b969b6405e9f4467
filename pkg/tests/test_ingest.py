"""Tests for trace loading, sub-hour resampling and the key=value config files."""
import numpy as np
import pytest

from solarsched.engines.ingest import load_harvest_series, load_trace, resample_to_subhours, series_to_trace
from solarsched.errors import ConfigError, GapError, InvalidInputError, TraceDataError, TraceParseError
from solarsched.schemas.energy import Trace, TraceKind, TraceSample
from solarsched.schemas.predictor import PredictorParams, WeightSet
from solarsched.schemas.system import SystemConfig
from solarsched.utils.config import load_predictor_params, load_system_config, save_predictor_params
from solarsched.utils.io import read_subhour_csv, write_subhour_csv
from tests.conftest import DEFAULT_CONFIG, SAMPLE_IRRADIANCE, SAMPLE_TRACE


def _power(points):
    return Trace(kind=TraceKind.POWER, samples=[TraceSample(timestamp_s=t, value=v) for t, v in points])


class TestLoadTrace:
    def test_two_rows(self, write_csv):
        trace = load_trace(write_csv(["timestamp,value", "0,60", "1800,60"]))
        assert len(trace) == 2
        assert trace.timestamps.tolist() == [0.0, 1800.0]
        assert trace.values.tolist() == [60.0, 60.0]
        assert trace.kind == TraceKind.POWER

    def test_iso_timestamps(self, write_csv):
        path = write_csv(["timestamp,value", "2009-10-01T00:00:00Z,1.5", "2009-10-01T00:05:00Z,2.0"])
        trace = load_trace(path)
        assert trace.timestamps[0] == 1254355200.0
        assert trace.timestamps[1] - trace.timestamps[0] == 300.0

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("", encoding="utf-8")
        trace = load_trace(str(path))
        assert len(trace) == 0
        assert trace.warnings

    def test_header_only(self, write_csv):
        trace = load_trace(write_csv(["timestamp,value"]))
        assert len(trace) == 0
        assert trace.warnings

    def test_negative_value_names_line(self, write_csv):
        path = write_csv(["timestamp,value", "0,60", "300,-1", "600,60"])
        with pytest.raises(TraceParseError) as exc:
            load_trace(path)
        assert exc.value.line == 3
        assert "line 3" in str(exc.value)

    def test_unparseable_value(self, write_csv):
        with pytest.raises(TraceParseError) as exc:
            load_trace(write_csv(["timestamp,value", "0,60", "300,sunny"]))
        assert exc.value.line == 3

    def test_bad_header(self, write_csv):
        with pytest.raises(TraceParseError) as exc:
            load_trace(write_csv(["time,power", "0,60"]))
        assert exc.value.line == 1

    def test_non_monotone_timestamps(self, write_csv):
        with pytest.raises(TraceDataError):
            load_trace(write_csv(["timestamp,value", "0,60", "600,60", "300,60"]))

    def test_duplicate_timestamps(self, write_csv):
        with pytest.raises(TraceDataError):
            load_trace(write_csv(["timestamp,value", "0,60", "0,50"]))

    def test_missing_file(self, tmp_path):
        with pytest.raises(TraceParseError):
            load_trace(str(tmp_path / "nope.csv"))

    def test_exit_codes(self):
        assert TraceParseError("x").exit_code == 3
        assert TraceDataError("x").exit_code == 3


class TestResample:
    def test_constant_60w_gives_108_kj(self, default_cfg):
        series = resample_to_subhours(_power([(0, 60.0), (1800, 60.0)]), default_cfg)
        assert len(series) == 1
        assert series.energies[0] == pytest.approx(108000.0, rel=1e-12)

    def test_zero_power(self, default_cfg):
        series = resample_to_subhours(_power([(0, 0.0), (1800, 0.0)]), default_cfg)
        assert series.energies.tolist() == [0.0]

    def test_half_window_gives_54_kj(self, default_cfg):
        series = resample_to_subhours(_power([(0, 60.0), (900, 0.0), (1800, 0.0)]), default_cfg)
        assert series.energies[0] == pytest.approx(54000.0, rel=1e-12)

    def test_windows_aligned_to_origin(self, default_cfg):
        trace = _power([(0, 10.0), (600, 20.0), (1200, 30.0), (2400, 40.0), (3600, 0.0)])
        series = resample_to_subhours(trace, default_cfg, origin_s=600.0)
        # one complete window [600, 2400); [2400, 4200) runs past the last sample
        assert len(series) == 1
        assert series.start_s == 600.0
        assert series.energies[0] == pytest.approx(20.0 * 600 + 30.0 * 1200)

    def test_energy_is_conserved(self, default_cfg):
        rng = np.random.default_rng(4)
        ts = np.arange(0, 4 * 1800 + 1, 300.0)
        values = rng.uniform(0.0, 60.0, ts.size)
        series = resample_to_subhours(_power(zip(ts, values)), default_cfg)
        integral = float(np.sum(values[:-1] * np.diff(ts)))
        assert series.energies.sum() == pytest.approx(integral, rel=1e-9)
        assert len(series) == 4

    def test_resampling_aggregated_data_is_idempotent(self, cloudy_series, default_cfg):
        again = resample_to_subhours(series_to_trace(cloudy_series), default_cfg)
        assert np.allclose(again.energies, cloudy_series.energies, rtol=1e-12, atol=1e-6)

    def test_gap_raises_by_default(self, default_cfg):
        with pytest.raises(GapError) as exc:
            resample_to_subhours(_power([(0, 60.0), (3600, 60.0)]), default_cfg)
        assert exc.value.window_index == 1

    def test_gap_zero_fill(self, default_cfg):
        series = resample_to_subhours(_power([(0, 60.0), (3600, 60.0)]), default_cfg, fill_gaps="zero")
        assert series.energies.tolist() == [pytest.approx(108000.0), 0.0]
        assert [v.gap_filled for v in series.values] == [False, True]

    def test_bad_gap_mode(self, default_cfg):
        with pytest.raises(InvalidInputError):
            resample_to_subhours(_power([(0, 1.0), (1800, 1.0)]), default_cfg, fill_gaps="interpolate")

    def test_span_shorter_than_a_window(self, default_cfg):
        with pytest.raises(InvalidInputError):
            resample_to_subhours(_power([(0, 1.0), (600, 1.0)]), default_cfg)

    def test_power_proxy_flag(self, default_cfg):
        series = resample_to_subhours(_power([(0, 5.0), (900, 7.0), (1800, 9.0)]), default_cfg)
        assert series.irradiation_is_proxy
        # reading in effect just before the window end
        assert series.irradiation[0] == 7.0

    def test_irradiation_channel_is_averaged(self, default_cfg):
        irr = Trace(
            kind=TraceKind.IRRADIATION,
            samples=[TraceSample(timestamp_s=0, value=100.0), TraceSample(timestamp_s=900, value=300.0),
                     TraceSample(timestamp_s=1800, value=0.0)],
        )
        series = resample_to_subhours(_power([(0, 5.0), (1800, 5.0)]), default_cfg, irradiation=irr)
        assert not series.irradiation_is_proxy
        assert series.irradiation[0] == pytest.approx(200.0)

    def test_sample_files(self, default_cfg):
        series = load_harvest_series(SAMPLE_TRACE, default_cfg, irradiation_path=SAMPLE_IRRADIANCE)
        assert len(series) == 4 * 48
        assert series.n_complete_days == 4
        assert not series.irradiation_is_proxy
        assert np.all(series.energies >= 0)
        assert series.energies.max() <= 108000.0

    def test_subhour_csv_is_accepted_as_trace(self, cloudy_series, default_cfg, tmp_path):
        path = str(tmp_path / "subhours.csv")
        write_subhour_csv(cloudy_series, path)
        loaded = load_harvest_series(path, default_cfg)
        assert len(loaded) == len(cloudy_series)
        assert np.allclose(loaded.energies, cloudy_series.energies, rtol=1e-12)

    def test_subhour_csv_rejects_negative(self, write_csv):
        path = write_csv(["subhour_index,energy_kj,mean_irradiation", "0,1.0,0", "1,-2.0,0"])
        with pytest.raises(TraceParseError) as exc:
            read_subhour_csv(path)
        assert exc.value.line == 3


class TestConfigFiles:
    def test_shipped_config_matches_defaults(self):
        assert load_system_config(DEFAULT_CONFIG) == load_system_config(None)

    def test_partial_config(self, write_csv):
        path = write_csv(["slots_per_frame=4", "gateway_path_loss_db=78,92"], name="small.cfg")
        cfg = load_system_config(path)
        assert cfg.slots_per_frame == 4
        assert cfg.n_gateways == 2
        assert cfg.bandwidth_hz == 10e6

    def test_unknown_key(self, write_csv):
        with pytest.raises(ConfigError):
            load_system_config(write_csv(["bandwith_hz=1e6"], name="typo.cfg"))

    def test_non_numeric_value(self, write_csv):
        with pytest.raises(ConfigError):
            load_system_config(write_csv(["bandwidth_hz=wide"], name="bad.cfg"))

    def test_fractional_slot_count(self, write_csv):
        with pytest.raises(ConfigError):
            load_system_config(write_csv(["slots_per_frame=4.5"], name="bad.cfg"))

    def test_invalid_gateway(self, write_csv):
        with pytest.raises(ConfigError):
            load_system_config(write_csv(["gateway_path_loss_db=-10"], name="bad.cfg"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_system_config(str(tmp_path / "missing.cfg"))

    def test_predictor_params_file(self, tmp_path):
        params = PredictorParams(
            weights=WeightSet(alpha1=0.7184, alpha2=0.1439, beta1=6.3),
            sigma_w_sq=1.0 / 3.0,
            sigma_v_sq=1e-4,
        )
        path = str(tmp_path / "weights.cfg")
        save_predictor_params(params, path)
        assert load_predictor_params(path) == params

    def test_predictor_params_missing_key(self, write_csv):
        with pytest.raises(ConfigError):
            load_predictor_params(write_csv(["alpha1=0.9", "alpha2=0.1"], name="w.cfg"))

    def test_predictor_params_negative_variance(self, write_csv):
        lines = ["alpha1=0.9", "alpha2=0.1", "beta1=0.01", "sigma_w_sq=-1", "sigma_v_sq=0"]
        with pytest.raises(ConfigError):
            load_predictor_params(write_csv(lines, name="w.cfg"))

    def test_config_error_exit_code(self):
        assert ConfigError("x").exit_code == 3

    def test_small_config_fixture(self, small_cfg):
        assert small_cfg == SystemConfig.from_path_losses((78.0, 92.0), slots_per_frame=4)
