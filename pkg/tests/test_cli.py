"""End-to-end tests of the command-line entry point."""
import json
import os

import pandas as pd
import pytest

from solarsched.main import main
from solarsched.schemas.energy import SubHourSeries
from solarsched.schemas.predictor import STATE_DIM, WeightSet
from solarsched.utils.config import load_predictor_params
from solarsched.utils.io import write_subhour_csv
from solarsched.utils.synthetic import state_model_series
from tests.conftest import SAMPLE_IRRADIANCE, SAMPLE_TRACE

AMHERST_TRACE_ENV = "SOLARSCHED_AMHERST_TRACE"
AMHERST_IRRADIANCE_ENV = "SOLARSCHED_AMHERST_IRRADIANCE"


def _result(capsys):
    """JSON summary printed as the last stdout line"""
    lines = [line for line in capsys.readouterr().out.splitlines() if line.strip()]
    return json.loads(lines[-1])


def _read_bytes(path):
    with open(path, "rb") as f:
        return f.read()


@pytest.fixture
def small_config(write_csv):
    return write_csv(["slots_per_frame=4", "gateway_path_loss_db=78,92"], name="small.cfg")


class TestGenerateAndCompare:
    def test_generate(self, tmp_path, capsys):
        out = str(tmp_path / "gen")
        assert main(["generate", "--days", "2", "--seed", "5", "--out", out]) == 0
        result = _result(capsys)
        assert result["command"] == "generate"
        assert os.path.exists(os.path.join(out, "trace.csv"))
        assert os.path.exists(os.path.join(out, "irradiance.csv"))

    def test_compare_is_deterministic(self, tmp_path, capsys):
        gen = str(tmp_path / "gen")
        assert main(["generate", "--days", "4", "--seed", "0", "--out", gen]) == 0
        trace, irr = os.path.join(gen, "trace.csv"), os.path.join(gen, "irradiance.csv")

        runs = []
        for name in ("a", "b"):
            out = str(tmp_path / name)
            code = main(["compare", "--trace", trace, "--irradiation", irr, "--days", "2", "--out", out])
            assert code == 0
            runs.append(out)
        result = _result(capsys)
        assert result["ptfon_over_sgtdma"] > 1.0

        for name in ("report.json", "report.csv", "schedule_ptfon_frame1.csv"):
            assert _read_bytes(os.path.join(runs[0], name)) == _read_bytes(os.path.join(runs[1], name))

        df = pd.read_csv(os.path.join(runs[0], "report.csv"))
        assert len(df) == 6
        assert sorted(df.algorithm.unique()) == ["ptf", "ptfon", "sgtdma"]
        assert df.groupby("frame").size().tolist() == [3, 3]

    def test_compare_on_sample_files(self, tmp_path, capsys):
        out = str(tmp_path / "out")
        code = main(["compare", "--trace", SAMPLE_TRACE, "--irradiation", SAMPLE_IRRADIANCE, "--days", "2", "--out", out])
        assert code == 0
        assert "ptfon_over_sgtdma" in _result(capsys)


class TestFitAndPredict:
    def test_fit_recovers_generating_weights(self, tmp_path, capsys):
        truth = WeightSet(alpha1=0.6, alpha2=0.25, beta1=0.02)
        _, z, y = state_model_series(truth, n=3 * STATE_DIM, seed=8)
        trace = str(tmp_path / "subhours.csv")
        write_subhour_csv(SubHourSeries.from_arrays(z, y), trace)

        out = str(tmp_path / "fit")
        assert main(["fit", "--trace", trace, "--out", out]) == 0
        params = load_predictor_params(os.path.join(out, "weights.cfg"))
        assert params.weights.alpha1 == pytest.approx(0.6, abs=1e-6)
        assert params.weights.alpha2 == pytest.approx(0.25, abs=1e-6)
        assert params.weights.beta1 == pytest.approx(0.02, abs=1e-6)
        assert _result(capsys)["weights"]["alpha1"] == pytest.approx(0.6, abs=1e-6)

    def test_predict_with_fitted_weights(self, tmp_path, capsys):
        out = str(tmp_path / "out")
        assert main(["fit", "--trace", SAMPLE_TRACE, "--irradiation", SAMPLE_IRRADIANCE, "--out", out]) == 0
        weights = os.path.join(out, "weights.cfg")
        code = main([
            "predict", "--trace", SAMPLE_TRACE, "--irradiation", SAMPLE_IRRADIANCE,
            "--weights", weights, "--from", "day2", "--days", "2", "--out", out,
        ])
        assert code == 0
        result = _result(capsys)
        assert result["ksep_mse_kj2"] >= 0.0
        df = pd.read_csv(os.path.join(out, "predictions.csv"))
        assert len(df) == 2 * 48


class TestScheduleCommand:
    @pytest.mark.parametrize("algo", ["ptf", "sgtdma", "bcd"])
    def test_offline_algorithms(self, algo, tmp_path, capsys, small_config):
        out = str(tmp_path / algo)
        code = main([
            "schedule", "--trace", SAMPLE_TRACE, "--config", small_config,
            "--algo", algo, "--from", "24", "--days", "2", "--out", out,
        ])
        assert code == 0
        assert _result(capsys)["mean_total_gb"] > 0.0
        assert os.path.exists(os.path.join(out, f"schedule_{algo}_frame1.csv"))
        assert os.path.exists(os.path.join(out, "report.json"))
        if algo == "bcd":
            assert os.path.exists(os.path.join(out, "bcd_trace_frame0.csv"))

    def test_bcd_sweep_cap(self, tmp_path, small_config):
        out = str(tmp_path / "capped")
        code = main([
            "schedule", "--trace", SAMPLE_TRACE, "--config", small_config, "--algo", "bcd",
            "--from", "24", "--restarts", "2", "--max-sweeps", "1", "--out", out,
        ])
        assert code == 0
        trace = pd.read_csv(os.path.join(out, "bcd_trace_frame0.csv"))
        assert list(trace.columns) == ["iteration", "utility", "violation"]
        assert len(trace) <= 2

    def test_bcd_needs_a_start(self, tmp_path, small_config):
        code = main([
            "schedule", "--trace", SAMPLE_TRACE, "--config", small_config, "--algo", "bcd",
            "--restarts", "0", "--out", str(tmp_path),
        ])
        assert code == 1

    def test_simulate_baseline(self, tmp_path, capsys):
        out = str(tmp_path / "sim")
        assert main(["simulate", "--trace", SAMPLE_TRACE, "--algo", "sgtdma", "--from", "0", "--out", out]) == 0
        assert os.path.exists(os.path.join(out, "schedule_sgtdma_frame0.csv"))


class TestExitCodes:
    def test_ptfon_with_one_prior_day(self, tmp_path):
        code = main(["simulate", "--trace", SAMPLE_TRACE, "--algo", "ptfon", "--from", "48", "--out", str(tmp_path)])
        assert code == 2

    def test_window_past_the_trace(self, tmp_path):
        code = main(["simulate", "--trace", SAMPLE_TRACE, "--algo", "ptfon", "--days", "3", "--out", str(tmp_path)])
        assert code == 2

    def test_parse_error(self, tmp_path, write_csv):
        trace = write_csv(["timestamp,value", "0,60", "1800,-5", "3600,60"])
        assert main(["fit", "--trace", trace, "--out", str(tmp_path)]) == 3

    def test_config_error(self, tmp_path, write_csv):
        config = write_csv(["bandwith_hz=1e6"], name="typo.cfg")
        assert main(["schedule", "--trace", SAMPLE_TRACE, "--config", config, "--out", str(tmp_path)]) == 3

    def test_algorithm_not_allowed_for_command(self, tmp_path):
        code = main(["schedule", "--trace", SAMPLE_TRACE, "--algo", "ptfon", "--out", str(tmp_path)])
        assert code == 1

    def test_missing_trace(self, tmp_path):
        assert main(["fit", "--trace", str(tmp_path / "absent.csv"), "--out", str(tmp_path)]) == 1
        assert main(["fit", "--out", str(tmp_path)]) == 1

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            main(["plot"])


@pytest.mark.skipif(not os.getenv(AMHERST_TRACE_ENV), reason=f"{AMHERST_TRACE_ENV} not set")
class TestAmherstTrace:
    def test_fit_and_predict(self, tmp_path, capsys):
        args = ["--trace", os.environ[AMHERST_TRACE_ENV], "--fill-gaps", "zero"]
        if os.getenv(AMHERST_IRRADIANCE_ENV):
            args += ["--irradiation", os.environ[AMHERST_IRRADIANCE_ENV]]
        out = str(tmp_path / "amherst")

        assert main(["fit", *args, "--out", out]) == 0
        capsys.readouterr()
        with open(os.path.join(out, "fit.json"), encoding="utf-8") as f:
            weights = json.load(f)["weights_kj"]
        assert weights["alpha1"] == pytest.approx(0.7184, abs=1e-3)
        assert weights["alpha2"] == pytest.approx(0.1439, abs=1e-3)
        assert weights["beta1"] == pytest.approx(0.0063, abs=1e-3)

        weights_file = os.path.join(out, "weights.cfg")
        code = main(["predict", *args, "--weights", weights_file, "--from", "day2", "--days", "16", "--out", out])
        assert code == 0
        assert _result(capsys)["ksep_mse_kj2"] == pytest.approx(4.3778, rel=0.05)
