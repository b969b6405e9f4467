import logging
import os
from typing import Dict, List, Optional

import numpy as np

from solarsched.domain import check_feasibility, rate_matrix
from solarsched.engines.ingest import load_harvest_series
from solarsched.engines.metrics import improvement_ratio, ptfon_prediction_pairs, summarize_run
from solarsched.engines.predictor import (
    J2_PER_KJ2,
    daily_mse_table,
    default_noise,
    fit_weights,
    prediction_mse,
    run_ksep,
    run_ssep,
)
from solarsched.engines.refsolver import bcd_best_of
from solarsched.engines.scheduler import PtfOnScheduler, ptf_offline, sg_tdma
from solarsched.errors import InfeasibleScheduleError
from solarsched.schemas.energy import SUBHOURS_PER_DAY, EnergySeries, SubHourSeries
from solarsched.schemas.predictor import PredictorParams
from solarsched.schemas.request import RunSpec
from solarsched.schemas.schedule import Schedule
from solarsched.utils import io
from solarsched.utils.config import load_predictor_params, load_system_config, save_predictor_params
from solarsched.utils.date_parser import describe_frame, resolve_frames
from solarsched.utils.logger import log_stage
from solarsched.utils.synthetic import generate_trace
from solarsched.utils.validation import default_algorithm, validate_run_spec

logger = logging.getLogger(__name__)

HISTORY_SUBHOURS = 2 * SUBHOURS_PER_DAY


class Orchestrator:
    """
    Routes a validated RunSpec to the engines and writes the artifacts.
    Does NOT compute anything itself beyond wiring and re-validation.
    """

    def __init__(self, spec: RunSpec):
        validate_run_spec(spec)
        self.spec = spec
        self.cfg = load_system_config(spec.config)
        self.out = spec.out

    def handle(self) -> Dict:
        """
        Run the command.

        Returns:
            Summary with the command, the written artifacts and headline numbers
        """
        handlers = {
            "generate": self._generate,
            "fit": self._fit,
            "predict": self._predict,
            "schedule": self._schedule,
            "simulate": self._simulate,
            "compare": self._compare,
        }
        os.makedirs(self.out, exist_ok=True)
        result = handlers[self.spec.command]()
        result["command"] = self.spec.command
        return result

    # -- helpers -------------------------------------------------------------

    def _path(self, name: str) -> str:
        return os.path.join(self.out, name)

    def _series(self) -> SubHourSeries:
        return load_harvest_series(
            self.spec.trace, self.cfg, fill_gaps=self.spec.fill_gaps, irradiation_path=self.spec.irradiation,
        )

    def _params(self, series: SubHourSeries, history_stop: Optional[int] = None) -> PredictorParams:
        """Parameters from --weights, else fitted on the sub-hours before `history_stop`"""
        if self.spec.weights:
            return load_predictor_params(self.spec.weights)
        history = series if history_stop is None else series.window(0, history_stop)
        logger.info(f"No --weights given; fitting on {len(history)} sub-hours of history")
        return default_noise(fit_weights(history))

    def _frame_energies(self, series: SubHourSeries, start: int) -> EnergySeries:
        return series.to_energy_series(start, start + self.cfg.slots_per_frame)

    def _validated(self, schedule: Schedule, energies: EnergySeries, initial_energy_j: float = 0.0) -> Schedule:
        report = check_feasibility(schedule.allocation, energies, self.cfg, initial_energy_j=initial_energy_j)
        if not report.feasible:
            worst = max(report.violations, key=lambda v: v.amount)
            raise InfeasibleScheduleError(
                f"{schedule.algorithm} schedule failed re-validation "
                f"({len(report.violations)} violations, worst: {worst.message})"
            )
        return schedule

    def _write_schedules(self, schedules: Dict[str, List[Schedule]]) -> List[str]:
        paths = []
        for algorithm, frames in schedules.items():
            for i, schedule in enumerate(frames):
                path = self._path(f"schedule_{algorithm}_frame{i}.csv")
                io.write_schedule_csv(schedule, path)
                paths.append(path)
        return paths

    def _write_report(self, schedules, predictions=None):
        report = summarize_run(schedules, predictions)
        json_path, csv_path = self._path("report.json"), self._path("report.csv")
        io.write_report(report, json_path, csv_path)
        return report, [json_path, csv_path]

    def _run_ptfon(self, series: SubHourSeries, starts: List[int]):
        params = self._params(series, history_stop=starts[0])
        scheduler = PtfOnScheduler(
            series, self.cfg, params=params, horizon=self.spec.horizon, first_frame_start=starts[0],
        )
        frames = scheduler.run(len(starts))
        schedules = [
            self._validated(f.schedule, self._frame_energies(series, f.frame_start), f.initial_residual_j)
            for f in frames
        ]
        return schedules, [ptfon_prediction_pairs(f) for f in frames]

    # -- commands ------------------------------------------------------------

    def _generate(self) -> Dict:
        power, irradiation = generate_trace(days=self.spec.days, seed=self.spec.seed)
        trace_path, irr_path = self._path("trace.csv"), self._path("irradiance.csv")
        io.write_trace_csv(power, trace_path)
        io.write_trace_csv(irradiation, irr_path)
        return {"artifacts": [trace_path, irr_path], "days": self.spec.days, "seed": self.spec.seed}

    def _fit(self) -> Dict:
        series = self._series()
        fit = fit_weights(series)
        params = default_noise(fit)
        weights_path, fit_path = self._path("weights.cfg"), self._path("fit.json")
        save_predictor_params(params, weights_path)
        io.write_json({
            "weights": fit.weights.model_dump(),
            "weights_kj": fit.weights.in_kilojoules().model_dump(),
            "objective_j2": fit.objective_value,
            "iterations": fit.iterations,
            "converged": fit.converged,
            "n_samples": fit.n_samples,
            "sigma_w_sq": params.sigma_w_sq,
            "sigma_v_sq": params.sigma_v_sq,
            "irradiation_is_proxy": series.irradiation_is_proxy,
        }, fit_path)
        return {"artifacts": [weights_path, fit_path], "weights": fit.weights.model_dump()}

    def _predict(self) -> Dict:
        series = self._series()
        starts = resolve_frames(
            self.spec.from_, self.spec.days, series, SUBHOURS_PER_DAY,
            default=HISTORY_SUBHOURS, history_needed=HISTORY_SUBHOURS,
        )
        start, stop = starts[0], starts[-1] + SUBHOURS_PER_DAY
        params = self._params(series)
        real = series.energies[start:stop]
        ksep = run_ksep(series, params, start, stop)
        ssep = run_ssep(series, start, stop)

        csv_path, mse_path = self._path("predictions.csv"), self._path("mse.json")
        io.write_predictions_csv(np.arange(start, stop), real, ksep, ssep, csv_path)
        summary = {
            "ksep_mse_kj2": prediction_mse(real, ksep) / J2_PER_KJ2,
            "ssep_mse_kj2": prediction_mse(real, ssep) / J2_PER_KJ2,
            "window": [describe_frame(series, start), describe_frame(series, stop)],
        }
        if series.n_complete_days > 2:
            table = daily_mse_table(series, params)
            summary["daily"] = table.to_dict(orient="records")
        io.write_json(summary, mse_path)
        log_stage("predict", f"K-SEP {summary['ksep_mse_kj2']:.4g} kJ2, S-SEP {summary['ssep_mse_kj2']:.4g} kJ2")
        return {"artifacts": [csv_path, mse_path], **{k: summary[k] for k in ("ksep_mse_kj2", "ssep_mse_kj2")}}

    def _schedule(self) -> Dict:
        algo = self.spec.algo or default_algorithm("schedule")
        series = self._series()
        starts = resolve_frames(self.spec.from_, self.spec.days, series, self.cfg.slots_per_frame)

        schedules: List[Schedule] = []
        artifacts: List[str] = []
        for i, start in enumerate(starts):
            energies = self._frame_energies(series, start)
            if algo == "ptf":
                schedule = ptf_offline(energies, self.cfg)
            elif algo == "sgtdma":
                schedule = sg_tdma(energies, self.cfg)
            else:
                trace = bcd_best_of(
                    energies, self.cfg, restarts=self.spec.restarts, seed=self.spec.seed,
                    max_sweeps=self.spec.max_sweeps,
                )
                bcd_path = self._path(f"bcd_trace_frame{i}.csv")
                io.write_bcd_trace_csv(trace, bcd_path)
                artifacts.append(bcd_path)
                schedule = _schedule_from_allocation(trace.allocation, self.cfg)
            schedules.append(self._validated(schedule, energies))

        report, report_paths = self._write_report({algo: schedules})
        artifacts = self._write_schedules({algo: schedules}) + artifacts + report_paths
        return {"artifacts": artifacts, "mean_total_gb": report.summary(algo).mean_total_gigabytes}

    def _simulate(self) -> Dict:
        algo = self.spec.algo or default_algorithm("simulate")
        series = self._series()
        starts = resolve_frames(
            self.spec.from_, self.spec.days, series, self.cfg.slots_per_frame,
            default=HISTORY_SUBHOURS, history_needed=HISTORY_SUBHOURS if algo == "ptfon" else 0,
        )
        predictions = None
        if algo == "ptfon":
            schedules, pairs = self._run_ptfon(series, starts)
            predictions = {algo: pairs}
        else:
            schedules = [
                self._validated(sg_tdma(self._frame_energies(series, s), self.cfg), self._frame_energies(series, s))
                for s in starts
            ]

        report, report_paths = self._write_report({algo: schedules}, predictions)
        artifacts = self._write_schedules({algo: schedules}) + report_paths
        return {"artifacts": artifacts, "mean_total_gb": report.summary(algo).mean_total_gigabytes}

    def _compare(self) -> Dict:
        series = self._series()
        starts = resolve_frames(
            self.spec.from_, self.spec.days, series, self.cfg.slots_per_frame,
            default=HISTORY_SUBHOURS, history_needed=HISTORY_SUBHOURS,
        )
        ptfon_schedules, pairs = self._run_ptfon(series, starts)
        schedules = {
            "ptf": [self._validated(ptf_offline(self._frame_energies(series, s), self.cfg), self._frame_energies(series, s))
                    for s in starts],
            "ptfon": ptfon_schedules,
            "sgtdma": [self._validated(sg_tdma(self._frame_energies(series, s), self.cfg), self._frame_energies(series, s))
                       for s in starts],
        }
        report, report_paths = self._write_report(schedules, {"ptfon": pairs})
        artifacts = self._write_schedules(schedules) + report_paths
        ratio = improvement_ratio(report, "ptfon", "sgtdma")
        log_stage("compare", f"PTF-On / SG+TDMA throughput ratio {ratio['ratio']:.3f}")
        return {"artifacts": artifacts, "ptfon_over_sgtdma": ratio["ratio"]}


def _schedule_from_allocation(allocation, cfg) -> Schedule:
    """Schedule view of a BCD allocation; each slot is credited to the gateway with most time"""
    tau = allocation.tau
    per_slot_gateway = tau * rate_matrix(allocation.power, cfg)
    return Schedule(
        allocation=allocation,
        assigned_gateway=[int(n) for n in np.argmax(tau, axis=1)],
        bits_per_gateway=per_slot_gateway.sum(axis=0).tolist(),
        bits_per_slot=per_slot_gateway.sum(axis=1).tolist(),
        algorithm="bcd",
    )
