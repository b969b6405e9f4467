"""
Artifact I/O - CSV and JSON writers/readers for traces, sub-hour series,
schedules, BCD traces, predictions and run reports.
Kilojoules appear only here, at the file boundary.
"""

import json
import os
from typing import Sequence

import numpy as np
import pandas as pd

from solarsched.errors import TraceParseError
from solarsched.schemas.energy import SubHourSeries, SubHourValue, Trace
from solarsched.schemas.response import BcdTrace, RunReport
from solarsched.schemas.schedule import Schedule

J_PER_KJ = 1000.0


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _to_csv(df: pd.DataFrame, path: str):
    _ensure_parent(path)
    df.to_csv(path, index=False, lineterminator="\n")


def write_trace_csv(trace: Trace, path: str):
    """Write a trace as `timestamp,value` with epoch-second timestamps"""
    _to_csv(pd.DataFrame({"timestamp": trace.timestamps, "value": trace.values}), path)


def write_subhour_csv(series: SubHourSeries, path: str):
    """Write `subhour_index,energy_kj,mean_irradiation`"""
    df = pd.DataFrame({
        "subhour_index": np.arange(len(series)),
        "energy_kj": series.energies / J_PER_KJ,
        "mean_irradiation": series.irradiation,
    })
    _to_csv(df, path)


def read_subhour_csv(path: str, slot_length_s: float = 1800.0, start_s: float = 0.0) -> SubHourSeries:
    """Read a sub-hour CSV back into a series (energies converted to joules)"""
    try:
        df = pd.read_csv(path)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise TraceParseError(f"malformed sub-hour CSV {path}: {e}")

    expected = ["subhour_index", "energy_kj", "mean_irradiation"]
    if [c.strip() for c in df.columns] != expected:
        raise TraceParseError(f"sub-hour CSV header must be {','.join(expected)}", line=1)
    df.columns = expected
    if not np.array_equal(df["subhour_index"].to_numpy(), np.arange(len(df))):
        raise TraceParseError("subhour_index must count 0, 1, 2, ... without gaps")

    energy = pd.to_numeric(df["energy_kj"], errors="coerce").to_numpy(dtype=float) * J_PER_KJ
    irr = pd.to_numeric(df["mean_irradiation"], errors="coerce").to_numpy(dtype=float)
    for column, data in (("energy_kj", energy), ("mean_irradiation", irr)):
        bad = ~np.isfinite(data) | (data < 0)
        if bad.any():
            raise TraceParseError(f"invalid {column} value", line=int(np.argmax(bad)) + 2)

    return SubHourSeries(
        start_s=start_s,
        slot_length_s=slot_length_s,
        values=[SubHourValue(energy_j=float(e), mean_irradiation=float(y)) for e, y in zip(energy, irr)],
    )


def write_schedule_csv(schedule: Schedule, path: str):
    """Write `slot,power_w,gateway,bits`"""
    bits = schedule.bits_per_slot or [0.0] * schedule.allocation.n_slots
    df = pd.DataFrame({
        "slot": np.arange(schedule.allocation.n_slots),
        "power_w": schedule.allocation.power,
        "gateway": schedule.assigned_gateway,
        "bits": bits,
    })
    _to_csv(df, path)


def write_bcd_trace_csv(trace: BcdTrace, path: str):
    """Write `iteration,utility,violation`"""
    df = pd.DataFrame({
        "iteration": np.arange(len(trace.iterations)),
        "utility": [it.utility for it in trace.iterations],
        "violation": [it.max_constraint_violation for it in trace.iterations],
    })
    _to_csv(df, path)


def write_predictions_csv(
    subhour_index: Sequence[int],
    real_j: Sequence[float],
    ksep_j: Sequence[float],
    ssep_j: Sequence[float],
    path: str,
):
    """Write `subhour_index,real_kj,ksep_kj,ssep_kj`"""
    df = pd.DataFrame({
        "subhour_index": np.asarray(subhour_index, dtype=int),
        "real_kj": np.asarray(real_j, dtype=float) / J_PER_KJ,
        "ksep_kj": np.asarray(ksep_j, dtype=float) / J_PER_KJ,
        "ssep_kj": np.asarray(ssep_j, dtype=float) / J_PER_KJ,
    })
    _to_csv(df, path)


def write_report(report: RunReport, json_path: str, csv_path: str = None):
    """Write a run report as JSON and, optionally, as the per-frame CSV"""
    _ensure_parent(json_path)
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(report.model_dump(mode="json"), f, indent=2, sort_keys=True)
        f.write("\n")
    if csv_path:
        _to_csv(report.to_frame(), csv_path)


def write_json(payload: dict, path: str):
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
