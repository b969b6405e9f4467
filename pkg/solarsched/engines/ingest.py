"""
Ingest Engine - loads solar power / irradiation traces and aggregates them
into per-sub-hour harvested energy series.
Integration uses a zero-order hold: each reading holds until the next timestamp.
"""

import logging
import os
from typing import Optional, Union

import numpy as np
import pandas as pd

from solarsched.errors import GapError, InvalidInputError, TraceDataError, TraceParseError
from solarsched.schemas.energy import SubHourSeries, SubHourValue, Trace, TraceKind, TraceSample
from solarsched.schemas.system import SystemConfig
from solarsched.utils.logger import log_gap_fill, log_stage

logger = logging.getLogger(__name__)

FILL_GAP_MODES = ("error", "zero")
SUBHOUR_HEADER = "subhour_index"


def load_trace(path: str, kind: Union[TraceKind, str] = TraceKind.POWER) -> Trace:
    """
    Load a `timestamp,value` CSV trace.

    Timestamps are ISO-8601 (naive values are taken as UTC) or epoch seconds;
    values are watts for power traces and W/m2 for irradiation traces.

    Args:
        path: CSV file path
        kind: power or irradiation

    Returns:
        Trace with time-sorted samples; an empty file yields an empty trace
        carrying a warning

    Raises:
        TraceParseError: Malformed header or row, or a negative value (names the line)
        TraceDataError: Timestamps not strictly increasing
    """
    kind = TraceKind(kind)
    if not os.path.exists(path):
        raise TraceParseError(f"trace file not found: {path}")

    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        logger.warning(f"Trace {path} is empty")
        return Trace(kind=kind, samples=[], warnings=["empty trace file"])
    except pd.errors.ParserError as e:
        raise TraceParseError(f"malformed CSV in {path}: {e}")

    header = [str(c).strip().lower() for c in df.columns]
    if header != ["timestamp", "value"]:
        raise TraceParseError(f"header must be 'timestamp,value', got {','.join(header)}", line=1)
    df.columns = header

    # Line numbers: header is line 1, first data row line 2
    df["line"] = np.arange(len(df)) + 2
    df = df[(df["timestamp"].str.strip() != "") | (df["value"].str.strip() != "")]
    if df.empty:
        logger.warning(f"Trace {path} has a header but no rows")
        return Trace(kind=kind, samples=[], warnings=["empty trace file"])

    ts_raw = df["timestamp"].str.strip()
    epoch = pd.to_numeric(ts_raw, errors="coerce")
    iso_rows = epoch.isna()
    if iso_rows.any():
        parsed = pd.to_datetime(ts_raw[iso_rows], errors="coerce", utc=True, format="ISO8601")
        epoch[iso_rows] = (parsed - pd.Timestamp(0, tz="UTC")).dt.total_seconds()

    values = pd.to_numeric(df["value"].str.strip(), errors="coerce")

    bad_ts = ~np.isfinite(epoch.to_numpy(dtype=float))
    if bad_ts.any():
        row = df.iloc[int(np.argmax(bad_ts))]
        raise TraceParseError(f"unparseable timestamp {row['timestamp']!r}", line=int(row["line"]))
    bad_val = ~np.isfinite(values.to_numpy(dtype=float))
    if bad_val.any():
        row = df.iloc[int(np.argmax(bad_val))]
        raise TraceParseError(f"unparseable value {row['value']!r}", line=int(row["line"]))
    negative = values.to_numpy(dtype=float) < 0
    if negative.any():
        row = df.iloc[int(np.argmax(negative))]
        raise TraceParseError(f"negative value {row['value']}", line=int(row["line"]))

    ts = epoch.to_numpy(dtype=float)
    steps = np.diff(ts)
    if np.any(steps <= 0):
        i = int(np.argmax(steps <= 0)) + 1
        raise TraceDataError(
            f"timestamps must be strictly increasing: line {int(df['line'].iloc[i])} "
            f"({ts[i]}) does not follow {ts[i - 1]}"
        )

    samples = [TraceSample(timestamp_s=float(t), value=float(v)) for t, v in zip(ts, values.to_numpy(dtype=float))]
    log_stage("ingest", f"Loaded {len(samples)} {kind.value} samples from {path}")
    return Trace(kind=kind, samples=samples)


def _cumulative_integral(trace: Trace):
    """Knot times and running integral of a zero-order-hold trace"""
    ts, v = trace.timestamps, trace.values
    running = np.concatenate(([0.0], np.cumsum(v[:-1] * np.diff(ts))))
    return ts, running


def resample_to_subhours(
    trace: Trace,
    cfg: SystemConfig,
    origin_s: Optional[float] = None,
    fill_gaps: str = "error",
    irradiation: Optional[Trace] = None,
) -> SubHourSeries:
    """
    Aggregate a power trace into slot-length windows aligned to the frame origin.

    Each window's energy is the zero-order-hold integral of power over the
    window, i.e. the time-weighted mean power times the window length. Only
    complete windows inside the trace span are produced.

    Args:
        trace: Power trace (watts)
        cfg: System configuration (slot length)
        origin_s: Frame origin; defaults to the first sample timestamp
        fill_gaps: "error" raises on windows without samples, "zero" substitutes 0 J and flags them
        irradiation: Optional irradiation trace; when absent the irradiation of a
            window is proxied by the power reading in effect at the window end

    Returns:
        SubHourSeries

    Raises:
        InvalidInputError: Wrong trace kind, bad gap mode, or a span shorter than one window
        GapError: A window contains no samples and fill_gaps is "error"
    """
    if fill_gaps not in FILL_GAP_MODES:
        raise InvalidInputError(f"fill_gaps must be one of {FILL_GAP_MODES}, got {fill_gaps!r}")
    if trace.kind != TraceKind.POWER:
        raise InvalidInputError("energy resampling needs a power trace")
    if len(trace) < 2:
        raise InvalidInputError("at least two samples are needed to span a sub-hour")

    T = cfg.slot_length_s
    ts, running = _cumulative_integral(trace)
    origin = float(ts[0] if origin_s is None else origin_s)
    n_windows = int(np.floor((ts[-1] - origin) / T + 1e-9))
    if n_windows < 1:
        raise InvalidInputError(f"samples span {ts[-1] - origin} s, less than one {T} s window")

    edges = origin + T * np.arange(n_windows + 1)
    at_edges = np.interp(edges, ts, running, left=0.0, right=running[-1])
    energies = np.diff(at_edges)

    # samples falling inside [start, end) of each window
    first_index = np.searchsorted(ts, edges, side="left")
    counts = np.diff(first_index)

    if irradiation is not None:
        if irradiation.kind != TraceKind.IRRADIATION:
            raise InvalidInputError("irradiation channel must be an irradiation trace")
        if len(irradiation) < 2:
            raise InvalidInputError("irradiation trace needs at least two samples")
        its, irunning = _cumulative_integral(irradiation)
        if its[0] > edges[0] or its[-1] < edges[-1]:
            logger.warning("Irradiation trace does not cover the power trace span; uncovered time counts as 0 W/m2")
        irr = np.diff(np.interp(edges, its, irunning, left=0.0, right=irunning[-1])) / T
    else:
        # spot reading in effect just before each window end
        last = np.searchsorted(ts, edges[1:], side="left") - 1
        irr = np.where(last >= 0, trace.values[np.clip(last, 0, None)], 0.0)

    values = []
    for j in range(n_windows):
        if counts[j] == 0:
            if fill_gaps == "error":
                raise GapError(
                    f"sub-hour window {j} starting at {edges[j]} has no samples "
                    f"(use fill_gaps='zero' to substitute 0 J)",
                    window_index=j,
                )
            log_gap_fill(j)
            values.append(SubHourValue(energy_j=0.0, mean_irradiation=0.0, gap_filled=True))
            continue
        values.append(SubHourValue(
            energy_j=max(0.0, float(energies[j])),
            mean_irradiation=max(0.0, float(irr[j])),
        ))

    log_stage("resample", f"{n_windows} windows of {T} s from origin {origin}")
    return SubHourSeries(
        start_s=origin,
        slot_length_s=T,
        values=values,
        irradiation_is_proxy=irradiation is None,
    )


def series_to_trace(series: SubHourSeries) -> Trace:
    """
    Express a sub-hour series as a power trace: one reading per window start
    (mean power) plus a closing reading at the end of the last window.
    """
    T = series.slot_length_s
    power = series.energies / T
    times = series.start_s + T * np.arange(len(series) + 1)
    values = np.concatenate((power, power[-1:] if len(power) else [0.0]))
    return Trace(
        kind=TraceKind.POWER,
        samples=[TraceSample(timestamp_s=float(t), value=float(v)) for t, v in zip(times, values)],
    )


def load_harvest_series(
    path: str,
    cfg: SystemConfig,
    fill_gaps: str = "error",
    irradiation_path: Optional[str] = None,
    origin_s: Optional[float] = None,
) -> SubHourSeries:
    """
    Load either a sub-hour CSV (`subhour_index,energy_kj,mean_irradiation`) or a
    raw power trace, returning the sub-hour series every engine consumes.
    """
    from solarsched.utils.io import read_subhour_csv

    with open(path, "r", encoding="utf-8") as f:
        first_line = f.readline().strip().lower()
    if first_line.startswith(SUBHOUR_HEADER):
        return read_subhour_csv(path, slot_length_s=cfg.slot_length_s)

    trace = load_trace(path, TraceKind.POWER)
    if len(trace) == 0:
        raise InvalidInputError(f"trace {path} is empty")
    irradiation = load_trace(irradiation_path, TraceKind.IRRADIATION) if irradiation_path else None
    return resample_to_subhours(trace, cfg, origin_s=origin_s, fill_gaps=fill_gaps, irradiation=irradiation)
