"""
Date Parser Module - resolves the --from / --days window into frame start
indices of a sub-hour series.
"""

import re
from typing import List, Optional

import pandas as pd

from solarsched.errors import InsufficientHistoryError, InvalidInputError
from solarsched.schemas.energy import SUBHOURS_PER_DAY, SubHourSeries


def parse_window_start(label: Optional[str], series: SubHourSeries, default: int = 0) -> int:
    """
    Convert a --from value to a sub-hour index of `series`.

    Accepted forms:
        "137"                  sub-hour index
        "day2", "day_2"        start of the third day of the series
        "2009-10-03", ISO-8601 date/time (UTC when naive); floored to a window start

    Args:
        label: --from value, None for the default
        series: Series the index refers to
        default: Index used when label is None

    Returns:
        Sub-hour index
    """
    if label is None or not str(label).strip():
        return default

    text = str(label).strip().lower()

    if re.fullmatch(r"\d+", text):
        return int(text)

    day_match = re.fullmatch(r"day[_\s]?(\d+)", text)
    if day_match:
        return int(day_match.group(1)) * SUBHOURS_PER_DAY

    try:
        ts = pd.Timestamp(label)
    except (ValueError, TypeError):
        raise InvalidInputError(f"cannot parse --from {label!r}: expected an index, dayN or an ISO date")
    if ts.tzinfo is None:
        ts = ts.tz_localize("UTC")
    seconds = (ts - pd.Timestamp(0, tz="UTC")).total_seconds()
    offset = (seconds - series.start_s) / series.slot_length_s
    if offset < 0:
        raise InvalidInputError(f"--from {label} precedes the start of the series")
    return int(offset + 1e-9)


def resolve_frames(
    label: Optional[str],
    days: int,
    series: SubHourSeries,
    slots_per_frame: int,
    default: int = 0,
    history_needed: int = 0,
) -> List[int]:
    """
    Frame start indices for `days` consecutive frames.

    Args:
        label: --from value
        days: Number of frames
        series: Sub-hour series
        slots_per_frame: Frame length K
        default: Start used when label is None
        history_needed: Sub-hours that must precede the first frame

    Raises:
        InsufficientHistoryError: Too little history before, or too little data after, the window start
    """
    if days < 1:
        raise InvalidInputError("--days must be at least 1")
    start = parse_window_start(label, series, default)
    if start < history_needed:
        raise InsufficientHistoryError(
            f"the first frame at sub-hour {start} needs {history_needed} sub-hours "
            f"({history_needed / SUBHOURS_PER_DAY:g} days) of prior measurements"
        )
    stop = start + days * slots_per_frame
    if stop > len(series):
        raise InsufficientHistoryError(
            f"{days} frame(s) from sub-hour {start} need data through sub-hour {stop - 1}; "
            f"the trace has {len(series)} sub-hours"
        )
    return [start + i * slots_per_frame for i in range(days)]


def describe_frame(series: SubHourSeries, start: int) -> str:
    """Human-readable UTC start of a frame"""
    ts = pd.Timestamp(series.start_s + start * series.slot_length_s, unit="s", tz="UTC")
    return f"sub-hour {start} ({ts.isoformat()})"
