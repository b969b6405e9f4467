"""
Synthetic Data Module - seeded diurnal solar traces and state-model series.

Traces follow a sinusoidal daylight envelope scaled by a day-level AR(1)
clear-sky factor and an intra-day AR(1) cloud factor. Panel power saturates
slightly with irradiance and carries a small sensor noise, so the two
channels are not proportional.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from solarsched.engines.ingest import resample_to_subhours
from solarsched.schemas.energy import SubHourSeries, Trace, TraceKind, TraceSample
from solarsched.schemas.predictor import STATE_DIM, WeightSet
from solarsched.schemas.system import SystemConfig
from solarsched.utils.logger import log_stage

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400.0
DEFAULT_START = "2009-10-01T00:00:00Z"
CLEAR_SKY_W_PER_M2 = 1000.0


def _epoch(start) -> float:
    ts = pd.Timestamp(start)
    if ts.tzinfo is None:
        ts = ts.tz_localize("UTC")
    return (ts - pd.Timestamp(0, tz="UTC")).total_seconds()


def generate_trace(
    days: int = 4,
    seed: int = 0,
    sample_period_s: float = 300.0,
    peak_power_w: float = 20.0,
    sunny: bool = False,
    start=DEFAULT_START,
    sunrise_h: float = 6.0,
    sunset_h: float = 18.0,
    day_persistence: float = 0.7,
    cloud_persistence: float = 0.95,
    cloud_depth: float = 0.6,
) -> Tuple[Trace, Trace]:
    """
    Generate matching power (W) and irradiance (W/m2) traces.

    Args:
        days: Number of days
        seed: RNG seed; equal seeds give identical traces
        sample_period_s: Logger sample period
        peak_power_w: Panel power at clear-sky noon irradiance
        sunny: Disable clouds and day-to-day variation
        start: First timestamp (ISO-8601 or epoch seconds)
        sunrise_h, sunset_h: Daylight window in hours
        day_persistence: AR(1) coefficient of the daily clear-sky factor
        cloud_persistence: AR(1) coefficient of the per-sample cloud process
        cloud_depth: Largest fractional attenuation by clouds

    Returns:
        (power trace, irradiation trace); the last sample closes the final day
    """
    if days < 1:
        raise ValueError("days must be at least 1")
    if sample_period_s <= 0 or SECONDS_PER_DAY % sample_period_s:
        raise ValueError("sample period must divide a day")

    rng = np.random.default_rng(seed)
    per_day = int(SECONDS_PER_DAY / sample_period_s)
    n = days * per_day + 1
    t = np.arange(n) * sample_period_s
    hours = (t % SECONDS_PER_DAY) / 3600.0
    daylight = np.clip(np.sin(np.pi * (hours - sunrise_h) / (sunset_h - sunrise_h)), 0.0, None)
    daylight[(hours < sunrise_h) | (hours > sunset_h)] = 0.0

    if sunny:
        clear_sky = np.ones(days + 1)
        cloud = np.ones(n)
    else:
        clear_sky = np.empty(days + 1)
        level = 0.8
        for d in range(days + 1):
            level = 0.8 + day_persistence * (level - 0.8) + 0.12 * rng.standard_normal()
            clear_sky[d] = np.clip(level, 0.2, 1.0)
        z = np.empty(n)
        z[0] = rng.standard_normal()
        shock = np.sqrt(1.0 - cloud_persistence ** 2)
        for k in range(1, n):
            z[k] = cloud_persistence * z[k - 1] + shock * rng.standard_normal()
        cloud = np.clip(1.0 - cloud_depth * np.clip(z, 0.0, None) / 2.0, 1.0 - cloud_depth, 1.0)

    day_index = np.minimum((t // SECONDS_PER_DAY).astype(int), days)
    irradiance = CLEAR_SKY_W_PER_M2 * daylight * clear_sky[day_index] * cloud

    # mild saturation at high irradiance plus sensor noise in daylight
    power = peak_power_w / 0.9 * (irradiance / CLEAR_SKY_W_PER_M2) * (1.0 - 0.1 * irradiance / CLEAR_SKY_W_PER_M2)
    noise = 0.005 * peak_power_w * rng.standard_normal(n)
    power = np.where(irradiance > 0, np.clip(power + noise, 0.0, None), 0.0)

    origin = _epoch(start)
    times = origin + t
    power_trace = Trace(
        kind=TraceKind.POWER,
        samples=[TraceSample(timestamp_s=float(a), value=float(b)) for a, b in zip(times, power)],
    )
    irradiation_trace = Trace(
        kind=TraceKind.IRRADIATION,
        samples=[TraceSample(timestamp_s=float(a), value=float(b)) for a, b in zip(times, irradiance)],
    )
    log_stage("generate", f"{days} days, seed {seed}, sunny={sunny}, {n} samples")
    return power_trace, irradiation_trace


def synthetic_series(cfg: SystemConfig, days: int = 4, seed: int = 0, **kwargs) -> SubHourSeries:
    """Generated traces aggregated to sub-hours with the irradiation channel attached"""
    power, irradiation = generate_trace(days=days, seed=seed, **kwargs)
    return resample_to_subhours(power, cfg, irradiation=irradiation)


def state_model_series(
    weights: WeightSet,
    n: int,
    sigma_w: float = 0.0,
    sigma_v: float = 0.0,
    seed: int = 0,
    irradiation: Optional[Sequence[float]] = None,
    first_day: Optional[Sequence[float]] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Draw a series from the harvest state model and its measurement model.

    Returns:
        (true states x, measurements z, irradiation y), each of length n
    """
    if n <= STATE_DIM:
        raise ValueError(f"n must exceed {STATE_DIM}")
    rng = np.random.default_rng(seed)
    y = rng.uniform(50.0, 500.0, n) if irradiation is None else np.asarray(irradiation, dtype=float)
    if y.size != n:
        raise ValueError("irradiation length must equal n")

    x = np.empty(n)
    x[:STATE_DIM] = rng.uniform(0.0, 10.0, STATE_DIM) if first_day is None else np.asarray(first_day, dtype=float)
    for k in range(STATE_DIM - 1, n - 1):
        x[k + 1] = (
            weights.alpha1 * x[k] + weights.alpha2 * x[k - (STATE_DIM - 1)] + weights.beta1 * y[k]
            + sigma_w * rng.standard_normal()
        )
    z = x + sigma_v * rng.standard_normal(n)
    return x, z, y
