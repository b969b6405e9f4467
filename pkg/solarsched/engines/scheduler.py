"""
Scheduler Engine - offline PTF, online PTF-On and the SG+TDMA baseline.

PTF pairs the flattest causal power profile with whole-slot assignment by the
beta rule: a slot goes to the gateway whose slot bits are largest relative to
what it has already received in the frame.
"""

import logging
import time
from typing import List, Optional, Sequence

import numpy as np

from solarsched.domain import rate_matrix
from solarsched.engines.predictor import HarvestForecaster, KsepSsepForecaster
from solarsched.errors import InsufficientHistoryError, InvalidInputError
from solarsched.schemas.energy import EnergyEntry, EnergySeries, Provenance, SubHourSeries
from solarsched.schemas.predictor import PredictorParams
from solarsched.schemas.schedule import (
    Allocation,
    CumulativeBits,
    PredictedHarvestSeries,
    PtfOnFrame,
    Schedule,
)
from solarsched.schemas.system import SystemConfig
from solarsched.utils.logger import log_performance, log_stage

logger = logging.getLogger(__name__)

HORIZON_MODES = ("sliding", "frame")
TIE_RTOL = 1e-12


def _energy_array(energies) -> np.ndarray:
    E = energies.energies if isinstance(energies, (EnergySeries, PredictedHarvestSeries)) else np.asarray(energies, dtype=float)
    if E.ndim != 1 or E.size == 0:
        raise InvalidInputError("energy series must be a nonempty vector")
    if not np.all(np.isfinite(E)) or np.any(E < 0):
        raise InvalidInputError("energies must be finite and nonnegative")
    return E


def flat_power_allocation(energies, cfg: SystemConfig) -> np.ndarray:
    """
    Flattest full-spend power profile allowed by energy causality.

    Starting at slot s, the profile spends at the minimum average slope
    (harvest through j minus energy already spent) / ((j - s + 1) * T) up to
    the slot j* attaining it, then restarts from j* + 1. Ties pick the longest
    segment. The result is nondecreasing and spends the whole harvest.

    Args:
        energies: EnergySeries, PredictedHarvestSeries or a vector of joules; its
            length is the planning horizon
        cfg: System configuration (slot length)

    Returns:
        Power per slot in watts
    """
    E = _energy_array(energies)
    T = cfg.slot_length_s
    K = E.size
    harvested = np.cumsum(E)
    p = np.zeros(K)

    s, spent = 0, 0.0
    while s < K:
        slopes = (harvested[s:] - spent) / ((np.arange(K - s) + 1) * T)
        m = float(slopes.min())
        j = s + int(np.flatnonzero(slopes <= m + TIE_RTOL * abs(m))[-1])
        p[s:j + 1] = max(m, 0.0)
        spent = float(harvested[j])
        s = j + 1
    return p


def assign_slot(
    t: int,
    rates: Sequence[float],
    cumulative: CumulativeBits,
    cfg: SystemConfig,
) -> int:
    """
    Choose the gateway that receives slot t.

    While no gateway has bits yet the highest rate wins. Afterwards a gateway
    with zero bits wins outright (beta = +inf); otherwise the largest
    beta_n = rate_n * T / cumulative_n wins. Ties go to the best channel gain,
    then the lowest index. A slot where every rate is zero follows the same
    chain and carries no data.

    Args:
        t: Slot index within the frame (0-based)
        rates: Rate of each gateway at this slot's power (bits/s)
        cumulative: Bits each gateway received in earlier slots of the frame
        cfg: System configuration

    Returns:
        Gateway index
    """
    r = np.asarray(rates, dtype=float)
    B = cumulative.as_array()
    N = cfg.n_gateways
    if r.shape != (N,) or B.shape != (N,):
        raise InvalidInputError(f"expected {N} rates and cumulative totals")
    if not np.all(np.isfinite(r)) or np.any(r < 0):
        raise InvalidInputError(f"rates must be finite and nonnegative at slot {t}")

    if t == 0 or not np.any(B > 0):
        scores = r
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = np.where(B > 0, r * cfg.slot_length_s / np.where(B > 0, B, 1.0), np.inf)

    best = scores.max()
    if np.isinf(best):
        candidates = np.flatnonzero(np.isinf(scores))
    else:
        candidates = np.flatnonzero(scores >= best - TIE_RTOL * abs(best))

    gains = cfg.gains[candidates]
    # stable order keeps the lowest index among equal gains
    return int(candidates[np.argmax(gains)])


def _whole_slot_schedule(
    power: np.ndarray,
    assigned: List[int],
    cfg: SystemConfig,
    algorithm: str,
) -> Schedule:
    K, N, T = power.size, cfg.n_gateways, cfg.slot_length_s
    tau = np.zeros((K, N))
    tau[np.arange(K), assigned] = T
    # zero-power slots carry no data; their airtime is shared among all gateways
    tau[power <= 0.0] = T / N
    rates = rate_matrix(power, cfg)
    bits_per_slot = rates[np.arange(K), assigned] * T
    bits = np.zeros(N)
    np.add.at(bits, assigned, bits_per_slot)
    return Schedule(
        allocation=Allocation.from_arrays(power, tau),
        assigned_gateway=[int(n) for n in assigned],
        bits_per_gateway=bits.tolist(),
        bits_per_slot=bits_per_slot.tolist(),
        algorithm=algorithm,
    )


def _check_frame(energies: EnergySeries, cfg: SystemConfig) -> np.ndarray:
    E = _energy_array(energies)
    if E.size != cfg.slots_per_frame:
        raise InvalidInputError(f"frame needs {cfg.slots_per_frame} slots, got {E.size}")
    return E


def ptf_offline(energies: EnergySeries, cfg: SystemConfig) -> Schedule:
    """
    Offline PTF on a frame with known harvests.

    Args:
        energies: Harvest of every slot of the frame
        cfg: System configuration

    Returns:
        Schedule with whole-slot assignments
    """
    start_time = time.time()
    E = _check_frame(energies, cfg)
    power = flat_power_allocation(E, cfg)
    rates = rate_matrix(power, cfg)

    cumulative = CumulativeBits.zeros(cfg.n_gateways)
    assigned: List[int] = []
    for t in range(E.size):
        n = assign_slot(t, rates[t], cumulative, cfg)
        cumulative = cumulative.add(n, rates[t, n] * cfg.slot_length_s)
        assigned.append(n)

    schedule = _whole_slot_schedule(power, assigned, cfg, "ptf")
    log_performance("scheduler.ptf_offline", (time.time() - start_time) * 1000)
    return schedule


def sg_tdma(energies: EnergySeries, cfg: SystemConfig) -> Schedule:
    """Spend-what-you-get power with equal TDMA time shares"""
    E = _check_frame(energies, cfg)
    K, N, T = E.size, cfg.n_gateways, cfg.slot_length_s
    power = E / T
    tau = np.full((K, N), T / N)
    rates = rate_matrix(power, cfg)
    per_slot_gateway = rates * tau
    return Schedule(
        allocation=Allocation.from_arrays(power, tau),
        # every gateway holds an equal share; report gateway 0 as the slot holder
        assigned_gateway=[0] * K,
        bits_per_gateway=per_slot_gateway.sum(axis=0).tolist(),
        bits_per_slot=per_slot_gateway.sum(axis=1).tolist(),
        algorithm="sgtdma",
    )


def build_predicted_series(
    measured_now: float,
    ksep_next: Optional[float],
    ssep_rest: Sequence[float],
    residual_j: float,
) -> PredictedHarvestSeries:
    """
    Series PTF-On plans over at one slot.

    Args:
        measured_now: Harvest measured at the current slot (J)
        ksep_next: K-SEP prediction for the next slot; None for a one-slot horizon
        ssep_rest: S-SEP predictions for the slots after that
        residual_j: Battery energy left from earlier slots

    Returns:
        PredictedHarvestSeries; entry 1 = measured_now + residual_j, negatives clamped to 0

    Raises:
        InvalidInputError: Negative residual, or S-SEP entries without a K-SEP entry
    """
    if not np.isfinite(residual_j) or residual_j < 0:
        raise InvalidInputError(f"carried residual must be nonnegative, got {residual_j}")
    if ksep_next is None and len(ssep_rest):
        raise InvalidInputError("S-SEP entries need a preceding K-SEP entry")

    entries = [EnergyEntry(energy_j=max(0.0, float(measured_now) + residual_j), provenance=Provenance.MEASURED)]
    if ksep_next is not None:
        entries.append(EnergyEntry(energy_j=max(0.0, float(ksep_next)), provenance=Provenance.KSEP))
    entries.extend(EnergyEntry(energy_j=max(0.0, float(e)), provenance=Provenance.SSEP) for e in ssep_rest)
    return PredictedHarvestSeries(entries=EnergySeries(entries=entries), carryover_j=residual_j)


class PtfOnScheduler:
    """
    Online PTF over consecutive frames of a measured harvest series.

    At every slot the scheduler measures the slot's harvest, forms the predicted
    series, re-plans the flat profile over the horizon, commits the first slot's
    power (never more than the energy actually stored) and assigns the slot by the beta
    rule against the current frame's bits. Battery residual and forecaster state
    carry from slot to slot and from frame to frame.
    """

    def __init__(
        self,
        series: SubHourSeries,
        cfg: SystemConfig,
        params: Optional[PredictorParams] = None,
        forecaster: Optional[HarvestForecaster] = None,
        horizon: str = "sliding",
        first_frame_start: int = 96,
        initial_residual_j: float = 0.0,
    ):
        if horizon not in HORIZON_MODES:
            raise InvalidInputError(f"horizon must be one of {HORIZON_MODES}, got {horizon!r}")
        if initial_residual_j < 0:
            raise InvalidInputError("initial residual must be nonnegative")
        if forecaster is None:
            if params is None:
                raise InvalidInputError("K-SEP forecasting needs predictor parameters")
            forecaster = KsepSsepForecaster(series, params, first_index=first_frame_start)

        self.series = series
        self.energies = series.energies
        self.cfg = cfg
        self.forecaster = forecaster
        self.horizon = horizon
        self.next_frame_start = first_frame_start
        self.residual_j = float(initial_residual_j)

    def run_frame(self) -> PtfOnFrame:
        """Schedule the next frame and advance"""
        cfg = self.cfg
        K, N, T = cfg.slots_per_frame, cfg.n_gateways, cfg.slot_length_s
        s = self.next_frame_start
        if s + K > self.energies.size:
            raise InsufficientHistoryError(
                f"frame starting at sub-hour {s} needs {K} measured slots, series ends at {self.energies.size}"
            )

        start_time = time.time()
        initial_residual = self.residual_j
        residual = initial_residual
        cumulative = CumulativeBits.zeros(N)
        power = np.zeros(K)
        assigned: List[int] = []
        predicted_next: List[Optional[float]] = []

        for t in range(K):
            a = s + t
            h = K if self.horizon == "sliding" else K - t
            ksep_next, ssep_rest = self.forecaster.forecast(a, h)
            predicted = build_predicted_series(self.energies[a], ksep_next, ssep_rest, residual)
            predicted_next.append(ksep_next)

            # the first flat segment never spends more than the energy stored now
            p = flat_power_allocation(predicted, cfg)[0]
            available = float(predicted.energies[0])

            residual = available - p * T
            if residual <= TIE_RTOL * available:
                residual = 0.0
            power[t] = p

            rates = rate_matrix([p], cfg)[0]
            n = assign_slot(t, rates, cumulative, cfg)
            cumulative = cumulative.add(n, rates[n] * T)
            assigned.append(n)

        self.residual_j = residual
        self.next_frame_start = s + K
        schedule = _whole_slot_schedule(power, assigned, cfg, "ptfon")
        log_stage("ptfon", f"frame at sub-hour {s}: {schedule.total_bits:.4g} bits, residual {residual:.3f} J")
        log_performance("scheduler.ptfon_frame", (time.time() - start_time) * 1000)
        return PtfOnFrame(
            schedule=schedule,
            frame_start=s,
            initial_residual_j=initial_residual,
            final_residual_j=residual,
            measured_j=self.energies[s:s + K].tolist(),
            predicted_next_j=predicted_next,
        )

    def run(self, n_frames: int) -> List[PtfOnFrame]:
        if n_frames < 1:
            raise InvalidInputError("n_frames must be at least 1")
        return [self.run_frame() for _ in range(n_frames)]


def ptfon_run(
    series: SubHourSeries,
    frame_start: int,
    cfg: SystemConfig,
    params: Optional[PredictorParams] = None,
    forecaster: Optional[HarvestForecaster] = None,
    horizon: str = "sliding",
    initial_residual_j: float = 0.0,
) -> PtfOnFrame:
    """
    Online PTF on the frame starting at sub-hour `frame_start`.

    Args:
        series: Measured sub-hour harvests covering two days before the frame and the frame itself
        frame_start: Sub-hour index of the frame's first slot
        cfg: System configuration
        params: Fitted predictor parameters (needed unless a forecaster is given)
        forecaster: Replacement forecaster, e.g. OracleForecaster
        horizon: "sliding" re-plans over the next K slots, "frame" stops at the frame end
        initial_residual_j: Battery level carried into the frame

    Raises:
        InsufficientHistoryError: Fewer than two days before the frame with the default forecaster
    """
    scheduler = PtfOnScheduler(
        series, cfg, params=params, forecaster=forecaster, horizon=horizon,
        first_frame_start=frame_start, initial_residual_j=initial_residual_j,
    )
    return scheduler.run_frame()
