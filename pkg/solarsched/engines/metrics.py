"""
Metrics Engine - Jain fairness, throughput and utility reporting across
frames and algorithms.
"""

import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from solarsched.domain import utility_from_bits
from solarsched.engines.predictor import J2_PER_KJ2, prediction_mse
from solarsched.errors import FairnessUndefinedError, InvalidInputError, UtilityUndefinedError
from solarsched.schemas.response import BITS_PER_GIGABYTE, AlgorithmSummary, FrameRecord, RunReport
from solarsched.schemas.schedule import PtfOnFrame, Schedule
from solarsched.utils.logger import log_stage

logger = logging.getLogger(__name__)

PredictionPair = Tuple[Sequence[float], Sequence[float]]


def jain_index(x: Sequence[float]) -> float:
    """
    Jain's fairness index (sum x)^2 / (N * sum x^2), in [1/N, 1].

    Raises:
        FairnessUndefinedError: All entries are zero
        InvalidInputError: Empty, negative or non-finite input
    """
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InvalidInputError("Jain index needs a nonempty vector")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise InvalidInputError("Jain index needs finite nonnegative values")
    total = float(v.sum())
    if total == 0:
        raise FairnessUndefinedError("Jain index is undefined for an all-zero throughput vector")
    # normalize first so large bit counts do not overflow the squares
    w = v / v.max()
    value = float(w.sum() ** 2 / (v.size * np.sum(w ** 2)))
    return min(1.0, max(1.0 / v.size, value))


def ptfon_prediction_pairs(frame: PtfOnFrame) -> PredictionPair:
    """(real, predicted) next-sub-hour harvests within one PTF-On frame"""
    real, predicted = [], []
    for t, pred in enumerate(frame.predicted_next_j[:-1]):
        if pred is not None:
            real.append(frame.measured_j[t + 1])
            predicted.append(pred)
    return real, predicted


def frame_record(
    algorithm: str,
    frame_index: int,
    schedule: Schedule,
    prediction: Optional[PredictionPair] = None,
) -> FrameRecord:
    """Metrics of one schedule; undefined fairness or utility become None"""
    bits = [float(b) for b in schedule.bits_per_gateway]
    try:
        fairness = jain_index(bits)
    except FairnessUndefinedError:
        fairness = None
    try:
        utility = utility_from_bits(bits)
    except UtilityUndefinedError:
        utility = None

    mse = None
    if prediction is not None and len(prediction[0]):
        mse = prediction_mse(prediction[0], prediction[1]) / J2_PER_KJ2

    total = float(sum(bits))
    return FrameRecord(
        algorithm=algorithm,
        frame_index=frame_index,
        bits_per_gateway=bits,
        total_bits=total,
        gigabytes_per_gateway=[b / BITS_PER_GIGABYTE for b in bits],
        total_gigabytes=total / BITS_PER_GIGABYTE,
        jain_index=fairness,
        utility=utility,
        mse_kj2=mse,
    )


def _mean(values: List[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


def summarize_algorithm(algorithm: str, records: List[FrameRecord]) -> AlgorithmSummary:
    bits = np.array([r.bits_per_gateway for r in records], dtype=float)
    fairness = [r.jain_index for r in records if r.jain_index is not None]
    utilities = [r.utility for r in records if r.utility is not None]
    mses = [r.mse_kj2 for r in records if r.mse_kj2 is not None]
    mean_bits = bits.mean(axis=0)
    return AlgorithmSummary(
        algorithm=algorithm,
        n_frames=len(records),
        mean_bits_per_gateway=mean_bits.tolist(),
        mean_gigabytes_per_gateway=(mean_bits / BITS_PER_GIGABYTE).tolist(),
        mean_total_gigabytes=float(np.mean([r.total_gigabytes for r in records])),
        mean_jain_index=_mean(fairness),
        worst_jain_index=min(fairness) if fairness else None,
        undefined_fairness_frames=len(records) - len(fairness),
        mean_utility=_mean(utilities),
        undefined_utility_frames=len(records) - len(utilities),
        mean_mse_kj2=_mean(mses),
    )


def summarize_run(
    schedules: Mapping[str, Sequence[Schedule]],
    predictions: Optional[Mapping[str, Sequence[Optional[PredictionPair]]]] = None,
) -> RunReport:
    """
    Per-frame and averaged metrics for every algorithm.

    Args:
        schedules: Algorithm name -> one Schedule per frame
        predictions: Algorithm name -> one (real, predicted) harvest pair per frame, in joules

    Returns:
        RunReport; frames whose fairness or utility is undefined are excluded from
        the averages and counted
    """
    if not schedules or not any(len(v) for v in schedules.values()):
        raise InvalidInputError("summarize_run needs at least one frame")
    predictions = predictions or {}

    frames: List[FrameRecord] = []
    summaries: List[AlgorithmSummary] = []
    for algorithm, frame_schedules in schedules.items():
        pairs = predictions.get(algorithm)
        if pairs is not None and len(pairs) != len(frame_schedules):
            raise InvalidInputError(f"{algorithm}: {len(pairs)} prediction pairs for {len(frame_schedules)} frames")
        records = [
            frame_record(algorithm, i, schedule, pairs[i] if pairs is not None else None)
            for i, schedule in enumerate(frame_schedules)
        ]
        if not records:
            continue
        frames.extend(records)
        summary = summarize_algorithm(algorithm, records)
        summaries.append(summary)
        log_stage("metrics", f"{algorithm}: {summary.n_frames} frames, {summary.mean_total_gigabytes:.3f} GB/frame")

    return RunReport(frames=frames, summaries=summaries)


def improvement_ratio(report: RunReport, algorithm: str, baseline: str) -> Dict[str, float]:
    """Mean total throughput of `algorithm` relative to `baseline`"""
    a = report.summary(algorithm).mean_total_gigabytes
    b = report.summary(baseline).mean_total_gigabytes
    return {"algorithm": a, "baseline": b, "ratio": a / b if b > 0 else float("inf")}
