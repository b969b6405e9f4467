from typing import Dict, List, Optional

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from solarsched.schemas.schedule import Allocation

BITS_PER_GIGABYTE = 8e9


class BcdIteration(BaseModel):
    model_config = ConfigDict(frozen=True)

    utility: float
    max_constraint_violation: float = Field(..., ge=0)


class BcdTrace(BaseModel):
    """Utility / violation history of a block-coordinate run and its final allocation"""

    model_config = ConfigDict(frozen=True)

    iterations: List[BcdIteration] = Field(default_factory=list)
    allocation: Allocation
    converged: bool = False
    seed: Optional[int] = None

    @property
    def final_utility(self) -> float:
        return self.iterations[-1].utility

    @property
    def sweeps(self) -> int:
        return max(len(self.iterations) - 1, 0)


class FrameRecord(BaseModel):
    """Metrics of one algorithm on one frame"""

    model_config = ConfigDict(frozen=True)

    algorithm: str
    frame_index: int
    bits_per_gateway: List[float]
    total_bits: float
    gigabytes_per_gateway: List[float]
    total_gigabytes: float
    jain_index: Optional[float] = Field(None, description="None marks undefined fairness (all-zero frame)")
    utility: Optional[float] = Field(None, description="None when some gateway received zero bits")
    mse_kj2: Optional[float] = Field(None, description="Predictor MSE in kJ^2 when a predictor ran")

    @model_validator(mode="after")
    def _check_totals(self):
        parts = sum(self.bits_per_gateway)
        if abs(parts - self.total_bits) > 1e-9 * max(1.0, abs(self.total_bits)):
            raise ValueError(f"total bits {self.total_bits} differ from the sum of parts {parts}")
        if self.jain_index is not None:
            n = len(self.bits_per_gateway)
            if not (1.0 / n - 1e-12 <= self.jain_index <= 1.0 + 1e-12):
                raise ValueError(f"Jain index {self.jain_index} outside [1/{n}, 1]")
        return self


class AlgorithmSummary(BaseModel):
    """Averages over the frames of one algorithm; undefined values are excluded and counted"""

    model_config = ConfigDict(frozen=True)

    algorithm: str
    n_frames: int
    mean_bits_per_gateway: List[float]
    mean_gigabytes_per_gateway: List[float]
    mean_total_gigabytes: float
    mean_jain_index: Optional[float] = None
    worst_jain_index: Optional[float] = None
    undefined_fairness_frames: int = 0
    mean_utility: Optional[float] = None
    undefined_utility_frames: int = 0
    mean_mse_kj2: Optional[float] = None


class RunReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    frames: List[FrameRecord] = Field(default_factory=list)
    summaries: List[AlgorithmSummary] = Field(default_factory=list)

    def summary(self, algorithm: str) -> AlgorithmSummary:
        for s in self.summaries:
            if s.algorithm == algorithm:
                return s
        raise KeyError(algorithm)

    def frames_of(self, algorithm: str) -> List[FrameRecord]:
        return [f for f in self.frames if f.algorithm == algorithm]

    def to_frame(self) -> pd.DataFrame:
        """
        Plot-ready table, one row per frame per algorithm.
        Columns: frame, algorithm, bits_gw<n>..., gb_gw<n>..., total_bits, total_gb,
        jain_index, utility, mse_kj2.
        """
        rows: List[Dict] = []
        for rec in self.frames:
            row = {"frame": rec.frame_index, "algorithm": rec.algorithm}
            for n, b in enumerate(rec.bits_per_gateway):
                row[f"bits_gw{n}"] = b
            for n, g in enumerate(rec.gigabytes_per_gateway):
                row[f"gb_gw{n}"] = g
            row.update({
                "total_bits": rec.total_bits,
                "total_gb": rec.total_gigabytes,
                "jain_index": rec.jain_index,
                "utility": rec.utility,
                "mse_kj2": rec.mse_kj2,
            })
            rows.append(row)
        return pd.DataFrame(rows)
