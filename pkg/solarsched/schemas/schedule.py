from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from solarsched.schemas.energy import EnergySeries


class Allocation(BaseModel):
    """
    Per-slot power and per-slot, per-gateway time.

    Shapes are validated here; the constraint set (nonnegativity, time sums,
    energy causality) is checked by domain.check_feasibility so that an
    infeasible allocation can still be described and reported on.
    """

    model_config = ConfigDict(frozen=True)

    power_w: List[float] = Field(..., description="p_t, one entry per slot")
    time_s: List[List[float]] = Field(..., description="tau[t][n], K rows of N entries")

    @model_validator(mode="after")
    def _check_shape(self):
        if len(self.time_s) != len(self.power_w):
            raise ValueError(f"time matrix has {len(self.time_s)} rows for {len(self.power_w)} slots")
        widths = {len(row) for row in self.time_s}
        if len(widths) > 1:
            raise ValueError("time matrix rows differ in length")
        return self

    @classmethod
    def from_arrays(cls, power_w, time_s) -> "Allocation":
        return cls(
            power_w=[float(p) for p in np.asarray(power_w, dtype=float)],
            time_s=np.asarray(time_s, dtype=float).tolist(),
        )

    @property
    def power(self) -> np.ndarray:
        return np.array(self.power_w, dtype=float)

    @property
    def tau(self) -> np.ndarray:
        return np.array(self.time_s, dtype=float).reshape(len(self.power_w), -1)

    @property
    def n_slots(self) -> int:
        return len(self.power_w)

    @property
    def n_gateways(self) -> int:
        return len(self.time_s[0]) if self.time_s else 0


class Schedule(BaseModel):
    """
    A frame schedule and the bits it delivers.

    Attributes:
        allocation: Power and time allocation
        assigned_gateway: Gateway holding each slot (the gateway with most time when slots are shared)
        bits_per_gateway: Total bits delivered to each gateway in the frame
        bits_per_slot: Bits delivered in each slot
        algorithm: Producing algorithm name
    """

    model_config = ConfigDict(frozen=True)

    allocation: Allocation
    assigned_gateway: List[int]
    bits_per_gateway: List[float]
    bits_per_slot: List[float] = Field(default_factory=list)
    algorithm: str = ""

    @model_validator(mode="after")
    def _check_lengths(self):
        if len(self.assigned_gateway) != self.allocation.n_slots:
            raise ValueError("assigned_gateway length differs from slot count")
        if self.bits_per_slot and len(self.bits_per_slot) != self.allocation.n_slots:
            raise ValueError("bits_per_slot length differs from slot count")
        if any(b < 0 for b in self.bits_per_gateway):
            raise ValueError("bits must be nonnegative")
        return self

    @property
    def total_bits(self) -> float:
        return float(sum(self.bits_per_gateway))


class Violation(BaseModel):
    model_config = ConfigDict(frozen=True)

    constraint: str = Field(..., description="nonnegativity | time_sum | min_time | causality | dimension")
    slot: Optional[int] = None
    gateway: Optional[int] = None
    amount: float = Field(..., description="Size of the violation in the constraint's own unit")
    message: str = ""


class FeasibilityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    violations: List[Violation] = Field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations

    @property
    def max_violation(self) -> float:
        return max((v.amount for v in self.violations), default=0.0)

    def by_constraint(self, constraint: str) -> List[Violation]:
        return [v for v in self.violations if v.constraint == constraint]


class CumulativeBits(BaseModel):
    """Per-gateway running bit totals of the slots assigned so far in a frame"""

    model_config = ConfigDict(frozen=True)

    totals: List[float] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _check_nonnegative(self):
        if any(b < 0 for b in self.totals):
            raise ValueError(f"cumulative bits must be nonnegative, got {self.totals}")
        return self

    @classmethod
    def zeros(cls, n_gateways: int) -> "CumulativeBits":
        return cls(totals=[0.0] * n_gateways)

    def add(self, gateway: int, bits: float) -> "CumulativeBits":
        """Totals after crediting `bits` to `gateway`"""
        if bits < 0:
            raise ValueError("cannot credit negative bits")
        totals = list(self.totals)
        totals[gateway] += float(bits)
        return CumulativeBits(totals=totals)

    def as_array(self) -> np.ndarray:
        return np.array(self.totals, dtype=float)


class PredictedHarvestSeries(BaseModel):
    """
    Harvest series re-planned by PTF-On at one slot.

    Entry 1 is the measured harvest of the current slot plus the carried battery
    residual, entry 2 the K-SEP prediction, the rest S-SEP predictions.
    """

    model_config = ConfigDict(frozen=True)

    entries: EnergySeries
    carryover_j: float = Field(0.0, ge=0, allow_inf_nan=False)

    @property
    def energies(self) -> np.ndarray:
        return self.entries.energies

    def __len__(self) -> int:
        return len(self.entries)


class PtfOnFrame(BaseModel):
    """
    One online-scheduled frame.

    Attributes:
        schedule: Realized schedule of the frame
        frame_start: Sub-hour index of the first slot in the harvest series
        initial_residual_j: Battery level carried into the frame
        final_residual_j: Battery level left after the last slot
        measured_j: True harvests of the frame's slots
        predicted_next_j: K-SEP prediction of the following sub-hour made at each slot (None when the horizon ends)
    """

    model_config = ConfigDict(frozen=True)

    schedule: Schedule
    frame_start: int = Field(..., ge=0)
    initial_residual_j: float = Field(0.0, ge=0)
    final_residual_j: float = Field(0.0, ge=0)
    measured_j: List[float] = Field(default_factory=list)
    predicted_next_j: List[Optional[float]] = Field(default_factory=list)
