from enum import Enum
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

SUBHOURS_PER_DAY = 48


class Provenance(str, Enum):
    """Where a harvest figure came from"""

    MEASURED = "Measured"
    KSEP = "KSEP"
    SSEP = "SSEP"


class TraceKind(str, Enum):
    POWER = "power"
    IRRADIATION = "irradiation"


class EnergyEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    energy_j: float = Field(..., ge=0, allow_inf_nan=False)
    provenance: Provenance = Provenance.MEASURED


class EnergySeries(BaseModel):
    """
    Per-slot harvested energy within a frame.

    Attributes:
        entries: One (energy, provenance) entry per slot
        origin_s: Frame origin timestamp in epoch seconds
    """

    model_config = ConfigDict(frozen=True)

    entries: List[EnergyEntry] = Field(default_factory=list)
    origin_s: float = 0.0

    @classmethod
    def measured(cls, energies_j: Sequence[float], origin_s: float = 0.0) -> "EnergySeries":
        return cls(
            entries=[EnergyEntry(energy_j=float(e), provenance=Provenance.MEASURED) for e in energies_j],
            origin_s=origin_s,
        )

    @property
    def energies(self) -> np.ndarray:
        return np.array([e.energy_j for e in self.entries], dtype=float)

    @property
    def provenances(self) -> List[Provenance]:
        return [e.provenance for e in self.entries]

    def is_complete(self, slots_per_frame: int) -> bool:
        return len(self.entries) == slots_per_frame

    def __len__(self) -> int:
        return len(self.entries)


class TraceSample(BaseModel):
    """One logger reading: power in W, or irradiance in W/m2 for irradiation traces"""

    model_config = ConfigDict(frozen=True)

    timestamp_s: float = Field(..., allow_inf_nan=False, description="Epoch seconds")
    value: float = Field(..., ge=0, allow_inf_nan=False)


class Trace(BaseModel):
    """Parsed trace file: time-sorted samples plus loader warnings"""

    model_config = ConfigDict(frozen=True)

    kind: TraceKind = TraceKind.POWER
    samples: List[TraceSample] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)

    @field_validator("samples")
    @classmethod
    def _strictly_increasing(cls, samples):
        for prev, cur in zip(samples, samples[1:]):
            if cur.timestamp_s <= prev.timestamp_s:
                raise ValueError(f"timestamps must be strictly increasing at {cur.timestamp_s}")
        return samples

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([s.timestamp_s for s in self.samples], dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.array([s.value for s in self.samples], dtype=float)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, index):
        return self.samples[index]


class SubHourValue(BaseModel):
    model_config = ConfigDict(frozen=True)

    energy_j: float = Field(..., ge=0, allow_inf_nan=False)
    mean_irradiation: float = Field(0.0, ge=0, allow_inf_nan=False)
    gap_filled: bool = False


class SubHourSeries(BaseModel):
    """
    Per-sub-hour aggregates aligned to a frame origin.

    Attributes:
        start_s: Timestamp of the first window (epoch seconds)
        slot_length_s: Window length
        values: One aggregate per window
        irradiation_is_proxy: True when irradiation values are power spot readings
    """

    model_config = ConfigDict(frozen=True)

    start_s: float = 0.0
    slot_length_s: float = Field(1800.0, gt=0)
    values: List[SubHourValue] = Field(default_factory=list)
    irradiation_is_proxy: bool = False

    @classmethod
    def from_arrays(
        cls,
        energies_j: Sequence[float],
        irradiation: Sequence[float] = None,
        start_s: float = 0.0,
        slot_length_s: float = 1800.0,
        irradiation_is_proxy: bool = False,
    ) -> "SubHourSeries":
        if irradiation is None:
            irradiation = [0.0] * len(energies_j)
        if len(irradiation) != len(energies_j):
            raise ValueError("energy and irradiation lengths differ")
        return cls(
            start_s=start_s,
            slot_length_s=slot_length_s,
            values=[SubHourValue(energy_j=float(e), mean_irradiation=float(y)) for e, y in zip(energies_j, irradiation)],
            irradiation_is_proxy=irradiation_is_proxy,
        )

    @property
    def energies(self) -> np.ndarray:
        return np.array([v.energy_j for v in self.values], dtype=float)

    @property
    def irradiation(self) -> np.ndarray:
        return np.array([v.mean_irradiation for v in self.values], dtype=float)

    @property
    def n_complete_days(self) -> int:
        return len(self.values) // SUBHOURS_PER_DAY

    def window(self, start: int, stop: int) -> "SubHourSeries":
        """Sub-series of windows [start, stop)"""
        return self.model_copy(update={
            "start_s": self.start_s + start * self.slot_length_s,
            "values": self.values[start:stop],
        })

    def days(self) -> List["SubHourSeries"]:
        """Split into complete 48-window days"""
        return [
            self.window(d * SUBHOURS_PER_DAY, (d + 1) * SUBHOURS_PER_DAY)
            for d in range(self.n_complete_days)
        ]

    def to_energy_series(self, start: int = 0, stop: int = None) -> EnergySeries:
        stop = len(self.values) if stop is None else stop
        return EnergySeries.measured(self.energies[start:stop], origin_s=self.start_s + start * self.slot_length_s)

    def __len__(self) -> int:
        return len(self.values)
