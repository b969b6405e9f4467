import math
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

DEFAULT_PATH_LOSSES_DB = (78.0, 92.0, 100.0)


class GatewayChannel(BaseModel):
    """
    Long-term average channel from the base station to one gateway.

    Attributes:
        id: Gateway index n (0-based)
        path_loss_db: Path loss in dB
        gain: Linear power gain g_n = 10^(-path_loss_db/10)
    """

    model_config = ConfigDict(frozen=True)

    id: int = Field(..., ge=0, description="Gateway index")
    path_loss_db: float = Field(..., description="Path loss in dB")
    gain: float = Field(None, description="Linear channel gain, derived from path_loss_db when omitted")

    @model_validator(mode="before")
    @classmethod
    def _derive_gain(cls, data):
        if isinstance(data, dict) and data.get("gain") is None and "path_loss_db" in data:
            data = dict(data)
            data["gain"] = 10.0 ** (-float(data["path_loss_db"]) / 10.0)
        return data

    @model_validator(mode="after")
    def _check_gain(self):
        if not (0.0 < self.gain <= 1.0):
            raise ValueError(f"gain must lie in (0, 1], got {self.gain}")
        expected = 10.0 ** (-self.path_loss_db / 10.0)
        if abs(self.gain - expected) > 1e-12 * expected:
            raise ValueError(
                f"gain {self.gain} inconsistent with path loss {self.path_loss_db} dB (expected {expected})"
            )
        return self


class SystemConfig(BaseModel):
    """Radio and framing parameters shared by every engine (SI units)"""

    model_config = ConfigDict(frozen=True)

    bandwidth_hz: float = Field(10e6, gt=0, description="Bandwidth W")
    noise_density_w_per_hz: float = Field(1e-19, gt=0, description="Noise power spectral density N_o")
    slot_length_s: float = Field(1800.0, gt=0, description="Slot length T")
    slots_per_frame: int = Field(48, ge=1, description="Slots per frame K")
    gateways: List[GatewayChannel] = Field(..., min_length=1, description="Ordered gateway channels")
    epsilon_time_s: float = Field(1e-9, ge=0, description="Minimum per-gateway time in a frame")

    @model_validator(mode="after")
    def _check_ids(self):
        ids = [g.id for g in self.gateways]
        if ids != list(range(len(ids))):
            raise ValueError(f"gateway ids must be 0..N-1 in order, got {ids}")
        for value in (self.bandwidth_hz, self.noise_density_w_per_hz, self.slot_length_s):
            if not math.isfinite(value):
                raise ValueError("radio parameters must be finite")
        return self

    @classmethod
    def from_path_losses(cls, path_losses_db: Sequence[float] = DEFAULT_PATH_LOSSES_DB, **kwargs) -> "SystemConfig":
        """Build a config whose gateways are given by their path losses"""
        gateways = [GatewayChannel(id=i, path_loss_db=float(pl)) for i, pl in enumerate(path_losses_db)]
        return cls(gateways=gateways, **kwargs)

    @property
    def n_gateways(self) -> int:
        return len(self.gateways)

    @property
    def gains(self) -> np.ndarray:
        return np.array([g.gain for g in self.gateways], dtype=float)

    @property
    def noise_power_w(self) -> float:
        """N_o * W"""
        return self.noise_density_w_per_hz * self.bandwidth_hz

    @property
    def frame_length_s(self) -> float:
        return self.slot_length_s * self.slots_per_frame

    def with_slots(self, slots_per_frame: int) -> "SystemConfig":
        """Copy of this config with a different frame length"""
        return self.model_copy(update={"slots_per_frame": int(slots_per_frame)})
