from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

STATE_DIM = 48


class WeightSet(BaseModel):
    """
    Weights of the harvest state model
    x(k+1) = alpha1*x(k) + alpha2*x(k-47) + beta1*y(k) + w(k).

    With x in joules, beta1 is in joules per unit of y.
    """

    model_config = ConfigDict(frozen=True)

    alpha1: float = Field(..., allow_inf_nan=False)
    alpha2: float = Field(..., allow_inf_nan=False)
    beta1: float = Field(..., allow_inf_nan=False)

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha1, self.alpha2, self.beta1], dtype=float)

    @classmethod
    def from_array(cls, values) -> "WeightSet":
        a1, a2, b1 = (float(v) for v in values)
        return cls(alpha1=a1, alpha2=a2, beta1=b1)

    def in_kilojoules(self) -> "WeightSet":
        """Same model with x expressed in kilojoules (beta1 scaled by 1/1000)"""
        return WeightSet(alpha1=self.alpha1, alpha2=self.alpha2, beta1=self.beta1 / 1000.0)


DEFAULT_INITIAL_WEIGHTS = WeightSet(alpha1=0.9, alpha2=0.1, beta1=0.01)


class FitReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    weights: WeightSet
    objective_value: float = Field(..., ge=0, description="Mean squared one-step residual (J^2)")
    iterations: int = Field(..., ge=0)
    converged: bool
    method: str = "newton"
    n_samples: int = 0
    residual_variance: float = Field(0.0, ge=0, description="Sample variance of the residuals")


class PredictorParams(BaseModel):
    """Weights plus noise variances; the unit persisted between runs"""

    model_config = ConfigDict(frozen=True)

    weights: WeightSet
    sigma_w_sq: float = Field(..., ge=0, allow_inf_nan=False)
    sigma_v_sq: float = Field(..., ge=0, allow_inf_nan=False)


class KalmanState(BaseModel):
    """
    Pre-measurement state of the diurnal Kalman filter at sub-hour k.

    Attributes:
        xi: Augmented state [x(k), x(k-1), ..., x(k-47)] in joules
        P: Error covariance of xi
        weights: Model weights
        sigma_w_sq: Process noise variance
        sigma_v_sq: Measurement noise variance
        phase: Sub-hour index k mod 48
        innovation: Innovation of the last update (None before the first step)
        innovation_var: Innovation variance of the last update
        gain: Kalman gain of the last update
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    xi: np.ndarray
    P: np.ndarray
    weights: WeightSet
    sigma_w_sq: float = Field(..., ge=0)
    sigma_v_sq: float = Field(..., ge=0)
    phase: int = Field(0, ge=0, lt=STATE_DIM)
    innovation: Optional[float] = None
    innovation_var: Optional[float] = None
    gain: Optional[np.ndarray] = None

    @field_validator("xi")
    @classmethod
    def _check_xi(cls, xi):
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (STATE_DIM,):
            raise ValueError(f"xi must have shape ({STATE_DIM},), got {xi.shape}")
        if not np.all(np.isfinite(xi)):
            raise ValueError("xi must be finite")
        return xi

    @field_validator("P")
    @classmethod
    def _check_p(cls, P):
        P = np.asarray(P, dtype=float)
        if P.shape != (STATE_DIM, STATE_DIM):
            raise ValueError(f"P must be {STATE_DIM}x{STATE_DIM}, got {P.shape}")
        if not np.all(np.isfinite(P)):
            raise ValueError("P must be finite")
        return P

    @property
    def params(self) -> PredictorParams:
        return PredictorParams(weights=self.weights, sigma_w_sq=self.sigma_w_sq, sigma_v_sq=self.sigma_v_sq)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.P + self.P.T))[0])

    def is_symmetric(self, atol: float = 1e-9) -> bool:
        return bool(np.allclose(self.P, self.P.T, rtol=0.0, atol=atol))
