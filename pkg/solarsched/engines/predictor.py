"""
Predictor Engine - K-SEP diurnal Kalman predictor, S-SEP two-day average
predictor, model weight fitting and prediction error evaluation.

State model:       x(k+1) = alpha1*x(k) + alpha2*x(k-47) + beta1*y(k) + w(k)
Measurement model: z(k)   = x(k) + v(k)

The filter carries the augmented state xi_k = [x(k), x(k-1), ..., x(k-47)].
"""

import logging
import time
from functools import lru_cache
from typing import Optional, Protocol, Sequence, Tuple

import numpy as np
import pandas as pd

from solarsched.errors import InsufficientHistoryError, InvalidInputError, SingularFitError
from solarsched.schemas.energy import SUBHOURS_PER_DAY, SubHourSeries
from solarsched.schemas.predictor import (
    DEFAULT_INITIAL_WEIGHTS,
    STATE_DIM,
    FitReport,
    KalmanState,
    PredictorParams,
    WeightSet,
)
from solarsched.utils.logger import log_performance, log_stage

logger = logging.getLogger(__name__)

FIT_METHODS = ("newton", "ols")
MEASUREMENT_NOISE_RATIO = 1e-4
J2_PER_KJ2 = 1e6


# ---------------------------------------------------------------------------
# Model fitting
# ---------------------------------------------------------------------------

def regressors(energies: Sequence[float], irradiation: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    One-step regression problem of the state model.

    Returns:
        (X, target) with rows [x(k), x(k-47), y(k)] -> x(k+1) for k = 47 .. n-2
    """
    x = np.asarray(energies, dtype=float)
    y = np.asarray(irradiation, dtype=float)
    if x.shape != y.shape:
        raise InvalidInputError("energy and irradiation histories differ in length")
    if x.size < STATE_DIM + 1:
        raise InsufficientHistoryError(
            f"fitting needs at least {STATE_DIM + 1} consecutive sub-hours, got {x.size}"
        )
    k = np.arange(STATE_DIM - 1, x.size - 1)
    X = np.column_stack((x[k], x[k - (STATE_DIM - 1)], y[k]))
    return X, x[k + 1]


def _scaled_design(X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    scales = np.linalg.norm(X, axis=0)
    if np.any(scales == 0) or np.linalg.matrix_rank(X / np.where(scales == 0, 1.0, scales)) < X.shape[1]:
        raise SingularFitError(
            "regressor matrix is rank deficient (all-zero history, or an irradiation channel "
            "collinear with the energy channel)"
        )
    return X / scales, scales


def _newton(Xs: np.ndarray, target: np.ndarray, u0: np.ndarray, max_iter: int, tol: float):
    """Damped Newton on the mean squared residual, in column-scaled coordinates"""
    M = target.size
    hessian = 2.0 / M * (Xs.T @ Xs)

    def objective(u):
        r = Xs @ u - target
        return float(r @ r) / M

    u = u0.copy()
    f = objective(u)
    for it in range(1, max_iter + 1):
        grad = 2.0 / M * (Xs.T @ (Xs @ u - target))
        step = np.linalg.solve(hessian, grad)
        decrease = float(grad @ step)
        lam = 1.0
        while lam > 1e-10:
            candidate = u - lam * step
            f_new = objective(candidate)
            if f_new <= f - 1e-4 * lam * decrease or f_new <= f:
                break
            lam *= 0.5
        u, f_prev, f = candidate, f, f_new
        if lam * np.linalg.norm(step) <= tol * (1.0 + np.linalg.norm(u)) or f_prev - f <= tol * max(f, 1e-300):
            return u, it, True
    return u, max_iter, False


def fit_weights(
    history: SubHourSeries,
    init: WeightSet = DEFAULT_INITIAL_WEIGHTS,
    method: str = "newton",
    max_iter: int = 50,
    tol: float = 1e-12,
) -> FitReport:
    """
    Fit (alpha1, alpha2, beta1) by minimising the mean squared one-step residual.

    Args:
        history: At least 49 consecutive sub-hours
        init: Starting point for Newton (ignored by ols)
        method: "newton" (damped Newton) or "ols" (normal equations)
        max_iter: Newton iteration cap
        tol: Newton stopping tolerance

    Returns:
        FitReport; both methods reach the same weights because the objective is quadratic

    Raises:
        SingularFitError: Rank-deficient regressors
        InsufficientHistoryError: Fewer than 49 sub-hours
    """
    if method not in FIT_METHODS:
        raise InvalidInputError(f"method must be one of {FIT_METHODS}, got {method!r}")

    start_time = time.time()
    X, target = regressors(history.energies, history.irradiation)
    Xs, scales = _scaled_design(X)

    if method == "ols":
        u = np.linalg.solve(Xs.T @ Xs, Xs.T @ target)
        iterations, converged = 0, True
    else:
        u, iterations, converged = _newton(Xs, target, init.as_array() * scales, max_iter, tol)

    w = u / scales
    residuals = X @ w - target
    report = FitReport(
        weights=WeightSet.from_array(w),
        objective_value=float(np.mean(residuals ** 2)),
        iterations=iterations,
        converged=converged,
        method=method,
        n_samples=int(target.size),
        residual_variance=float(np.var(residuals, ddof=1)) if target.size > 1 else 0.0,
    )
    log_stage("fit", f"{method}: alpha1={w[0]:.6g} alpha2={w[1]:.6g} beta1={w[2]:.6g} after {iterations} steps")
    log_performance("predictor.fit_weights", (time.time() - start_time) * 1000)
    return report


def default_noise(fit: FitReport) -> PredictorParams:
    """sigma_w^2 = residual sample variance, sigma_v^2 = 1e-4 * sigma_w^2"""
    sigma_w_sq = fit.residual_variance
    return PredictorParams(
        weights=fit.weights,
        sigma_w_sq=sigma_w_sq,
        sigma_v_sq=MEASUREMENT_NOISE_RATIO * sigma_w_sq,
    )


# ---------------------------------------------------------------------------
# K-SEP
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _transition_matrix(alpha1: float, alpha2: float) -> np.ndarray:
    A = np.zeros((STATE_DIM, STATE_DIM))
    A[0, 0] = alpha1
    A[0, STATE_DIM - 1] = alpha2
    A[np.arange(1, STATE_DIM), np.arange(STATE_DIM - 1)] = 1.0
    A.flags.writeable = False
    return A


def transition_matrix(weights: WeightSet) -> np.ndarray:
    """A: first row alpha1 / alpha2 on x(k) / x(k-47), shift below"""
    return _transition_matrix(weights.alpha1, weights.alpha2)


def input_vector(weights: WeightSet) -> np.ndarray:
    """B-bar = [beta1, 0, ..., 0]'"""
    b = np.zeros(STATE_DIM)
    b[0] = weights.beta1
    return b


def noise_vector() -> np.ndarray:
    """Gamma-bar = [1, 0, ..., 0]'"""
    g = np.zeros(STATE_DIM)
    g[0] = 1.0
    return g


def initial_state(prior_day_j: Sequence[float], params: PredictorParams, phase: int = STATE_DIM - 1) -> KalmanState:
    """
    Filter state at the last sub-hour of a measured day.

    Args:
        prior_day_j: 48 measured energies in chronological order
        params: Weights and noise variances
        phase: Sub-hour index (mod 48) of the last entry

    Returns:
        KalmanState with xi = the day reversed (newest first) and P = sigma_w^2 * I
    """
    day = np.asarray(prior_day_j, dtype=float)
    if day.shape != (STATE_DIM,):
        raise InsufficientHistoryError(f"initial state needs {STATE_DIM} sub-hours, got {day.size}")
    return KalmanState(
        xi=day[::-1].copy(),
        P=params.sigma_w_sq * np.eye(STATE_DIM),
        weights=params.weights,
        sigma_w_sq=params.sigma_w_sq,
        sigma_v_sq=params.sigma_v_sq,
        phase=phase % STATE_DIM,
    )


def ksep_step(state: KalmanState, y_k: float, z_k: float) -> Tuple[KalmanState, float]:
    """
    Measurement update with z(k), then time propagation to k+1.

    Gain K = P H'(H P H' + sigma_v^2)^-1 with H selecting x(k); the covariance
    update uses the Joseph form and is symmetrized. When both the prior variance
    of x(k) and the measurement noise are zero, the measurement replaces x(k).

    Args:
        state: Pre-measurement state at k
        y_k: Irradiation of sub-hour k
        z_k: Measured energy of sub-hour k (J)

    Returns:
        (pre-measurement state at k+1, predicted energy of sub-hour k+1 clamped at 0)

    Raises:
        InvalidInputError: Non-finite inputs
    """
    if not (np.isfinite(y_k) and np.isfinite(z_k)):
        raise InvalidInputError(f"ksep_step needs finite inputs, got y={y_k}, z={z_k}")

    xi, P = state.xi, state.P
    S = float(P[0, 0] + state.sigma_v_sq)
    innovation = float(z_k - xi[0])

    if S > 0.0:
        gain = P[:, 0] / S
    else:
        gain = noise_vector()

    xi_post = xi + gain * innovation
    I_KH = np.eye(STATE_DIM)
    I_KH[:, 0] -= gain
    P_post = I_KH @ P @ I_KH.T + state.sigma_v_sq * np.outer(gain, gain)
    P_post = 0.5 * (P_post + P_post.T)

    w = state.weights
    A = transition_matrix(w)
    gamma = noise_vector()
    xi_next = A @ xi_post + input_vector(w) * y_k
    P_next = A @ P_post @ A.T + state.sigma_w_sq * np.outer(gamma, gamma)
    P_next = 0.5 * (P_next + P_next.T)

    next_state = KalmanState(
        xi=xi_next,
        P=P_next,
        weights=w,
        sigma_w_sq=state.sigma_w_sq,
        sigma_v_sq=state.sigma_v_sq,
        phase=(state.phase + 1) % STATE_DIM,
        innovation=innovation,
        innovation_var=S,
        gain=gain,
    )
    return next_state, max(0.0, float(xi_next[0]))


class KsepPredictor:
    """
    Runs the K-SEP filter along a measured series, one sub-hour at a time.
    The filter is initialized from 48 measured sub-hours and then absorbs
    measurements strictly in order.
    """

    def __init__(self, series: SubHourSeries, params: PredictorParams, init_start: int):
        self.energies = series.energies
        self.irradiation = series.irradiation
        if init_start < 0 or init_start + STATE_DIM > self.energies.size:
            raise InsufficientHistoryError(
                f"K-SEP initialization needs sub-hours {init_start}..{init_start + STATE_DIM - 1}"
            )
        last = init_start + STATE_DIM - 1
        self.state = initial_state(self.energies[init_start:last + 1], params, phase=last)
        self.next_index = last
        self.prediction: Optional[float] = None

    def observe_until(self, index: int) -> float:
        """Absorb measurements through `index`; returns the prediction for index + 1"""
        if index >= self.energies.size:
            raise InvalidInputError(f"sub-hour {index} has not been measured")
        if index < self.next_index - 1:
            raise InvalidInputError(f"sub-hour {index} was already absorbed")
        while self.next_index <= index:
            k = self.next_index
            self.state, self.prediction = ksep_step(self.state, self.irradiation[k], self.energies[k])
            self.next_index += 1
        return self.prediction


# ---------------------------------------------------------------------------
# S-SEP and error evaluation
# ---------------------------------------------------------------------------

def ssep_predict(same_subhour_day_minus_1: float, same_subhour_day_minus_2: float) -> float:
    """Average of the same sub-hour on the previous two days"""
    a, b = float(same_subhour_day_minus_1), float(same_subhour_day_minus_2)
    if not (np.isfinite(a) and np.isfinite(b)):
        raise InvalidInputError("S-SEP inputs must be finite")
    if a < 0 or b < 0:
        raise InvalidInputError(f"S-SEP inputs must be nonnegative, got {a}, {b}")
    return 0.5 * (a + b)


def prediction_mse(real: Sequence[float], predicted: Sequence[float]) -> float:
    """Mean squared prediction error in the squared unit of the inputs"""
    r = np.asarray(real, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if r.shape != p.shape:
        raise InvalidInputError(f"length mismatch: {r.size} real vs {p.size} predicted")
    if r.size == 0:
        raise InvalidInputError("MSE needs at least one sample")
    return float(np.mean((r - p) ** 2))


def run_ksep(series: SubHourSeries, params: PredictorParams, start: int, stop: Optional[int] = None) -> np.ndarray:
    """
    One-step-ahead K-SEP predictions for sub-hours [start, stop).
    The filter warms up on up to one day before the first prediction.
    """
    stop = len(series) if stop is None else stop
    if start < STATE_DIM:
        raise InsufficientHistoryError(f"K-SEP needs {STATE_DIM} measured sub-hours before sub-hour {start}")
    if stop > len(series) or stop <= start:
        raise InvalidInputError(f"invalid prediction range [{start}, {stop})")
    predictor = KsepPredictor(series, params, init_start=max(0, start - 2 * STATE_DIM))
    return np.array([predictor.observe_until(b - 1) for b in range(start, stop)])


def run_ssep(series: SubHourSeries, start: int, stop: Optional[int] = None) -> np.ndarray:
    """S-SEP predictions for sub-hours [start, stop); needs two prior days"""
    stop = len(series) if stop is None else stop
    if start < 2 * SUBHOURS_PER_DAY:
        raise InsufficientHistoryError(f"S-SEP needs two prior days before sub-hour {start}")
    E = series.energies
    return np.array([ssep_predict(E[b - SUBHOURS_PER_DAY], E[b - 2 * SUBHOURS_PER_DAY]) for b in range(start, stop)])


def daily_mse_table(series: SubHourSeries, params: PredictorParams, first_day: int = 2) -> pd.DataFrame:
    """
    Per-day prediction MSE of both predictors in kJ^2.

    Returns:
        DataFrame with columns day, ksep_mse_kj2, ssep_mse_kj2
    """
    if first_day < 2:
        raise InsufficientHistoryError("S-SEP needs two prior days; first_day must be >= 2")
    n_days = series.n_complete_days
    if n_days <= first_day:
        raise InsufficientHistoryError(f"series has {n_days} complete days, evaluation starts at day {first_day}")

    start, stop = first_day * SUBHOURS_PER_DAY, n_days * SUBHOURS_PER_DAY
    real = series.energies[start:stop]
    ksep = run_ksep(series, params, start, stop)
    ssep = run_ssep(series, start, stop)

    rows = []
    for d in range(n_days - first_day):
        day = slice(d * SUBHOURS_PER_DAY, (d + 1) * SUBHOURS_PER_DAY)
        rows.append({
            "day": first_day + d,
            "ksep_mse_kj2": prediction_mse(real[day], ksep[day]) / J2_PER_KJ2,
            "ssep_mse_kj2": prediction_mse(real[day], ssep[day]) / J2_PER_KJ2,
        })
    return pd.DataFrame(rows)


# ---------------------------------------------------------------------------
# Forecasters used by the online scheduler
# ---------------------------------------------------------------------------

class HarvestForecaster(Protocol):
    def forecast(self, index: int, horizon: int) -> Tuple[Optional[float], np.ndarray]:
        """
        Forecast after measuring sub-hour `index`.

        Returns:
            (prediction for index+1 or None when horizon < 2,
             predictions for index+2 .. index+horizon-1)
        """
        ...


class KsepSsepForecaster:
    """K-SEP for the next sub-hour, S-SEP for the rest of the horizon"""

    def __init__(self, series: SubHourSeries, params: PredictorParams, first_index: int):
        if first_index < 2 * SUBHOURS_PER_DAY:
            raise InsufficientHistoryError(
                f"online prediction needs two measured days before sub-hour {first_index}"
            )
        self.energies = series.energies
        self.ksep = KsepPredictor(series, params, init_start=first_index - 2 * SUBHOURS_PER_DAY)

    def forecast(self, index: int, horizon: int) -> Tuple[Optional[float], np.ndarray]:
        ksep_next = self.ksep.observe_until(index)
        if horizon < 2:
            return None, np.zeros(0)
        E = self.energies
        rest = np.array([
            ssep_predict(E[b - SUBHOURS_PER_DAY], E[b - 2 * SUBHOURS_PER_DAY])
            for b in range(index + 2, index + horizon)
        ])
        return ksep_next, rest


class OracleForecaster:
    """Returns the true future harvests"""

    def __init__(self, series: SubHourSeries):
        self.energies = series.energies

    def forecast(self, index: int, horizon: int) -> Tuple[Optional[float], np.ndarray]:
        if index + horizon > self.energies.size:
            raise InsufficientHistoryError(
                f"oracle horizon reaches sub-hour {index + horizon - 1}, series ends at {self.energies.size - 1}"
            )
        if horizon < 2:
            return None, np.zeros(0)
        return float(self.energies[index + 1]), self.energies[index + 2:index + horizon].copy()
