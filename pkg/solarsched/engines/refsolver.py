"""
Reference Solver - block coordinate ascent on the proportional-fair utility
sum_n log2(sum_t tau[t, n] * r_n(p_t)) over the downlink constraint set.

For fixed power the utility is concave in the time block, for fixed time it is
concave in the power block; each block is maximized by projected gradient
ascent with an Armijo backtracking line search. Intended for small instances.
"""

import logging
import time
from typing import Callable, Optional, Tuple

import numpy as np

from solarsched.domain import LN2, check_feasibility, rate_matrix
from solarsched.engines.scheduler import flat_power_allocation
from solarsched.errors import InvalidInputError, UtilityUndefinedError
from solarsched.schemas.energy import EnergySeries
from solarsched.schemas.response import BcdIteration, BcdTrace
from solarsched.schemas.schedule import Allocation
from solarsched.schemas.system import SystemConfig
from solarsched.utils.logger import log_performance, log_stage

logger = logging.getLogger(__name__)

ARMIJO_FACTOR = 0.5
ARMIJO_SLOPE = 1e-4
DYKSTRA_MAX_CYCLES = 10_000
FEASIBILITY_TOLERANCE = 1e-7
PROGRESS_EVERY = 25


# ---------------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------------

def project_simplex_rows(V: np.ndarray) -> np.ndarray:
    """Euclidean projection of every row onto the probability simplex (sorting method)"""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    n = V.shape[1]
    U = -np.sort(-V, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    ind = np.arange(1, n + 1)
    positive = U - css / ind > 0
    rho = n - 1 - np.argmax(positive[:, ::-1], axis=1)
    theta = css[np.arange(V.shape[0]), rho] / (rho + 1)
    return np.maximum(V - theta[:, None], 0.0)


def _project_column_floor(X: np.ndarray, floor: float) -> np.ndarray:
    sums = X.sum(axis=0)
    short = sums < floor
    if not np.any(short):
        return X
    X = X.copy()
    X[:, short] += (floor - sums[short]) / X.shape[0]
    return X


def project_time_fractions(V: np.ndarray, column_floor: float = 0.0, tol: float = 1e-15) -> np.ndarray:
    """
    Projection onto {F >= 0, rows sum to 1, columns sum to at least column_floor}.
    Dykstra's method between the row simplices and the column half-spaces.
    """
    X = project_simplex_rows(V)
    if column_floor <= 0 or np.all(X.sum(axis=0) >= column_floor):
        return X

    X = np.asarray(V, dtype=float).copy()
    P = np.zeros_like(X)
    Q = np.zeros_like(X)
    for _ in range(DYKSTRA_MAX_CYCLES):
        Y = project_simplex_rows(X + P)
        P = X + P - Y
        Z = _project_column_floor(Y + Q, column_floor)
        Q = Y + Q - Z
        done = np.max(np.abs(Z - X)) <= tol
        X = Z
        if done:
            break
    return project_simplex_rows(X)


def _repair_causal(u: np.ndarray, cap: np.ndarray) -> np.ndarray:
    """Clip forward so every prefix sum stays under its cap"""
    u = np.maximum(u, 0.0)
    total = 0.0
    for t in range(u.size):
        allowed = cap[t] - total
        if u[t] > allowed:
            u[t] = max(allowed, 0.0)
        total += u[t]
    return u


def project_causal(v: np.ndarray, cap: np.ndarray, tol: float = 1e-15) -> np.ndarray:
    """
    Projection onto {u >= 0, sum(u[:t+1]) <= cap[t] for every t}.

    Cyclic Dykstra over the nonnegative orthant and one half-space per prefix
    constraint, followed by a forward repair that makes the result exactly feasible.
    """
    v = np.asarray(v, dtype=float)
    cap = np.asarray(cap, dtype=float)
    w = np.maximum(v, 0.0)
    if np.all(np.cumsum(w) <= cap):
        return w

    K = v.size
    x = v.copy()
    increments = np.zeros((K + 1, K))
    for _ in range(DYKSTRA_MAX_CYCLES):
        start = x.copy()
        y = x + increments[K]
        z = np.maximum(y, 0.0)
        increments[K] = y - z
        x = z
        for t in range(K):
            y = x + increments[t]
            excess = y[:t + 1].sum() - cap[t]
            z = y.copy()
            if excess > 0:
                z[:t + 1] -= excess / (t + 1)
            increments[t] = y - z
            x = z
        if np.max(np.abs(x - start)) <= tol:
            break
    return _repair_causal(x, cap)


# ---------------------------------------------------------------------------
# Block ascent
# ---------------------------------------------------------------------------

def _projected_ascent(
    x0: np.ndarray,
    objective: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    project: Callable[[np.ndarray], np.ndarray],
    max_iter: int,
    tol: float,
) -> Tuple[np.ndarray, float]:
    """Projected gradient ascent with Armijo backtracking; never lowers the objective"""
    x = x0
    f = objective(x)
    step = 1.0
    for _ in range(max_iter):
        g = gradient(x)
        residual = float(np.max(np.abs(project(x + g) - x)))
        if residual <= tol:
            break

        alpha = min(2.0 * step, 1e6)
        accepted = False
        while alpha > 1e-20:
            candidate = project(x + alpha * g)
            f_new = objective(candidate)
            if f_new >= f and f_new >= f + ARMIJO_SLOPE * float(np.sum(g * (candidate - x))):
                accepted = True
                break
            alpha *= ARMIJO_FACTOR
        if not accepted:
            break

        improvement = f_new - f
        x, f, step = candidate, f_new, alpha
        if improvement <= 1e-15 * max(1.0, abs(f)):
            break
    return x, f


def _utility_of(tau: np.ndarray, rates: np.ndarray) -> float:
    bits = np.sum(tau * rates, axis=0)
    if np.any(bits <= 0):
        return -np.inf
    return float(np.sum(np.log2(bits)))


def _require_feasible(power, tau, energies: EnergySeries, cfg: SystemConfig, what: str):
    report = check_feasibility(Allocation.from_arrays(power, tau), energies, cfg, tolerance=FEASIBILITY_TOLERANCE)
    if not report.feasible:
        raise InvalidInputError(f"{what} is infeasible: {report.violations[0].message}")


def _frame_energies(energies: EnergySeries, cfg: SystemConfig) -> np.ndarray:
    if len(energies) != cfg.slots_per_frame:
        raise InvalidInputError(f"frame needs {cfg.slots_per_frame} slots, got {len(energies)}")
    return energies.energies


def optimize_tau_given_p(
    p,
    cfg: SystemConfig,
    energies: EnergySeries,
    tau_init,
    max_iter: int = 2000,
    tol: float = 1e-11,
) -> np.ndarray:
    """
    Maximize the utility over the time block with power held fixed.

    Args:
        p: Power per slot (W)
        cfg: System configuration
        energies: Frame harvests (for the feasibility precondition)
        tau_init: Feasible K x N starting time matrix (s)

    Returns:
        Time matrix in seconds with utility no lower than at tau_init

    Raises:
        InvalidInputError: Infeasible starting point
    """
    _frame_energies(energies, cfg)
    p = np.asarray(p, dtype=float)
    tau_init = np.asarray(tau_init, dtype=float)
    _require_feasible(p, tau_init, energies, cfg, "time initialization")

    T = cfg.slot_length_s
    rates = rate_matrix(p, cfg)
    floor = cfg.epsilon_time_s / T

    def objective(F):
        return _utility_of(F * T, rates)

    def gradient(F):
        bits = np.sum(F * T * rates, axis=0)
        return T * rates / (np.where(bits > 0, bits, np.inf) * LN2)

    F, _ = _projected_ascent(
        tau_init / T, objective, gradient,
        lambda V: project_time_fractions(V, floor),
        max_iter, tol,
    )
    return F * T


def optimize_p_given_tau(
    tau,
    cfg: SystemConfig,
    energies: EnergySeries,
    p_init,
    max_iter: int = 2000,
    tol: float = 1e-11,
) -> np.ndarray:
    """
    Maximize the utility over the power block with time held fixed.

    The power is searched in units of the frame's total harvest, u_t = p_t*T/C,
    where causality reads sum(u[:t+1]) <= (harvest through t)/C.

    Raises:
        InvalidInputError: Infeasible starting point
    """
    E = _frame_energies(energies, cfg)
    tau = np.asarray(tau, dtype=float)
    p_init = np.asarray(p_init, dtype=float)
    _require_feasible(p_init, tau, energies, cfg, "power initialization")

    T = cfg.slot_length_s
    C = float(E.sum())
    if C <= 0:
        return np.zeros_like(p_init)
    cap = np.cumsum(E) / C
    cap[-1] = 1.0
    gains = cfg.gains
    noise = cfg.noise_power_w

    def objective(u):
        return _utility_of(tau, rate_matrix(u * C / T, cfg))

    def gradient(u):
        p = u * C / T
        bits = np.sum(tau * rate_matrix(p, cfg), axis=0)
        drate = cfg.bandwidth_hz * gains[None, :] / (LN2 * (noise + np.outer(p, gains)))
        dU_dp = np.sum(tau * drate / (np.where(bits > 0, bits, np.inf) * LN2), axis=1)
        return dU_dp * C / T

    u0 = _repair_causal(p_init * T / C, cap)
    u, _ = _projected_ascent(u0, objective, gradient, lambda v: project_causal(v, cap), max_iter, tol)
    return u * C / T


def _default_init(E: np.ndarray, cfg: SystemConfig) -> Allocation:
    K, N = E.size, cfg.n_gateways
    return Allocation.from_arrays(flat_power_allocation(E, cfg), np.full((K, N), cfg.slot_length_s / N))


def _record(alloc: Allocation, energies: EnergySeries, cfg: SystemConfig) -> BcdIteration:
    report = check_feasibility(alloc, energies, cfg, tolerance=0.0)
    return BcdIteration(
        utility=_utility_of(alloc.tau, rate_matrix(alloc.power, cfg)),
        max_constraint_violation=report.max_violation,
    )


def bcd_solve(
    energies: EnergySeries,
    cfg: SystemConfig,
    init: Optional[Allocation] = None,
    max_sweeps: int = 500,
    tol: float = 1e-8,
    seed: Optional[int] = None,
) -> BcdTrace:
    """
    Alternate time and power block maximizations until a sweep gains less than `tol`.

    Args:
        energies: Frame harvests
        cfg: System configuration
        init: Feasible starting allocation; uniform time shares with the flat power
            profile when omitted or when the utility is undefined at `init`
        max_sweeps: Sweep cap
        tol: Utility gain per sweep below which the run stops

    Returns:
        BcdTrace with one entry for the start and one per sweep

    Raises:
        InvalidInputError: Infeasible init
        UtilityUndefinedError: The frame harvests no energy
    """
    start_time = time.time()
    E = _frame_energies(energies, cfg)
    if init is None:
        alloc = _default_init(E, cfg)
    else:
        _require_feasible(init.power, init.tau, energies, cfg, "BCD initialization")
        alloc = init
        if not np.isfinite(_utility_of(alloc.tau, rate_matrix(alloc.power, cfg))):
            logger.info("Utility undefined at the given start; using uniform time with the flat profile")
            alloc = _default_init(E, cfg)

    first = _record(alloc, energies, cfg)
    if not np.isfinite(first.utility):
        raise UtilityUndefinedError("no gateway can receive bits: the frame harvests no energy")

    iterations = [first]
    p, tau = alloc.power, alloc.tau
    converged = False
    for _ in range(max_sweeps):
        tau = optimize_tau_given_p(p, cfg, energies, tau)
        p = optimize_p_given_tau(tau, cfg, energies, p)
        alloc = Allocation.from_arrays(p, tau)
        record = _record(alloc, energies, cfg)
        gain = record.utility - iterations[-1].utility
        iterations.append(record)
        if len(iterations) % PROGRESS_EVERY == 0:
            logger.info(f"BCD sweep {len(iterations) - 1}/{max_sweeps}: utility {record.utility:.9g}")
        if gain < tol:
            converged = True
            break

    trace = BcdTrace(iterations=iterations, allocation=alloc, converged=converged, seed=seed)
    log_stage("bcd", f"{trace.sweeps} sweeps, utility {trace.final_utility:.9g}, converged={converged}")
    log_performance("refsolver.bcd_solve", (time.time() - start_time) * 1000)
    return trace


def random_feasible_allocation(E: np.ndarray, cfg: SystemConfig, rng: np.random.Generator) -> Allocation:
    """Random time shares and a random causal full-spend power profile"""
    K, N, T = E.size, cfg.n_gateways, cfg.slot_length_s
    tau = rng.dirichlet(np.ones(N), size=K) * T
    power = np.zeros(K)
    stored = 0.0
    for t in range(K):
        stored += E[t]
        spend = stored if t == K - 1 else rng.uniform() * stored
        power[t] = spend / T
        stored -= spend
    return Allocation.from_arrays(power, tau)


def bcd_best_of(energies: EnergySeries, cfg: SystemConfig, restarts: int = 10, seed: int = 0, **kwargs) -> BcdTrace:
    """
    Best of several BCD runs: the default start plus random feasible starts.
    Restart seeds are spawned from `seed`, so results are reproducible.
    """
    if restarts < 1:
        raise InvalidInputError("restarts must be at least 1")
    E = _frame_energies(energies, cfg)
    children = np.random.SeedSequence(seed).spawn(restarts - 1)

    best = bcd_solve(energies, cfg, seed=seed, **kwargs)
    log_stage("bcd", f"start 1/{restarts}: utility {best.final_utility:.9g}")
    for i, child in enumerate(children, start=2):
        init = random_feasible_allocation(E, cfg, np.random.default_rng(child))
        trace = bcd_solve(energies, cfg, init=init, seed=seed, **kwargs)
        log_stage("bcd", f"start {i}/{restarts}: utility {trace.final_utility:.9g}")
        if trace.final_utility > best.final_utility:
            best = trace
    log_stage("bcd", f"best of {restarts} restarts: utility {best.final_utility:.9g}")
    return best
