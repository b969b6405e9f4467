"""
Domain Module - AWGN rate function, proportional-fair utility and the
feasibility check for the downlink scheduling problem.
All quantities are SI: joules, seconds, watts, hertz, bits.
"""

import math
from typing import List, Sequence

import numpy as np

from solarsched.errors import InvalidInputError, UtilityUndefinedError
from solarsched.schemas.energy import EnergySeries
from solarsched.schemas.schedule import Allocation, FeasibilityReport, Schedule, Violation
from solarsched.schemas.system import GatewayChannel, SystemConfig

LN2 = math.log(2.0)


def rate_bits_per_sec(power_w: float, gateway: GatewayChannel, cfg: SystemConfig) -> float:
    """
    AWGN capacity W*log2(1 + p*g/(N_o*W)) towards one gateway.

    Args:
        power_w: Transmit power in watts
        gateway: Target gateway channel
        cfg: System configuration

    Returns:
        Rate in bits/s

    Raises:
        InvalidInputError: If power is negative or not finite
    """
    if not isinstance(power_w, (int, float, np.floating, np.integer)) or not math.isfinite(power_w):
        raise InvalidInputError(f"power must be a finite number, got {power_w!r}")
    if power_w < 0:
        raise InvalidInputError(f"power must be nonnegative, got {power_w}")
    snr = power_w * gateway.gain / cfg.noise_power_w
    return cfg.bandwidth_hz * math.log1p(snr) / LN2


def rate_matrix(power_w: Sequence[float], cfg: SystemConfig) -> np.ndarray:
    """Rates r[t, n] in bits/s for a power vector; vectorized form of rate_bits_per_sec"""
    p = np.asarray(power_w, dtype=float)
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise InvalidInputError("power vector must be finite and nonnegative")
    snr = np.outer(p, cfg.gains) / cfg.noise_power_w
    return cfg.bandwidth_hz * np.log1p(snr) / LN2


def bits_from_allocation(alloc: Allocation, cfg: SystemConfig) -> np.ndarray:
    """Bits delivered to each gateway: R_n = sum_t tau[t, n] * r_n(p_t)"""
    return np.sum(alloc.tau * rate_matrix(alloc.power, cfg), axis=0)


def utility_from_bits(bits_per_gateway: Sequence[float]) -> float:
    """
    Proportional-fair utility sum_n log2(R_n).

    Raises:
        UtilityUndefinedError: If any gateway total is exactly zero
        InvalidInputError: If any total is negative or not finite
    """
    bits = np.asarray(bits_per_gateway, dtype=float)
    if bits.size == 0:
        raise InvalidInputError("utility needs at least one gateway")
    if not np.all(np.isfinite(bits)) or np.any(bits < 0):
        raise InvalidInputError(f"bit totals must be finite and nonnegative, got {bits.tolist()}")
    zero = np.flatnonzero(bits == 0)
    if zero.size:
        raise UtilityUndefinedError(f"gateways {zero.tolist()} received zero bits; log-utility undefined")
    return float(np.sum(np.log2(bits)))


def frame_utility(schedule: Schedule, cfg: SystemConfig) -> float:
    """Log-sum utility of a frame schedule"""
    if len(schedule.bits_per_gateway) != cfg.n_gateways:
        raise InvalidInputError(
            f"schedule has {len(schedule.bits_per_gateway)} gateways, config has {cfg.n_gateways}"
        )
    return utility_from_bits(schedule.bits_per_gateway)


def check_feasibility(
    alloc: Allocation,
    energies: EnergySeries,
    cfg: SystemConfig,
    tolerance: float = 1e-9,
    initial_energy_j: float = 0.0,
) -> FeasibilityReport:
    """
    Check an allocation against the problem's constraint set.

    Constraints: nonnegativity of p and tau; per-slot time sums equal to T and
    every gateway receiving at least epsilon seconds over the frame; cumulative
    energy causality at every slot boundary.

    Args:
        alloc: Allocation to check
        energies: Harvests of the frame
        cfg: System configuration
        tolerance: Relative slack applied to every comparison
        initial_energy_j: Energy already in the battery when the frame starts

    Returns:
        FeasibilityReport whose violation list is empty iff the allocation is feasible

    Raises:
        InvalidInputError: On dimension mismatch or non-finite entries
    """
    K, N = cfg.slots_per_frame, cfg.n_gateways
    if alloc.n_slots != K or len(energies) != K:
        raise InvalidInputError(
            f"expected {K} slots, got allocation with {alloc.n_slots} and energies with {len(energies)}"
        )
    if alloc.n_gateways != N:
        raise InvalidInputError(f"expected {N} gateways, allocation has {alloc.n_gateways}")
    if initial_energy_j < 0:
        raise InvalidInputError("initial energy must be nonnegative")

    p, tau, E = alloc.power, alloc.tau, energies.energies
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(tau))):
        raise InvalidInputError("allocation contains non-finite entries")

    T = cfg.slot_length_s
    violations: List[Violation] = []

    for t in np.flatnonzero(p < 0):
        violations.append(Violation(
            constraint="nonnegativity", slot=int(t), amount=float(-p[t]),
            message=f"negative power {p[t]} W in slot {t}",
        ))
    for t, n in zip(*np.nonzero(tau < 0)):
        violations.append(Violation(
            constraint="nonnegativity", slot=int(t), gateway=int(n), amount=float(-tau[t, n]),
            message=f"negative time {tau[t, n]} s for gateway {n} in slot {t}",
        ))

    slot_sums = tau.sum(axis=1)
    for t in np.flatnonzero(np.abs(slot_sums - T) > tolerance * T):
        violations.append(Violation(
            constraint="time_sum", slot=int(t), amount=float(abs(slot_sums[t] - T)),
            message=f"slot {t} time sums to {slot_sums[t]} s instead of {T} s",
        ))

    eps = cfg.epsilon_time_s
    gateway_sums = tau.sum(axis=0)
    for n in np.flatnonzero(gateway_sums < eps * (1.0 - tolerance)):
        violations.append(Violation(
            constraint="min_time", gateway=int(n), amount=float(eps - gateway_sums[n]),
            message=f"gateway {n} gets {gateway_sums[n]} s over the frame, below {eps} s",
        ))

    spent = np.cumsum(p * T)
    harvested = initial_energy_j + np.cumsum(E)
    slack = tolerance * max(1.0, float(harvested[-1]))
    for t in np.flatnonzero(spent - harvested > slack):
        violations.append(Violation(
            constraint="causality", slot=int(t), amount=float(spent[t] - harvested[t]),
            message=f"cumulative spend {spent[t]:.6g} J exceeds cumulative harvest {harvested[t]:.6g} J at slot {t}",
        ))

    return FeasibilityReport(violations=violations)
