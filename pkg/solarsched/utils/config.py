"""
Configuration Module - loads the system configuration and fitted predictor
parameters from plain-text key=value files.
"""

import logging
import os
from typing import Dict, Optional

from dotenv import dotenv_values
from pydantic import ValidationError

from solarsched.errors import ConfigError
from solarsched.schemas.predictor import PredictorParams, WeightSet
from solarsched.schemas.system import DEFAULT_PATH_LOSSES_DB, SystemConfig

logger = logging.getLogger(__name__)

SYSTEM_KEYS = {
    "bandwidth_hz",
    "noise_density",
    "slot_length_s",
    "slots_per_frame",
    "gateway_path_loss_db",
    "epsilon_time_s",
}

PREDICTOR_KEYS = ("alpha1", "alpha2", "beta1", "sigma_w_sq", "sigma_v_sq")


def _read_pairs(path: str) -> Dict[str, str]:
    if not os.path.exists(path):
        raise ConfigError(f"configuration file not found: {path}")
    values = dotenv_values(path)
    empty = [k for k, v in values.items() if v is None or v.strip() == ""]
    if empty:
        raise ConfigError(f"{path}: keys without a value: {empty}")
    return {k.strip().lower(): v.strip() for k, v in values.items()}


def _as_float(path: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{path}: {key} must be a number, got {raw!r}")


def load_system_config(path: Optional[str] = None) -> SystemConfig:
    """
    Load a SystemConfig; missing keys take the default radio setup.

    Args:
        path: key=value file; None returns the defaults

    Raises:
        ConfigError: Unknown key, unparseable value or invalid configuration
    """
    if path is None:
        return SystemConfig.from_path_losses(DEFAULT_PATH_LOSSES_DB)

    pairs = _read_pairs(path)
    unknown = sorted(set(pairs) - SYSTEM_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}; allowed: {sorted(SYSTEM_KEYS)}")

    kwargs = {}
    if "bandwidth_hz" in pairs:
        kwargs["bandwidth_hz"] = _as_float(path, "bandwidth_hz", pairs["bandwidth_hz"])
    if "noise_density" in pairs:
        kwargs["noise_density_w_per_hz"] = _as_float(path, "noise_density", pairs["noise_density"])
    if "slot_length_s" in pairs:
        kwargs["slot_length_s"] = _as_float(path, "slot_length_s", pairs["slot_length_s"])
    if "epsilon_time_s" in pairs:
        kwargs["epsilon_time_s"] = _as_float(path, "epsilon_time_s", pairs["epsilon_time_s"])
    if "slots_per_frame" in pairs:
        slots = _as_float(path, "slots_per_frame", pairs["slots_per_frame"])
        if slots != int(slots):
            raise ConfigError(f"{path}: slots_per_frame must be an integer")
        kwargs["slots_per_frame"] = int(slots)

    path_losses = DEFAULT_PATH_LOSSES_DB
    if "gateway_path_loss_db" in pairs:
        items = [s for s in pairs["gateway_path_loss_db"].split(",") if s.strip()]
        path_losses = [_as_float(path, "gateway_path_loss_db", s.strip()) for s in items]

    try:
        cfg = SystemConfig.from_path_losses(path_losses, **kwargs)
    except ValidationError as e:
        raise ConfigError(f"{path}: invalid configuration: {e.errors()[0]['msg']}")

    logger.info(f"Loaded system config from {path}: {cfg.n_gateways} gateways, K={cfg.slots_per_frame}")
    return cfg


def save_predictor_params(params: PredictorParams, path: str) -> None:
    """Write weights and noise variances as key=value lines (full float precision)"""
    values = {
        "alpha1": params.weights.alpha1,
        "alpha2": params.weights.alpha2,
        "beta1": params.weights.beta1,
        "sigma_w_sq": params.sigma_w_sq,
        "sigma_v_sq": params.sigma_v_sq,
    }
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("# K-SEP weights and noise variances (joule units)\n")
        for key in PREDICTOR_KEYS:
            f.write(f"{key}={values[key]!r}\n")


def load_predictor_params(path: str) -> PredictorParams:
    """
    Read parameters written by save_predictor_params.

    Raises:
        ConfigError: Missing or unknown keys, or values out of range
    """
    pairs = _read_pairs(path)
    missing = [k for k in PREDICTOR_KEYS if k not in pairs]
    unknown = sorted(set(pairs) - set(PREDICTOR_KEYS))
    if missing or unknown:
        raise ConfigError(f"{path}: missing keys {missing}, unknown keys {unknown}")

    values = {k: _as_float(path, k, pairs[k]) for k in PREDICTOR_KEYS}
    try:
        return PredictorParams(
            weights=WeightSet(alpha1=values["alpha1"], alpha2=values["alpha2"], beta1=values["beta1"]),
            sigma_w_sq=values["sigma_w_sq"],
            sigma_v_sq=values["sigma_v_sq"],
        )
    except ValidationError as e:
        raise ConfigError(f"{path}: invalid predictor parameters: {e.errors()[0]['msg']}")
