"""
Validation Module - allowlists for commands, algorithms and modes.
A RunSpec is validated in full before any engine runs.
"""

import os

from solarsched.errors import InvalidInputError
from solarsched.schemas.request import RunSpec
from solarsched.utils.logger import log_validation_error

ALLOWED_COMMANDS = {"fit", "predict", "schedule", "simulate", "compare", "generate"}

# Algorithms each command accepts; the first entry is the default
COMMAND_ALGORITHMS = {
    "schedule": ("ptf", "bcd", "sgtdma"),
    "simulate": ("ptfon", "sgtdma"),
}

ALLOWED_FILL_GAPS = {"error", "zero"}
ALLOWED_HORIZONS = {"sliding", "frame"}

# Commands that read a trace
TRACE_COMMANDS = {"fit", "predict", "schedule", "simulate", "compare"}


def default_algorithm(command: str) -> str:
    return COMMAND_ALGORITHMS[command][0]


def validate_algorithm(command: str, algo: str) -> tuple[bool, list]:
    """
    Check an algorithm against the command's allowlist.

    Returns:
        Tuple of (is_valid, allowed algorithms)
    """
    allowed = list(COMMAND_ALGORITHMS.get(command, ()))
    return algo in allowed, allowed


def validate_run_spec(spec: RunSpec) -> dict:
    """
    Comprehensive validation of a RunSpec.

    Returns:
        Summary of what was validated

    Raises:
        InvalidInputError: Listing every problem found
    """
    errors = []

    if spec.command not in ALLOWED_COMMANDS:
        errors.append(f"Unknown command {spec.command!r}; allowed: {sorted(ALLOWED_COMMANDS)}")

    if spec.algo is not None:
        if spec.command not in COMMAND_ALGORITHMS:
            errors.append(f"Command {spec.command!r} takes no --algo")
        else:
            ok, allowed = validate_algorithm(spec.command, spec.algo)
            if not ok:
                errors.append(f"Invalid algorithm {spec.algo!r} for {spec.command}; allowed: {allowed}")

    if spec.fill_gaps not in ALLOWED_FILL_GAPS:
        errors.append(f"Invalid gap mode {spec.fill_gaps!r}; allowed: {sorted(ALLOWED_FILL_GAPS)}")
    if spec.horizon not in ALLOWED_HORIZONS:
        errors.append(f"Invalid horizon {spec.horizon!r}; allowed: {sorted(ALLOWED_HORIZONS)}")

    if spec.command in TRACE_COMMANDS and not spec.trace:
        errors.append(f"Command {spec.command!r} needs --trace")

    for label, path in (("trace", spec.trace), ("irradiation", spec.irradiation),
                        ("config", spec.config), ("weights", spec.weights)):
        if path is not None and not os.path.exists(path):
            errors.append(f"{label} file not found: {path}")

    if errors:
        log_validation_error("run_spec", "; ".join(errors))
        raise InvalidInputError(f"Run validation failed: {'; '.join(errors)}")

    return {
        "valid": True,
        "command": spec.command,
        "algorithm": spec.algo or (default_algorithm(spec.command) if spec.command in COMMAND_ALGORITHMS else None),
    }
