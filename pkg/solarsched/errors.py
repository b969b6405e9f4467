"""
Error hierarchy for solarsched.
Every library error is a ValueError subclass that knows the CLI exit status it maps to.
"""


class SolarschedError(ValueError):
    """Base class for all solarsched errors"""

    exit_code = 1


class InvalidInputError(SolarschedError):
    """Input outside an operation's domain (negative power, dimension mismatch, ...)"""


class UtilityUndefinedError(SolarschedError):
    """A gateway received exactly zero bits, so the log-utility is undefined"""


class FairnessUndefinedError(SolarschedError):
    """Jain index requested for an all-zero throughput vector"""


class SingularFitError(SolarschedError):
    """Regressor matrix is rank deficient"""


class InsufficientHistoryError(SolarschedError):
    """Not enough prior days for the requested predictor or scheduler"""

    exit_code = 2


class TraceParseError(SolarschedError):
    """Malformed trace row; the message names the CSV line"""

    exit_code = 3

    def __init__(self, message: str, line: int = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TraceDataError(SolarschedError):
    """Trace content violates an ordering invariant"""

    exit_code = 3


class GapError(SolarschedError):
    """A resampling window contains no samples and gap filling is off"""

    exit_code = 3

    def __init__(self, message: str, window_index: int = None):
        self.window_index = window_index
        super().__init__(message)


class ConfigError(SolarschedError):
    """Malformed configuration or weight file"""

    exit_code = 3


class InfeasibleScheduleError(SolarschedError):
    """A schedule failed its post-hoc feasibility check"""

    exit_code = 4
