"""
Exception hierarchy shared by the library and the command line.

Every exception carries the exit code the CLI maps it to, so ``main.py``
never has to know which module raised what.
"""

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_OUT_OF_SCOPE = 2
EXIT_USAGE = 64


class DiscriminationError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code = EXIT_USAGE
    reason = "error"

    def to_payload(self):
        return {"error": str(self), "reason": self.reason}


class ValidationError(DiscriminationError, ValueError):
    """Bad inputs: probabilities out of range, non-PSD or incomplete POVMs, malformed files."""

    reason = "invalid-input"


class ConfigError(DiscriminationError, ValueError):
    """Simulation or run configuration that cannot be honoured (e.g. tau too coarse)."""

    reason = "invalid-config"


class UnsupportedObjectiveError(DiscriminationError):
    """The objective is neither convex- nor concave-admissible relative to b."""

    exit_code = EXIT_OUT_OF_SCOPE
    reason = "neither"


class OutOfScopeError(DiscriminationError):
    """No optimality claim exists for these inputs (very skewed prior, insufficient energy)."""

    exit_code = EXIT_OUT_OF_SCOPE

    def __init__(self, message, reason):
        super().__init__(message)
        self.reason = reason


class SearchError(DiscriminationError):
    """The brute-force search found no feasible POVM at the requested resolution."""

    exit_code = EXIT_VIOLATION
    reason = "empty-search"


class ImpossibleEventError(DiscriminationError):
    """A photon was reported on a step whose total rate is zero."""

    reason = "impossible-event"


class NumericalRangeError(DiscriminationError, ArithmeticError):
    """A closed form would overflow double precision."""

    reason = "overflow"
