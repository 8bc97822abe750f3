"""
Errors
Exception hierarchy shared by the set computations, the scheduler,
the simulator and the command-line front end.
"""

from typing import Optional, Sequence


class InvSchedError(Exception):
    """Base class for every error raised by this package"""


class DimensionMismatch(InvSchedError, ValueError):
    """Operands have incompatible shapes"""


class NumericalFailure(InvSchedError, ArithmeticError):
    """The LP kernel gave up (iteration cap or degenerate pivots)"""


class EmptySet(InvSchedError):
    """An operation that needs a nonempty polytope received an empty one"""


class EmptyInvariant(InvSchedError):
    """The invariant-set recursion emptied: no safe operating regime exists"""


class InvalidInvariant(InvSchedError):
    """The set handed to safe_time is not one-step robust control invariant"""


class Infeasible(InvSchedError):
    """No admissible input sequence certifies the requested horizon"""


class MalformedSequence(InvSchedError, ValueError):
    """Transmission instants are not strictly increasing nonnegative integers"""


class ConfigError(InvSchedError):
    """Bad run configuration or unreadable referenced file"""


class SafetyViolation(InvSchedError):
    """A simulated state left the invariant set"""

    def __init__(self, t: int, state: Sequence[float], message: Optional[str] = None):
        self.t = t
        self.state = [float(v) for v in state]
        if message is None:
            message = f"state left the invariant set at t={t}: {self.state}"
        super().__init__(message)
