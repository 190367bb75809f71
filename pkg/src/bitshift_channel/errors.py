"""Exception types shared across the package."""


class BitshiftError(Exception):
    """Base class for all computational errors raised by this package."""


class NonStochastic(BitshiftError):
    """A transition matrix row does not sum to one."""


class Reducible(BitshiftError):
    """The chain has more than one recurrent class; an ergodic chain is required."""


class BadParams(BitshiftError):
    """Run-length parameters violate d >= 2 or k > d."""


class BadProbabilities(BitshiftError):
    """A probability vector is negative or cannot be normalized."""


class DomainError(BitshiftError):
    """A jitter parameter lies outside [0, 1/2]."""


class LetterOutOfRange(BitshiftError):
    """A word contains a letter outside the output alphabet."""


class NotALeaf(BitshiftError):
    """The word requested for refinement is not a current partition leaf."""


class EmptyPartition(BitshiftError):
    """No leaf is available for selection."""


class ConvergenceFailure(BitshiftError):
    """Power iteration did not reach the requested tolerance; carries the iterate."""

    def __init__(self, message, iterate=None):
        super().__init__(message)
        self.iterate = iterate


class ResourceLimit(BitshiftError):
    """An enumeration exceeded its configured resource budget."""


class DegenerateRenewal(BitshiftError):
    """The renewal letter cannot occur (eps = 0), so the induced-map method degenerates."""


class UsageError(Exception):
    """Command line usage error (exit code 2)."""
