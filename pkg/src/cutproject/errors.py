"""Exception hierarchy.

Every failure mode raised by the library derives from :class:`CutProjectError`
so that callers (and the CLI, which maps each family to a distinct exit code)
can catch them uniformly.
"""


class CutProjectError(Exception):
    """Base class for all library errors."""


class SingularShift(CutProjectError):
    """The window phase places a probed lattice point on the window boundary."""


class DegenerateInternalSpace(CutProjectError):
    """Physical and internal space fail to be complementary (I - M L singular)."""


class TooManyComponents(CutProjectError):
    """Grid component count exceeds the configured budget."""


class SingularPoint(CutProjectError):
    """A window point lies on a grid cut within tolerance."""


class BadComponent(CutProjectError):
    """Component index out of range for the grid."""


class UnboundedShape(CutProjectError):
    """Patch shape fails the boundedness / origin-neighbourhood check."""


class EmptyRegion(CutProjectError):
    """A region that must contain something is empty (internal inconsistency)."""


class ResonantFrequency(CutProjectError):
    """A frequency vector is orthogonal to the lattice directions mod 1."""


class Overflow(CutProjectError):
    """An integer quantity exceeds the supported range."""


class BudgetExceeded(CutProjectError):
    """A search or enumeration exceeded its configured budget."""


class NoRecurrence(CutProjectError):
    """No repeated patch found within the scan window."""


class UnboundedRegion(CutProjectError):
    """Search region is not bounded."""
