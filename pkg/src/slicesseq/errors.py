"""Exception types shared across the engine.

Every failure mode that callers are expected to catch has its own class;
anything else is a plain bug and raises built-in exceptions.
"""


class SliceSeqError(Exception):
    """Base class for all engine errors."""


class CompositionNonzero(SliceSeqError):
    """d_out o d_in != 0 where a complex was expected (wrong differential)."""


class WindowTooSmall(SliceSeqError):
    """A Hopf-algebroid structure identity cannot be verified in the window."""


class OutOfWindow(SliceSeqError):
    """A bidegree outside the computed truncation window was requested."""


class MissingPrime(SliceSeqError):
    """A prime that could contribute to an integral Ext group has no window."""


class InsufficientProfileData(SliceSeqError):
    """The field profile lacks integral cohomology data needed here."""

    def __init__(self, message, datum=None):
        super().__init__(message)
        self.datum = datum


class ExactnessFailure(SliceSeqError):
    """A coefficient tower failed exactness: the profile is inconsistent."""


class UnknownDifferential(SliceSeqError):
    """A d1 entry is not determined by the known formulas (never silently 0)."""


class NotCertified(SliceSeqError):
    """E-infinity was requested for a column outside the certified range."""


class Unstabilized(SliceSeqError):
    """An alpha_1 tower still fluctuates at the top of the window."""
