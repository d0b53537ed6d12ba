"""Exception types shared across the package."""


class GroverSimError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(GroverSimError):
    """Invalid input: bad problem geometry, malformed file, bad argument."""


class NormalizationError(ValidationError):
    """State vector norm is outside the accepted tolerance."""


class ComplexRatioError(GroverSimError):
    """The marked/unmarked average ratio is complex, so the single-phase
    sinusoidal form and the closed-form measurement-time formula do not
    apply.  Callers should fall back to the numeric scan planner."""


class ScalarOnlyError(GroverSimError):
    """Operation needs per-state deviation vectors, but the solution was
    built from summary statistics only."""


class InvariantError(GroverSimError):
    """An internal invariant was violated (norm drift, probability out of
    range, engine disagreement)."""
