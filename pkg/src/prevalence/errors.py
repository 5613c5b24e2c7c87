"""Exception types shared across the package.

Validation problems (bad arguments, violated invariants) raise plain
``ValueError``.  The exceptions below mark failures that can only be detected
*during* a computation, so callers can map them to dedicated exit codes or
HTTP statuses.
"""


class ComputationError(Exception):
    """Base class for runtime failures of a posterior computation."""


class VanishingMassError(ComputationError):
    """Every density value underflowed to zero; no usable likelihood mass."""


class RejectionBudgetError(ComputationError):
    """A sample exceeded the rejection budget while enforcing u < v.

    Signals calibration posteriors whose supports are essentially disjoint in
    the wrong order (false-positive rate above sensitivity).
    """


class SupportOverflowError(ComputationError):
    """Reweighting would push a non-negligible amount of mass above 1."""


class DegenerateTestError(ComputationError):
    """Estimated sensitivity does not exceed the estimated false-positive rate."""
