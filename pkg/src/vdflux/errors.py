"""Exception hierarchy shared across the toolkit.

Validation errors (bad config, malformed files, mismatched grids) map to CLI
exit code 2; numerical failures (non-convergence, invariant breaches on live
data) map to exit code 3.
"""


class VdfluxError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(VdfluxError):
    """Bad input that was detectable before any numerics ran."""


class GridMismatchError(ValidationError):
    """Fields on different grids were combined."""


class ConfigError(ValidationError):
    """Malformed or inconsistent run configuration."""


class SnapshotFormatError(ValidationError):
    """Snapshot file failed magic/version/shape checks."""


class NumericalError(VdfluxError):
    """A computation failed on valid input (non-convergence, invariant breach)."""


class InvalidStateError(NumericalError):
    """A solution state violates its invariants (density bounds, divergence)."""


class NonPositiveCoarseDensity(NumericalError):
    """Low-passed density is not positive at the requested cut.

    Signals that the cut index is too small for the density contrast; the
    coarse-grained velocity is undefined there.
    """


class CFLViolation(NumericalError):
    """Advective CFL bound violated for the configured time step."""


class PressureIterationError(NumericalError):
    """Variable-coefficient pressure iteration failed to contract."""


class MissingPressureWarning(UserWarning):
    """Flux requested on a state without pressure; pressure term omitted."""


class GibbsOvershootWarning(UserWarning):
    """Advected density left its initial bounds by more than 1e-8."""
