"""Exception and warning types shared across the package."""


class RevivalLabError(Exception):
    """Base class for all package-specific errors."""


class TruncationTooSmall(RevivalLabError):
    """Fock-space truncation cannot hold the requested state without leakage."""


class StepSizeUnderflow(RevivalLabError):
    """Adaptive integrator step size collapsed below machine resolution."""


class NegativeAmplitude(RevivalLabError):
    """Injection duration below the calibration offset."""


class DegenerateHomography(RevivalLabError):
    """Detection homography denominator vanishes on the unit interval."""


class EmptyTrace(RevivalLabError):
    """Signal trace has too few samples for the requested operation."""


class NonUniformGrid(RevivalLabError):
    """Operation requires a uniformly sampled trace."""


class FitDiverged(RevivalLabError):
    """Nonlinear least-squares fit failed to converge."""


class InsufficientFringes(RevivalLabError):
    """Fringe curve does not contain enough oscillation periods to fit."""


class NoConvergence(RevivalLabError):
    """No optimizer start produced a usable solution."""


class OverlappingPeaks(UserWarning):
    """Adjacent spectral peaks are closer than the fitted width."""
