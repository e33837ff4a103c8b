"""Exception types shared across the package."""


class StepturnError(Exception):
    """Base class for package-specific errors."""


class InsufficientPathError(StepturnError, ValueError):
    """A latent path is too short to cover the requested observation times.

    ``first_uncovered_j`` is the smallest observation index j whose time
    j*dt lies beyond the end of the path.
    """

    def __init__(self, first_uncovered_j, total_time, needed_time):
        self.first_uncovered_j = int(first_uncovered_j)
        self.total_time = float(total_time)
        self.needed_time = float(needed_time)
        super().__init__(
            f"insufficient path: observation j={self.first_uncovered_j} at time "
            f"{self.needed_time:g} exceeds path duration {self.total_time:g}"
        )


class TrackTooShortError(StepturnError, ValueError):
    """Too few positions (or turning angles) to compute the requested quantity."""


class DegenerateTrackError(StepturnError, ValueError):
    """All observed steps have zero length; summaries are undefined."""


class SingularRegressionError(StepturnError, ValueError):
    """The local-linear design matrix is rank deficient.

    ``columns`` names the offending design columns.
    """

    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(
            "singular regression design; collinear columns: " + ", ".join(self.columns)
        )


class TrainingDivergedError(StepturnError, RuntimeError):
    """Network training produced a non-finite loss at ``iteration``."""

    def __init__(self, iteration):
        self.iteration = int(iteration)
        super().__init__(f"training diverged: non-finite loss at iteration {self.iteration}")


class QuadratureError(StepturnError, RuntimeError):
    """Numerical integration failed to reach the requested accuracy."""

    def __init__(self, achieved, requested):
        self.achieved = float(achieved)
        self.requested = float(requested)
        super().__init__(
            f"quadrature did not converge: achieved error {self.achieved:g} "
            f"exceeds requested {self.requested:g}"
        )
