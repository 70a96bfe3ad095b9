"""Exception types shared across the package."""


class ToepsegError(Exception):
    """Base class for all package errors."""


# --- ingestion ---------------------------------------------------------

class ParseError(ToepsegError):
    pass


class MissingCell(ToepsegError):
    pass


class IntervalOrderViolation(ToepsegError):
    def __init__(self, t: int, series: int, lower: float, upper: float):
        self.t = t
        self.series = series
        super().__init__(
            f"lower > upper at t={t}, series={series}: {lower} > {upper}"
        )


class WindowTooLarge(ToepsegError):
    pass


# --- linear algebra / structure ----------------------------------------

class DimensionMismatch(ToepsegError):
    pass


class NotPositiveDefinite(ToepsegError):
    pass


class SingularWorkingMatrix(ToepsegError):
    pass


# --- likelihood / penalty ----------------------------------------------

class EmptyCluster(ToepsegError):
    pass


class InvalidA(ToepsegError):
    pass


# --- assignment ---------------------------------------------------------

class EmptyBatch(ToepsegError):
    pass


class ModelDimensionMismatch(ToepsegError):
    pass


class TooManyPaths(ToepsegError):
    pass


# --- pipeline -----------------------------------------------------------

class DegenerateClustering(ToepsegError):
    pass


class FoldTooSmall(ToepsegError):
    pass


class SchemaMismatch(ToepsegError):
    pass


class CorruptFile(ToepsegError):
    pass


# --- imaging ------------------------------------------------------------

class WindowTooShortForTrajectory(ToepsegError):
    pass


class SideMismatch(ToepsegError):
    pass


class DegenerateDistances(UserWarning):
    """Warning: all trajectory distances are zero in some dimension."""


# --- metrics ------------------------------------------------------------

class KernelNotSPD(ToepsegError):
    pass


class ShapeMismatch(ToepsegError):
    pass


class SingularDesign(ToepsegError):
    pass


class RowMismatch(ToepsegError):
    pass
