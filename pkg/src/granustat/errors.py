"""Exception hierarchy shared by all granustat modules."""


class GranustatError(Exception):
    """Base class for every error raised by this package."""


class OverlapError(GranustatError):
    pass


class DegenerateError(GranustatError):
    pass


class GroupCoverageError(GranustatError):
    pass


class GroupContactError(GranustatError):
    pass


class SizeError(GranustatError, ValueError):
    pass


class EmbeddingError(GranustatError):
    pass


class ExplosionError(GranustatError):
    pass


class OrderingError(GranustatError):
    pass


class GenericityError(GranustatError):
    pass


class DimensionError(GranustatError, ValueError):
    pass


class RankError(GranustatError):
    pass


class BoundaryViolationError(GranustatError):
    """Prescribed boundary data already violates a boundary-boundary contact."""


class StartInfeasibleError(GranustatError):
    pass


class MaxIterError(GranustatError):
    def __init__(self, message, z=None, residuals=None):
        super().__init__(message)
        self.z = z
        self.residuals = residuals


class CapError(GranustatError):
    pass


class EmptyNeighborhoodError(GranustatError):
    pass


class ParseError(GranustatError):
    pass
