class SymGaborError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(SymGaborError, ValueError):
    pass


class NotLagrangian(SymGaborError, ValueError):
    pass


class LinearlyDependent(SymGaborError, ValueError):
    pass


class DegeneratePair(SymGaborError, ValueError):
    pass


class SingularB(SymGaborError, ValueError):
    pass


class SingularY(SymGaborError, ValueError):
    pass


class GridMismatch(SymGaborError, ValueError):
    pass


class DomainError(SymGaborError, ValueError):
    pass


class MisalignedShift(SymGaborError, ValueError):
    pass


class BudgetExceeded(SymGaborError, ValueError):
    pass


class NotAFrame(SymGaborError, ValueError):
    pass


class NoConvergence(SymGaborError, RuntimeError):
    pass


class ScheduleError(SymGaborError, ValueError):
    pass
