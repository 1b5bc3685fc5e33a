"""Exception hierarchy shared by all modules."""


class PallocError(Exception):
    """Base class for errors raised by this package."""


class InvalidParameter(PallocError, ValueError):
    pass


class NonErgodicError(PallocError, ValueError):
    """The requested stationary quantity does not exist for these parameters."""


class ConvergenceFailure(PallocError, ArithmeticError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class UndefinedMeasurement(PallocError, ValueError):
    pass


class ResourceLimitError(PallocError, RuntimeError):
    pass


class InternalError(PallocError, RuntimeError):
    pass
