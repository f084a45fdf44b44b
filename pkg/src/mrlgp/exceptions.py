"""Exception hierarchy shared across the package."""


class MrlGpError(Exception):
    """Base class for all package errors."""


class ParameterError(MrlGpError, ValueError):
    """A kernel, model or fault parameter is outside its valid range."""


class UnsupportedOperationError(MrlGpError, NotImplementedError):
    """The requested operation is not available for this kernel family."""


class ConditioningError(MrlGpError, ArithmeticError):
    """A boundary covariance block could not be inverted.

    Usually the boundary points are too close relative to the kernel
    length-scale; adding jitter or moving the boundary helps.
    """


class NumericalError(MrlGpError, ArithmeticError):
    """Cholesky factorization failed even after jitter escalation."""


class InferenceError(MrlGpError, RuntimeError):
    """Every hyperparameter sample had zero likelihood."""


class DegenerateModelError(MrlGpError, ArithmeticError):
    """Both component variances vanish, so apportionment is undefined."""
