"""Exception types shared across the package."""


class EinmaxError(Exception):
    """Base class for all package errors."""


class ConfigError(EinmaxError, ValueError):
    """Input configuration fails a structural or physical invariant."""


class ResonanceError(EinmaxError, ArithmeticError):
    """A covector sum is characteristic (|zeta|^2 = 0), so the causal inverse has no symbol."""

    def __init__(self, message: str, indices: tuple = ()):
        super().__init__(message)
        self.indices = tuple(indices)


class CharacteristicError(ResonanceError):
    """A single covector passed to the causal-inverse factor is light-like."""


class SingularSystemError(EinmaxError, ArithmeticError):
    """Exact linear system has no unique solution."""


class SearchExhausted(EinmaxError, RuntimeError):
    """Variety search hit its iteration cap without a nondegenerate point."""

    def __init__(self, message: str, best=None, best_det=None, iterations: int = 0):
        super().__init__(message)
        self.best = best
        self.best_det = best_det
        self.iterations = iterations


class CFLViolation(EinmaxError, ValueError):
    """Time step exceeds the stability limit of the leapfrog scheme."""


class NumericalAbort(EinmaxError, FloatingPointError):
    """Non-finite values or integrator breakdown."""


class GeometryError(EinmaxError, ValueError):
    """Geometric input is out of the grid or chart."""


class ChartError(GeometryError):
    """A chart or exponential map left its region of validity."""
