"""Exception hierarchy shared across the package."""


class SvtuneError(Exception):
    """Base class for all svtune errors."""


class BoundsViolationError(SvtuneError):
    """A parameter vector lies outside its declared box."""


class EvaluationError(SvtuneError):
    """System evaluation produced non-finite or mis-shaped matrices."""


class NearSingularError(SvtuneError):
    """A frequency point is too close to an eigenvalue of A.

    Carries the offending point and the nearest eigenvalue.
    """

    def __init__(self, s, eigenvalue, message=None):
        self.s = s
        self.eigenvalue = eigenvalue
        if message is None:
            message = (
                f"frequency point {s} is within the conditioning guard of "
                f"eigenvalue {eigenvalue}"
            )
        super().__init__(message)


class NumericalError(SvtuneError):
    """A numerical routine (eigensolver, SVD, SDP) failed."""


class GammaSampleError(SvtuneError):
    """A curve sample collided with a pole during a gamma evaluation."""

    def __init__(self, t, point, nearest_pole):
        self.t = t
        self.point = point
        self.nearest_pole = nearest_pole
        super().__init__(
            f"sample t={t} at {point} is near-singular: nearest pole "
            f"{nearest_pole}"
        )


class SetupError(SvtuneError):
    """A tuning run cannot start from the given configuration."""


class ShapeError(SvtuneError):
    """Vector or matrix dimensions do not match the declared model."""


class PowerFlowError(SvtuneError):
    """Newton power flow failed to converge."""

    def __init__(self, residual, iterations, message=None):
        self.residual = residual
        self.iterations = iterations
        if message is None:
            message = (
                f"power flow did not converge after {iterations} iterations "
                f"(final residual {residual:.3e})"
            )
        super().__init__(message)


class EliminationError(SvtuneError):
    """The algebraic Jacobian is singular; elimination is impossible."""


class ModelFormatError(SvtuneError):
    """A model file violates the interchange schema."""

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)
