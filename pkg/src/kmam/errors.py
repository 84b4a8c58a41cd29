"""Exceptions raised by the numerical engines."""


class PoleError(ArithmeticError):
    """A gamma argument or hypergeometric parameter sits on a pole.

    Raised when the argument lies within the pole guard of a nonpositive
    integer. The series engines catch it and perturb the shape parameter.
    """

    def __init__(self, value, where=""):
        self.value = value
        self.where = where
        msg = f"argument {value!r} is within the pole guard of a nonpositive integer"
        if where:
            msg += f" ({where})"
        super().__init__(msg)


class NonConvergence(ArithmeticError):
    """A series did not reach its tolerance within the allowed number of terms."""

    def __init__(self, message, terms_used=0, truncation_estimate=float("nan")):
        self.terms_used = terms_used
        self.truncation_estimate = truncation_estimate
        super().__init__(message)


class QuadratureError(ArithmeticError):
    """The quadrature integrand produced non-finite values."""


class MonotonicityError(ValueError):
    """A CDF evaluator decreased between consecutive sorted abscissae."""

    def __init__(self, location, drop):
        self.location = location
        self.drop = drop
        super().__init__(f"CDF decreases by {-drop:.3g} after x = {location:.6g}")
