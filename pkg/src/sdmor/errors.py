"""Exception types raised across the package."""


class SdmorError(Exception):
    """Base class for all errors raised by sdmor."""


class DimensionError(SdmorError, ValueError):
    pass


class InputError(SdmorError, ValueError):
    """Non-finite or otherwise unusable numeric input."""


class ValidationError(SdmorError, ValueError):
    """A system failed validation; ``violations`` lists every problem found."""

    def __init__(self, violations):
        self.violations = list(violations)
        text = "; ".join(f"{v.code}: {v.message}" for v in self.violations)
        super().__init__(text or "invalid system")


class NotHurwitzError(SdmorError):
    """The continuous-time state matrix has an eigenvalue with Re >= 0."""

    def __init__(self, eigenvalue, message=None):
        self.eigenvalue = complex(eigenvalue)
        self.abscissa = self.eigenvalue.real
        super().__init__(
            message or f"matrix is not Hurwitz: eigenvalue {self.eigenvalue:.6g} "
            f"has real part {self.abscissa:.6g} >= 0"
        )


class ZeroSpaceError(SdmorError):
    """The reachability space is zero-dimensional (all input matrices vanish)."""


class PreconditionError(SdmorError):
    """The projection basis does not contain the required reachability space."""


class BudgetError(SdmorError):
    """A combinatorial enumeration would exceed its configured cap."""


class ConditioningError(SdmorError):
    """A matrix that must be inverted is numerically singular."""


class InfeasibleRequestError(SdmorError):
    """A reduction request cannot be met (e.g. r_max below dim of R^0)."""


class ConsistencyError(SdmorError):
    """A mathematically guaranteed identity failed numerically."""


class UndefinedBFRError(SdmorError, ValueError):
    """The reference output is constant, so the fit rate denominator is zero."""
