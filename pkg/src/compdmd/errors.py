"""Exception and warning classes shared across the package."""


class InputError(ValueError):
    """Arguments violate a documented precondition."""


class NumericError(ArithmeticError):
    """An algorithm failed to converge or produced non-finite values."""


class RankDeficiencyWarning(UserWarning):
    """A least-squares problem was solved in the minimum-norm sense."""


class BranchWarning(UserWarning):
    """An eigenvalue sits on the branch cut of the principal logarithm."""
