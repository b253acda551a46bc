"""Exception types shared across the package."""


class InvalidRegimeError(ValueError):
    """Parameters fall outside the regime where the bound construction is valid.

    Raised for windows violating ``nu_f * R < 1`` or
    ``nu_f <= -1 / (2 ln(1 - R))``, and for degenerate windows.
    """


class InfeasibleError(ArithmeticError):
    """A vector handed to ``g`` has a negative entry."""
