"""Exception types shared across the package."""


class DataError(ValueError):
    """Malformed or inconsistent input data (CSV files, series, groups)."""


class NumericalError(ArithmeticError):
    """A numerical routine failed (indefinite Gram matrix, negative MMD, ...)."""
