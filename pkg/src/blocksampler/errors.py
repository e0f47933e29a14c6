"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid argument, file or configuration value."""


class UnsupportedError(InputError):
    """Request falls outside the supported regime (e.g. non-square line dictionaries)."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to produce a usable result."""
