"""Exception hierarchy shared across the package."""


class VorinvError(Exception):
    """Base class for all errors raised by this package."""


class InputError(VorinvError):
    """Invalid user-supplied data (files, parameters)."""
