"""Exception types shared across the toolkit.

Every error carries a module-qualified code ("frames/dimension-mismatch")
so the CLI can report failures uniformly and map them to exit codes.
"""


class MpfScopeError(Exception):
    """Base class for all toolkit errors."""

    code = "mpfscope/error"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code


class InputError(MpfScopeError):
    """Bad or unreadable input data (exit code 2 in the CLI)."""

    code = "mpfscope/input"


class ConfigError(MpfScopeError):
    """Invalid configuration or parameter combination (exit code 3)."""

    code = "mpfscope/config"
