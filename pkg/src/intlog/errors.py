"""Shared exception base class.

Every error raised by this package derives from IntlogError so callers
(and the CLI) can catch one type and map it to an exit code.
"""


class IntlogError(Exception):
    """Base class for all errors raised by this package."""
