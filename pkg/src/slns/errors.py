"""Exception types shared across the package."""


class SLNSError(Exception):
    """Base class for solver errors. ``exit_code`` is used by the CLI."""

    exit_code = 1


class ConfigError(SLNSError):
    """Invalid or unreadable configuration."""

    exit_code = 1


class CFLViolation(SLNSError):
    """Time step too large for the current velocity field."""

    exit_code = 2


class NonInvertible(SLNSError):
    """Newton inversion of a flow map failed to converge.

    Usually means the step is too large or the grid too coarse for the
    displacement being inverted.
    """

    exit_code = 3
