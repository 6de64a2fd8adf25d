"""Exception types shared across the package.

The CLI maps ConfigError to exit code 2 and everything else raised by a
run to exit code 3.
"""


class ConfigError(ValueError):
    """Invalid configuration: bad key, bad type, or violated constraint."""


class ActionError(ValueError):
    """Out-of-range channel index; signals an agent or plumbing bug."""


class ShapeError(ValueError):
    """Dimension mismatch between layers, inputs, or gradient carriers."""


class NumericError(ArithmeticError):
    """Non-finite value encountered in parameters or gradients."""


class CheckpointError(ValueError):
    """Corrupt, truncated, or version-mismatched checkpoint file."""
