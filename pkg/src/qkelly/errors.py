"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 1,
runtime invariant violations exit 2.
"""
from __future__ import annotations


class QKellyError(Exception):
    """Base class for all package-specific errors."""


class DomainError(QKellyError, ValueError):
    """An argument lies outside its mathematical domain."""


class UncertaintyViolation(QKellyError, ValueError):
    """A covariance matrix is not symmetric positive definite with det >= 1."""


class ChannelViolation(QKellyError, ValueError):
    """A (lambda, X, Y) triple does not describe a valid single-mode channel."""


class ConfigError(QKellyError, ValueError):
    """Invalid game or run configuration.

    Carries one human-readable message per violated constraint so a
    caller (or the CLI) can report all problems at once.
    """

    def __init__(self, violations):
        self.violations = [str(v) for v in violations]
        super().__init__("; ".join(self.violations))


class InvariantViolation(QKellyError, RuntimeError):
    """A computed quantity broke a bound the algebra guarantees.

    Raised instead of clamping: a breach beyond tolerance means a bug
    or an invalid input, not a rounding artefact to hide.
    """


class EnumerationSizeError(QKellyError, ValueError):
    """Exact enumeration would exceed the trajectory budget."""
