"""Exception types shared across the toolkit."""

from __future__ import annotations

__all__ = ["SynthesisError", "NumericalError", "DivergenceError", "ConfigError"]


class SynthesisError(RuntimeError):
    """Gain synthesis failed: the feasibility conditions cannot be met."""


class NumericalError(RuntimeError):
    """A numerical routine failed to reach its required tolerance."""


class DivergenceError(RuntimeError):
    """A simulated trajectory left the finite range.

    ``time`` is the integration time at which the first non-finite state
    was detected.
    """

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class ConfigError(ValueError):
    """A scenario configuration is malformed or inconsistent."""
