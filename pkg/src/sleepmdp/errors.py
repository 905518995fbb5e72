"""Exception types shared across the package."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Violation:
    """One invariant violation found while validating user input.

    `code` is a stable machine-readable tag (NegativeRate, EmptyPhaseSet,
    BadDiscount, BadBuffer, ...); `field` names the offending entry.
    """

    code: str
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}({self.field}): {self.message}"


class ScenarioError(ValueError):
    """Model/parameter validation failed.  Carries every violation found,
    not just the first."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class SlotTooLarge(ValueError):
    """An explicit slot length breaks the one-event-per-slot bound (some
    self-loop probability would go negative)."""

    def __init__(self, message: str, max_slot: float):
        super().__init__(message)
        self.max_slot = max_slot


class ReducibleChain(ValueError):
    """The phase chain is not irreducible, so its stationary distribution
    is not unique."""


class InvalidSlot(ValueError):
    """A transition probability left [0, 1].  Defensive: impossible after
    slot validation."""


class NotMonotone(ValueError):
    """Queue thresholds were requested for a policy that is not monotone
    in the queue length; they would be meaningless."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class BadParameter(ValueError):
    """A policy or simulation parameter is out of range."""


class ConfigError(ValueError):
    """A scenario file failed to parse.  Carries every problem found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
