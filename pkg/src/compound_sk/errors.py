"""Exception hierarchy; the CLI maps each family to an exit code."""


class CompoundSKError(Exception):
    """Base class for all package errors."""


class DomainError(CompoundSKError, ValueError):
    """Invalid argument: malformed pmf, bad alphabet, violated precondition."""


class SpecError(CompoundSKError):
    """Malformed source-specification file (CLI exit code 2)."""


class BudgetError(CompoundSKError):
    """A computation would exceed a configured size or memory guard (exit 3)."""


class GuardError(CompoundSKError):
    """A post-hoc verification of a constructed object failed (exit 3)."""
