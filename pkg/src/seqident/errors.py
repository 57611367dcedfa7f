"""Exception hierarchy.

Errors split into two families so callers (and the CLI) can tell a bad
request from a table that cannot be processed: ``ConfigError`` covers
malformed plans, files and mismatched spaces, ``IdentificationError``
covers numerical failures such as zero denominators.
"""

from __future__ import annotations


class SeqIdentError(Exception):
    """Base class for all package errors."""


class ConfigError(SeqIdentError):
    pass


class TableFormatError(ConfigError):
    pass


class SpaceMismatch(ConfigError):
    pass


class InvalidPermutation(ConfigError):
    pass


class PlanInvalid(ConfigError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid identification plan:\n  " + "\n  ".join(self.violations))


class SignatureMismatch(ConfigError):
    pass


class IdentificationError(SeqIdentError):
    """A quantity needed by an identifying assumption is undefined."""

    def __init__(self, message: str, *, context: str | None = None):
        self.detail = message
        self.context = context
        super().__init__(message if context is None else f"{context}: {message}")

    def with_context(self, context: str) -> "IdentificationError":
        return type(self)(self.detail, context=context)


class AllZeroMass(IdentificationError):
    pass


class ZeroConditioningEvent(IdentificationError):
    pass


class MARUnidentifiable(IdentificationError):
    pass


class ICINUnidentifiable(IdentificationError):
    pass


class CCMVUndefined(IdentificationError):
    pass


class ZeroDenominator(IdentificationError):
    def __init__(self, symbol: str, *, context: str | None = None):
        self.symbol = symbol
        super().__init__(f"zero denominator {symbol}", context=context)

    def with_context(self, context: str) -> "ZeroDenominator":
        return ZeroDenominator(self.symbol, context=context)


class MechanismUnavailable(SeqIdentError):
    """A requested preset is not defined for this category space."""
