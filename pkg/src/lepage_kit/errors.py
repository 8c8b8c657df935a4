"""Exception hierarchy shared by all lepage_kit modules."""


class LepageKitError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(LepageKitError):
    """Index or multi-index length incompatible with the chart."""


class ChartMismatchError(LepageKitError):
    """Two values from different charts were combined."""


class OrderCapError(LepageKitError):
    """A derivative would exceed the configured jet-order cap."""


class SubstitutionError(LepageKitError):
    """Invalid substitution request (cyclic binding, non-invertible image)."""


class DomainError(LepageKitError):
    """An operation was called outside its stated domain."""


class ParseError(LepageKitError):
    """Syntax or resolution error in the problem DSL.

    Carries the 1-based source position and, for syntax errors, the set of
    token kinds that would have been accepted.
    """

    def __init__(self, message, line=None, column=None, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        where = f" at {line}:{column}" if line is not None else ""
        hint = f" (expected {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message}{where}{hint}")
