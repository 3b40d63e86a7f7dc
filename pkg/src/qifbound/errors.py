"""Exception hierarchy shared by every qifbound module."""


class QifError(Exception):
    """Base class for all errors raised by qifbound."""


class ParseError(QifError):
    """Malformed program or formula text."""

    def __init__(self, message, line=None, col=None):
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class UndeclaredVariableError(ParseError):
    pass


class DuplicateDeclarationError(ParseError):
    pass


class MissingVariableError(QifError, KeyError):
    """A valuation does not cover a variable that is being evaluated."""

    def __str__(self):
        return Exception.__str__(self)


class CapExceededError(QifError):
    """Exhaustive enumeration would exceed the configured bit budget."""

    def __init__(self, bits, cap, what="input space"):
        self.bits = bits
        self.cap = cap
        super().__init__(
            f"{what} has {bits} bits, exceeding the enumeration cap of {cap} bits"
        )


class DistributionError(QifError, ValueError):
    pass


class SupportError(DistributionError):
    """Relative entropy or a belief would divide by a zero weight."""


class NotApplicableError(QifError):
    """The requested counterexample does not exist for this input."""


class InconsistentTracesError(QifError):
    """A trace set maps one input to two different outputs."""


class GadgetError(QifError):
    pass
