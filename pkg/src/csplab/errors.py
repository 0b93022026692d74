"""Exception hierarchy shared by all csplab modules."""


class CsplabError(Exception):
    pass


class UnknownOperation(CsplabError, KeyError):
    pass


class ArityMismatch(CsplabError, ValueError):
    pass


class ElementOutOfRange(CsplabError, ValueError):
    pass


class NotIdempotent(CsplabError, ValueError):
    pass


class SignatureMismatch(CsplabError, ValueError):
    pass


class BudgetExceeded(CsplabError, RuntimeError):
    pass


class NotACongruence(CsplabError, ValueError):
    pass


class NotClosed(CsplabError, ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotFound(CsplabError, LookupError):
    pass


class NotAligned(CsplabError, ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class InconsistentRetraction(CsplabError, RuntimeError):
    pass


class RecursionBudgetExceeded(CsplabError, RuntimeError):
    pass


class UnsupportedMode(CsplabError, ValueError):
    pass


class InternalInconsistency(CsplabError, RuntimeError):
    pass
