"""Exception types shared across the package."""


class GomqError(Exception):
    """Base class for all errors raised by this package."""


class NonGuardedOntology(GomqError):
    pass


class NotFrontierGuarded(GomqError):
    pass


class DomainTooLarge(GomqError):
    pass


class InvalidDecomposition(GomqError):
    pass


class WidthExceeded(GomqError):
    pass


class InconsistentTree(GomqError):
    def __init__(self, message: str, path: tuple = ()):
        super().__init__(message)
        self.path = path


class DegreeExceeded(GomqError):
    pass


class AlphabetMismatch(GomqError):
    pass


class StateLimitExceeded(GomqError):
    pass


class BudgetExceeded(GomqError):
    pass


class SchemaClash(GomqError):
    pass


class QueryTooLarge(GomqError):
    pass


class NotStrictlyAcyclic(GomqError):
    pass


class CombinatorialBudgetExceeded(GomqError):
    pass


class ParseError(GomqError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ArityMismatch(GomqError):
    pass


class UndeclaredRelation(GomqError):
    pass
