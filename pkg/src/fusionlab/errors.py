"""Exception hierarchy shared by every fusionlab module."""


class FusionLabError(Exception):
    """Base class; the CLI maps every subclass to exit status 2."""


class ParseError(FusionLabError):
    def __init__(self, message, position=None, text=None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class UndeclaredSymbolError(ParseError):
    pass


class SortError(FusionLabError):
    pass


class LanguageError(FusionLabError):
    pass


class StructureError(FusionLabError):
    pass


class BudgetExceeded(FusionLabError):
    pass


class PreconditionError(FusionLabError):
    pass


class ClassViolation(FusionLabError):
    """A structure left its class; carries the violated axiom when known."""

    def __init__(self, message, axiom=None, assignment=None):
        self.axiom = axiom
        self.assignment = assignment
        super().__init__(message)


class TypeClashError(FusionLabError):
    """Two member types disagree on a literal of the shared language."""

    def __init__(self, message, literal, members):
        self.literal = literal
        self.members = members
        super().__init__(message)


class ClosureDefect(FusionLabError):
    """A registered closure operator broke one of its laws while running."""
