"""Exception hierarchy shared by every module."""


class SFDError(Exception):
    """Base class for all errors raised by the package."""


class SchemaError(SFDError, KeyError):
    """A required column is missing from an input table."""

    def __init__(self, column, source=None):
        self.column = column
        where = f" in {source}" if source else ""
        super().__init__(f"missing column {column!r}{where}")

    def __str__(self):
        return self.args[0]


class ParseError(SFDError, ValueError):
    """A cell could not be parsed as a finite number."""

    def __init__(self, message, row=None):
        self.row = row
        super().__init__(message)


class IntegrityError(SFDError, ValueError):
    """Identifiers are duplicated or reference units that do not exist."""


class DomainError(SFDError, ValueError):
    """An argument is outside the domain of the operation."""


class StructureError(SFDError, ValueError):
    """Positions do not have the structure an ordering requires."""


class CollinearityError(SFDError, ValueError):
    """The design matrix is rank deficient."""

    def __init__(self, message, columns=()):
        self.columns = tuple(columns)
        super().__init__(message)


class EmptyDesignError(SFDError, ValueError):
    """Differencing left too few rows to estimate anything."""
