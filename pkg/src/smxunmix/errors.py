"""Exception hierarchy shared across the package."""


class UnmixError(Exception):
    """Base class for all package errors."""


class ContractError(UnmixError, ValueError):
    """An operation was called with arguments violating its preconditions."""


class DataError(UnmixError):
    """Input data cannot be used (bad file, inconsistent dimensions...)."""


class DegenerateDataError(DataError):
    """Data does not have enough rank / spread for the requested operation."""


class GenerationError(UnmixError):
    """Synthetic data generation could not satisfy its constraints."""


class NumericalError(UnmixError):
    """A non-finite value showed up during optimization."""


class FormatError(DataError):
    """Base class for on-disk format problems."""


class BadMagicError(FormatError):
    pass


class VersionMismatchError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass


class LibraryParseError(FormatError):
    """CSV spectral library could not be parsed; ``lineno`` is 1-based."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
