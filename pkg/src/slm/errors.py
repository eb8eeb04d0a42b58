"""Exception types raised by the slm package."""


class SLMError(Exception):
    """Base class for all slm-specific errors."""


class CsvError(SLMError):
    """Base class for CSV ingestion failures."""


class EmptyFileError(CsvError):
    def __init__(self, path):
        super().__init__(f"empty CSV file: {path}")
        self.path = path


class UnknownTargetColumnError(CsvError):
    def __init__(self, column, available):
        super().__init__(f"unknown target column {column!r}; available: {available}")
        self.column = column


class MalformedRowError(CsvError):
    """Row with the wrong number of columns. Rows are 1-based over data rows."""

    def __init__(self, row, expected, found):
        super().__init__(f"row {row}: expected {expected} columns, found {found}")
        self.row = row


class NonNumericCellError(CsvError):
    def __init__(self, row, column, text):
        super().__init__(f"row {row}, column {column!r}: not a number: {text!r}")
        self.row = row
        self.column = column


class BadTargetError(CsvError):
    def __init__(self, row, text, why):
        super().__init__(f"row {row}: bad target value {text!r}: {why}")
        self.row = row


class DegenerateSplitError(SLMError):
    """Train/test split would leave one side empty."""


class EnvelopeCollapseError(SLMError):
    """Every candidate coefficient range collapsed to {0}; no projection
    vector can be drawn."""


class TrainingError(SLMError):
    """Model fitting aborted (e.g. non-finite boosting gradients)."""


class SchemaMismatchError(SLMError):
    """Input data incompatible with a trained model (dimension or task)."""
