"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid configuration, specification, or input data."""


class DumpFormatError(ValidationError):
    """Malformed distribution-dump file.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedDetectorError(RuntimeError):
    """Detector cannot run against the given model (e.g. a replay-only
    model asked to regenerate suffixes). Batch scorers record this per
    detector instead of aborting."""
