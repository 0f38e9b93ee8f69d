"""Exception types raised across the package."""


class UsageError(ValueError):
    """Bad arguments: dimension mismatch, empty inputs, out-of-range settings."""


class NumericError(ArithmeticError):
    """A computation produced a non-finite value or lost positive-definiteness."""


class FormatError(ValueError):
    """A model file is malformed, truncated, or holds an invalid rule."""


class CsvParseError(ValueError):
    """A CSV row could not be parsed. ``lineno`` is 1-based."""

    def __init__(self, message, lineno):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ChunkError(RuntimeError):
    """A worker failed while learning one partition."""

    def __init__(self, chunk_index, cause):
        super().__init__(f"learner failed on chunk {chunk_index}: {cause!r}")
        self.chunk_index = chunk_index
        self.cause = cause
