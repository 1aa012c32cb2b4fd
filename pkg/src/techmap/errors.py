"""Exception types shared across the pipeline stages."""


class TechmapError(Exception):
    """Base class for all errors raised by this package."""


class CorpusFormatError(TechmapError):
    """Malformed or inconsistent bibliographic record."""

    def __init__(self, message, line_no=None, path=None):
        self.line_no = line_no
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line_no is not None:
            where += f":{line_no}"
        super().__init__(f"{where}: {message}" if where else message)


class ConlluFormatError(TechmapError):
    """Invalid CoNLL-U input."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}" if line_no else message)


class ExtractionError(TechmapError):
    """Head annotation or dependency structure problem."""


class GraphError(TechmapError):
    """Graph construction or slicing problem."""


class ConvergenceError(TechmapError):
    """An iterative numeric method failed to converge."""

    def __init__(self, message, iterations=None, residual=None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message)


class ConfigError(TechmapError):
    """Invalid pipeline configuration."""


class StageError(TechmapError):
    """A pipeline stage cannot run (usually missing prior-stage output)."""


class GexfValidationError(TechmapError):
    """Exported GEXF violates the GEXF 1.3 structure."""
