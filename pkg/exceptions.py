"""Error types shared by every narx-moss module."""


class NarxMossError(Exception):
    """Base class for all narx-moss errors"""


class ArgumentError(NarxMossError, ValueError):
    """Invalid bounds, mismatched lengths or a violated precondition"""


class DegenerateDataError(NarxMossError, ValueError):
    """Data that makes a quantity undefined, e.g. a constant reference output"""


class DataParseError(NarxMossError, ValueError):
    """Malformed input file; carries the 1-based line number of the bad row"""

    def __init__(self, message: str, line: int = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IntegrationError(NarxMossError, ArithmeticError):
    """Continuous-time integration produced a non-finite state"""


class ConfigError(NarxMossError):
    """Configuration failed validation; message lists offending field paths"""

    def __init__(self, message: str, fields: list = None):
        self.fields = list(fields or [])
        super().__init__(message)
