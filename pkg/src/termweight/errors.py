"""Exception hierarchy shared across the package.

The CLI maps any EngineError to exit code 1 with a one-line diagnostic;
everything else is a bug and propagates.
"""


class EngineError(Exception):
    """Base class for expected, user-facing failures."""


class ConfigError(EngineError):
    """Invalid configuration value or unknown config key."""


class FormatError(EngineError):
    """Malformed input file. Message carries path and line number."""

    def __init__(self, path: str, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


class IndexFormatError(EngineError):
    """Persisted index is corrupt, truncated, or of an unknown version."""


class TrainingDivergedError(EngineError):
    """Training loss became non-finite."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged: loss became non-finite at epoch {epoch}")
        self.epoch = epoch


class UnsatisfiableQueryError(EngineError):
    """Every query term was dropped; nothing left to search."""
