"""Exception hierarchy shared across the package."""


class SkelcapError(Exception):
    """Base class for all errors raised by this package."""


class SkeletonError(SkelcapError):
    """Violated skeleton precondition (missing body group, bad params, empty input)."""


class CorpusFormatError(SkelcapError):
    """Malformed corpus file. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SplitError(SkelcapError):
    """Split cannot satisfy its disjointness contract (e.g. too few groups)."""


class SynthError(SkelcapError):
    """Synthetic generation request outside the representable space."""


class VocabularyError(SkelcapError):
    """Token id outside the vocabulary."""


class ConfigError(SkelcapError):
    """Inconsistent model or run configuration."""


class TrainingDivergedError(SkelcapError):
    """Non-finite loss or gradient encountered during training."""

    def __init__(self, step: int, what: str = "loss"):
        super().__init__(f"training diverged at step {step}: non-finite {what}")
        self.step = step


class CheckpointError(SkelcapError):
    """Unreadable, truncated, or version-incompatible checkpoint file."""
