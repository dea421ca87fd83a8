"""Exception types shared across the package."""


class RumorNetError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(RumorNetError):
    """Tensor dimensions do not satisfy an operation's contract."""


class GradientError(RumorNetError):
    """Backward pass invoked on something that is not a scalar loss."""


class ConfigError(RumorNetError):
    """Invalid model or training configuration."""


class DataError(RumorNetError):
    """Corpus content failed validation."""


class FormatError(RumorNetError):
    """A binary artifact file is corrupt, truncated, or of the wrong kind."""


class TrainingError(RumorNetError):
    """Training aborted, e.g. on a non-finite loss."""
