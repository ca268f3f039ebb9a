"""Exception types shared across the engine."""


class ConfigurationError(ValueError):
    """Invalid shapes, names, or parameter values supplied by the caller."""


class NonFiniteError(ArithmeticError):
    """A NaN or Inf was produced; the offending computation is aborted."""


class FormatError(ValueError):
    """A file does not match its expected binary layout."""


class UnsupportedImageError(FormatError):
    """The image file is valid but uses a feature the engine does not read."""


class TruncatedFileError(OSError):
    """A binary file ended before all declared payload was read."""
