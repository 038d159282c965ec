"""Exception types shared across the package."""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(PipelineError):
    """An image has the wrong shape for the requested operation."""


class DomainError(PipelineError):
    """A numeric argument is outside the operation's valid domain."""


class ConfigError(PipelineError):
    """A configuration object or file is invalid."""


class FormatError(PipelineError):
    """A file does not conform to the expected on-disk format."""
