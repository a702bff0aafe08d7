"""Exception types raised by the engine."""


class EngineError(Exception):
    """Base class for all engine errors."""


class MissingImageError(EngineError):
    """Input file does not exist."""


class UnsupportedImageFormatError(EngineError):
    """File extension is not one of the supported image formats."""


class CorruptImageError(EngineError):
    """File exists and has a supported extension but cannot be decoded."""


class ImageWriteError(EngineError):
    """Output path cannot be written."""


class DimensionMismatchError(EngineError):
    """Paired planes (image / mask / depth / pattern) disagree on size."""


class EmptyMaskError(EngineError):
    """Mask selects no pixels where at least one is required."""


class InstructionError(EngineError):
    """Base for instruction validation failures."""


class EmptyInstructionError(InstructionError):
    pass


class MultiSentenceInstructionError(InstructionError):
    pass


class OverlongInstructionError(InstructionError):
    pass


class SidecarFormatError(EngineError):
    """A sidecar file row is malformed or references an unknown image id."""


class ConfigError(EngineError):
    """Pipeline configuration is invalid."""
