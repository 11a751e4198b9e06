from __future__ import annotations


class LocsepError(ValueError):
    """Base class for every error raised by the toolkit."""


class ConfigurationError(LocsepError):
    pass


class EmptyInputError(LocsepError):
    pass


class UnsupportedFormatError(LocsepError):
    pass


class TruncatedFileError(LocsepError):
    pass


class SampleRateMismatchError(LocsepError):
    pass


class DegenerateGeometryError(LocsepError):
    pass


class DimensionMismatchError(LocsepError):
    pass


class MaskValueError(LocsepError):
    pass


class ConditioningError(LocsepError):
    pass


class LocalizationError(LocsepError):
    pass


class SceneError(LocsepError):
    pass


class ManifestError(LocsepError):
    pass
