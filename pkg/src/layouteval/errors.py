"""Exception types shared across the package."""


class EvaluationError(Exception):
    """Base class for every error this package raises on purpose."""


class RegistryError(EvaluationError):
    """The class registry (or its configuration file) is invalid."""


class UndecodableImage(EvaluationError):
    """The input is not a decodable lossless raster image."""


class UnknownBits(EvaluationError):
    """A pixel carries a set bit that maps to no class and is not ignored."""


class EmptyGroundTruthPixel(EvaluationError):
    """A ground-truth pixel decoded to an empty label set."""


class DimensionMismatch(EvaluationError):
    """Two images that must share dimensions do not."""


class MisalignedClasses(EvaluationError):
    """Per-class sequences that must line up have different lengths."""
