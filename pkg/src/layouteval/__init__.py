"""Pixel-level evaluation of document image layout analysis.

Compares a multi-label prediction raster against a multi-label ground
truth raster and produces exact match, Hamming score, per-class
precision/recall/F1/Jaccard with macro and micro averages, CSV reports,
and color-coded error visualizations. Usable as a library, as the
``layout-eval`` command, and as an HTTP JSON service
(``layout-eval-server``).
"""

from .codec import (
    ClassLabel,
    ClassRegistry,
    LabelImage,
    LabelSet,
    decode_label_image,
    encode_label_image,
    validate_pair,
)
from .contingency import ClassFrequency, ContingencyTable, build_tables, class_frequencies
from .errors import (
    DimensionMismatch,
    EmptyGroundTruthPixel,
    EvaluationError,
    MisalignedClasses,
    RegistryError,
    UndecodableImage,
    UnknownBits,
)
from .metrics import (
    AverageMetrics,
    ClassMetrics,
    EvaluationReport,
    evaluate,
    exact_match,
    f1,
    hamming_score,
    jaccard,
    macro_average,
    micro_average,
    precision,
    recall,
)
from .report import format_summary, metric_dict, metric_names, write_csv
from .visualization import (
    DEFAULT_PALETTE,
    Palette,
    PixelOutcome,
    classify_pixel,
    render_error_map,
    render_overlay,
)

__version__ = "0.1.0"

__all__ = [
    "AverageMetrics",
    "ClassFrequency",
    "ClassLabel",
    "ClassMetrics",
    "ClassRegistry",
    "ContingencyTable",
    "DEFAULT_PALETTE",
    "DimensionMismatch",
    "EmptyGroundTruthPixel",
    "EvaluationError",
    "EvaluationReport",
    "LabelImage",
    "LabelSet",
    "MisalignedClasses",
    "Palette",
    "PixelOutcome",
    "RegistryError",
    "UndecodableImage",
    "UnknownBits",
    "build_tables",
    "class_frequencies",
    "classify_pixel",
    "decode_label_image",
    "encode_label_image",
    "evaluate",
    "exact_match",
    "f1",
    "format_summary",
    "hamming_score",
    "jaccard",
    "macro_average",
    "metric_dict",
    "metric_names",
    "micro_average",
    "precision",
    "recall",
    "render_error_map",
    "render_overlay",
    "validate_pair",
    "write_csv",
]
