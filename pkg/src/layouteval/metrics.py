"""The metric suite: exact match, Hamming score, P/R/F1/Jaccard, averages.

Exact match and the Hamming score are computed over whole label sets;
precision, recall, F1 and the Jaccard index are computed per class from
its contingency table and then combined two ways: macro-averaging (plain
mean, every class weighs the same) and micro-averaging (classes weighted
by their ground-truth frequency).

Plain pixel accuracy is deliberately not part of the suite: with a large
pixel count and small classes, tn dominates and even a classifier that
rejects everything scores near 1. The Jaccard index is the strictest
member of the suite and the best single number if one is needed.

Degenerate denominators follow one convention throughout: a ratio whose
denominator is zero is 1.0 if tp == fp == fn == 0 (nothing to find and
nothing claimed) and 0.0 otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .codec import ClassLabel, ClassRegistry, LabelImage, validate_pair
from .contingency import ClassFrequency, ContingencyTable, build_tables, class_frequencies
from .errors import MisalignedClasses, UnknownBits


@dataclass(frozen=True)
class ClassMetrics:
    label: ClassLabel
    precision: float
    recall: float
    f1: float
    jaccard: float


@dataclass(frozen=True)
class AverageMetrics:
    precision: float
    recall: float
    f1: float
    jaccard: float


@dataclass(frozen=True)
class EvaluationReport:
    """Complete result of evaluating one (ground truth, prediction) pair.

    Carries 4*|C| + 10 scalar metric values: exact match, Hamming score,
    and per-class plus macro plus micro values of the four class-wise
    metrics. Frequencies and the pixel count ride along for reporting.
    """

    exact_match: float
    hamming_score: float
    per_class: tuple[ClassMetrics, ...]
    macro: AverageMetrics
    micro: AverageMetrics
    frequencies: tuple[ClassFrequency, ...]
    pixel_count: int
    class_names: tuple[str, ...]


def exact_match(gt: LabelImage, pred: LabelImage) -> float:
    """Fraction of pixels whose predicted label set equals the truth exactly."""
    validate_pair(gt, pred)
    return int(np.count_nonzero(gt.masks == pred.masks)) / gt.pixel_count


def hamming_score(gt: LabelImage, pred: LabelImage, registry: ClassRegistry) -> float:
    """1 minus the fraction of wrong label bits over pixel_count * |C|.

    A relaxed exact match: partially correct label sets earn partial
    credit, one unit per correctly predicted class bit.
    """
    validate_pair(gt, pred)
    wrong_bits = int(np.bitwise_count(gt.masks ^ pred.masks).sum(dtype=np.int64))
    return 1.0 - wrong_bits / (gt.pixel_count * len(registry))


def _ratio(numerator: int, denominator: int, table: ContingencyTable) -> float:
    if denominator == 0:
        return 1.0 if table.tp == table.fp == table.fn == 0 else 0.0
    return numerator / denominator


def precision(table: ContingencyTable) -> float:
    """Of the pixels predicted to carry this class, the fraction that do."""
    return _ratio(table.tp, table.tp + table.fp, table)


def recall(table: ContingencyTable) -> float:
    """Of the pixels that carry this class, the fraction predicted to."""
    return _ratio(table.tp, table.tp + table.fn, table)


def f1(table: ContingencyTable) -> float:
    """Harmonic mean of precision and recall: 2tp / (2tp + fp + fn)."""
    return _ratio(2 * table.tp, 2 * table.tp + table.fp + table.fn, table)


def jaccard(table: ContingencyTable) -> float:
    """Intersection over union: tp / (tp + fp + fn).

    Like F1 but without double-weighting true positives, which makes it
    the most mistake-sensitive metric in the suite.
    """
    return _ratio(table.tp, table.tp + table.fp + table.fn, table)


def macro_average(values: Sequence[float]) -> float:
    """Plain mean over classes: equal weight regardless of class size."""
    if not values:
        raise MisalignedClasses("macro average over zero classes")
    return sum(values) / len(values)


def micro_average(values: Sequence[float], frequencies: Sequence[ClassFrequency]) -> float:
    """Frequency-weighted mean over classes, aligned on class order.

    Weights by the exact label counts and divides once at the end, so
    uniform per-class values average to themselves exactly.
    """
    if len(values) != len(frequencies):
        raise MisalignedClasses(
            f"{len(values)} class values but {len(frequencies)} frequencies"
        )
    totals = {freq.total_labels for freq in frequencies}
    if len(totals) != 1:
        raise MisalignedClasses("frequencies do not come from a single ground truth")
    weighted = sum(value * freq.label_count for value, freq in zip(values, frequencies))
    return weighted / totals.pop()


def _check_masks_known(image: LabelImage, registry: ClassRegistry, what: str) -> None:
    limit = np.uint32(1 << len(registry))
    if bool((image.masks >= limit).any()):
        raise UnknownBits(f"{what} contains class indices outside the registry")


def evaluate(gt: LabelImage, pred: LabelImage, registry: ClassRegistry) -> EvaluationReport:
    """Compute the full metric suite for one image pair. Deterministic."""
    validate_pair(gt, pred)
    _check_masks_known(gt, registry, "ground truth")
    _check_masks_known(pred, registry, "prediction")

    tables = build_tables(gt, pred, registry)
    frequencies = tuple(class_frequencies(gt, registry))
    per_class = tuple(
        ClassMetrics(
            label=table.label,
            precision=precision(table),
            recall=recall(table),
            f1=f1(table),
            jaccard=jaccard(table),
        )
        for table in tables
    )

    def averaged(metric: str) -> tuple[float, float]:
        values = [getattr(cm, metric) for cm in per_class]
        return macro_average(values), micro_average(values, frequencies)

    macro_p, micro_p = averaged("precision")
    macro_r, micro_r = averaged("recall")
    macro_f, micro_f = averaged("f1")
    macro_j, micro_j = averaged("jaccard")

    return EvaluationReport(
        exact_match=exact_match(gt, pred),
        hamming_score=hamming_score(gt, pred, registry),
        per_class=per_class,
        macro=AverageMetrics(macro_p, macro_r, macro_f, macro_j),
        micro=AverageMetrics(micro_p, micro_r, micro_f, micro_j),
        frequencies=frequencies,
        pixel_count=gt.pixel_count,
        class_names=registry.names,
    )
