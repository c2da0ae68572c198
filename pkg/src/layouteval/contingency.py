"""Per-class contingency tables and class frequencies.

Multi-label evaluation cannot use a single confusion matrix (it would
need one row and column per label combination), so each class gets its
own 2x2 table of pixel counts. Every pixel lands in exactly one cell per
class: present in both images (tp), in neither (tn), only in the
prediction (fp), or only in the ground truth (fn). The tables and the
ground-truth class frequencies are the substrate for all metrics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import ClassLabel, ClassRegistry, LabelImage, validate_pair
from .errors import EmptyGroundTruthPixel


@dataclass(frozen=True)
class ContingencyTable:
    """Pixel counts for one class. Counts are exact Python integers."""

    label: ClassLabel
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self) -> None:
        for cell in ("tp", "tn", "fp", "fn"):
            if getattr(self, cell) < 0:
                raise ValueError(f"{cell} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def support(self) -> int:
        """Number of ground-truth pixels carrying this class."""
        return self.tp + self.fn


@dataclass(frozen=True)
class ClassFrequency:
    """Share of all ground-truth labels that belong to one class.

    Stored as an exact count/total pair so weighted averages can be
    computed with a single final division.
    """

    label: ClassLabel
    label_count: int
    total_labels: int

    def __post_init__(self) -> None:
        if self.total_labels < 1:
            raise ValueError("total_labels must be positive")
        if not 0 <= self.label_count <= self.total_labels:
            raise ValueError("label_count must be within 0..total_labels")

    @property
    def value(self) -> float:
        return self.label_count / self.total_labels


def build_tables(
    gt: LabelImage, pred: LabelImage, registry: ClassRegistry
) -> list[ContingencyTable]:
    """One contingency table per registry class, in registry order.

    Classes absent from both images still get a table (tp=fp=fn=0,
    tn=n) so the report shape never depends on the image content.
    """
    validate_pair(gt, pred)
    n = gt.pixel_count
    tables = []
    for label in registry:
        bit = np.uint32(1 << label.index)
        in_gt = (gt.masks & bit) != 0
        in_pred = (pred.masks & bit) != 0
        tp = int(np.count_nonzero(in_gt & in_pred))
        fp = int(np.count_nonzero(in_pred & ~in_gt))
        fn = int(np.count_nonzero(in_gt & ~in_pred))
        tables.append(ContingencyTable(label=label, tp=tp, tn=n - tp - fp - fn, fp=fp, fn=fn))
    return tables


def class_frequencies(gt: LabelImage, registry: ClassRegistry) -> list[ClassFrequency]:
    """Frequency of each class among all ground-truth labels.

    The denominator is the total number of labels, not pixels: with
    multi-label pixels the per-pixel label count exceeds one, and only
    the label total makes the frequencies sum to 1.
    """
    if bool((gt.masks == 0).any()):
        flat = int(np.argmax(gt.masks.ravel() == 0))
        y, x = divmod(flat, gt.width)
        raise EmptyGroundTruthPixel(f"ground-truth pixel ({x}, {y}) carries no class label")
    total_labels = int(np.bitwise_count(gt.masks).sum(dtype=np.int64))
    frequencies = []
    for label in registry:
        bit = np.uint32(1 << label.index)
        pixels_with_class = int(np.count_nonzero((gt.masks & bit) != 0))
        frequencies.append(
            ClassFrequency(
                label=label, label_count=pixels_with_class, total_labels=total_labels
            )
        )
    return frequencies
