"""Five-color error maps and alpha-blended overlays.

Each evaluated pixel falls into one of five outcomes, phrased purely in
foreground/background terms (the background class bit is ignored when
comparing foreground label sets):

* BG_CORRECT      black       background, predicted as background
* BG_AS_FG        red         background, predicted as foreground
* FG_AS_BG        light blue  foreground, predicted as background (or nothing)
* FG_CORRECT      green       foreground with exactly the right classes
* FG_WRONG_CLASS  yellow      foreground detected, but the class set differs

The error map paints each pixel with its outcome color; the overlay
blends that map onto the original page so mistakes can be read in
context (an ink stain under a cluster of red pixels explains a lot).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .codec import ClassRegistry, LabelImage, LabelSet, validate_pair
from .errors import DimensionMismatch, EmptyGroundTruthPixel

RGB = tuple[int, int, int]


class PixelOutcome(IntEnum):
    BG_CORRECT = 0
    BG_AS_FG = 1
    FG_AS_BG = 2
    FG_CORRECT = 3
    FG_WRONG_CLASS = 4


@dataclass(frozen=True)
class Palette:
    """Outcome colors plus the default blend factor for overlays."""

    bg_correct: RGB = (0x00, 0x00, 0x00)
    bg_as_fg: RGB = (0xFF, 0x00, 0x00)
    fg_as_bg: RGB = (0x00, 0xAA, 0xFF)
    fg_correct: RGB = (0x00, 0xFF, 0x00)
    fg_wrong_class: RGB = (0xFF, 0xFF, 0x00)
    overlay_alpha: float = 0.5

    def __post_init__(self) -> None:
        colors = self.as_table()
        if len({tuple(c) for c in colors}) != len(PixelOutcome):
            raise ValueError("palette colors must be pairwise distinct")
        if not 0.0 < self.overlay_alpha < 1.0:
            raise ValueError(f"overlay_alpha must be in (0, 1), got {self.overlay_alpha}")

    def color(self, outcome: PixelOutcome) -> RGB:
        return self.as_table()[outcome]

    def as_table(self) -> tuple[RGB, ...]:
        """Colors indexed by PixelOutcome value."""
        return (
            self.bg_correct,
            self.bg_as_fg,
            self.fg_as_bg,
            self.fg_correct,
            self.fg_wrong_class,
        )


DEFAULT_PALETTE = Palette()


def classify_pixel(gt: LabelSet, pred: LabelSet, registry: ClassRegistry) -> PixelOutcome:
    """Outcome of a single pixel. Total over all pairs with non-empty gt."""
    if not gt:
        raise EmptyGroundTruthPixel("cannot classify a pixel with an empty ground-truth set")
    bg_bit = 1 << registry.background.index
    gt_fg = gt.mask & ~bg_bit
    pred_fg = pred.mask & ~bg_bit
    if not gt_fg:
        return PixelOutcome.BG_AS_FG if pred_fg else PixelOutcome.BG_CORRECT
    if not pred_fg:
        return PixelOutcome.FG_AS_BG
    return PixelOutcome.FG_CORRECT if pred_fg == gt_fg else PixelOutcome.FG_WRONG_CLASS


def outcome_map(gt: LabelImage, pred: LabelImage, registry: ClassRegistry) -> np.ndarray:
    """Vectorized classify_pixel: (H, W) uint8 array of PixelOutcome values."""
    validate_pair(gt, pred)
    if bool((gt.masks == 0).any()):
        flat = int(np.argmax(gt.masks.ravel() == 0))
        y, x = divmod(flat, gt.width)
        raise EmptyGroundTruthPixel(f"ground-truth pixel ({x}, {y}) carries no class label")
    fg_bits = np.uint32(~(1 << registry.background.index) & 0xFFFFFFFF)
    gt_fg = gt.masks & fg_bits
    pred_fg = pred.masks & fg_bits

    out = np.full(gt.masks.shape, PixelOutcome.BG_CORRECT, dtype=np.uint8)
    gt_has_fg = gt_fg != 0
    pred_has_fg = pred_fg != 0
    out[~gt_has_fg & pred_has_fg] = PixelOutcome.BG_AS_FG
    out[gt_has_fg & ~pred_has_fg] = PixelOutcome.FG_AS_BG
    both = gt_has_fg & pred_has_fg
    out[both & (gt_fg == pred_fg)] = PixelOutcome.FG_CORRECT
    out[both & (gt_fg != pred_fg)] = PixelOutcome.FG_WRONG_CLASS
    return out


def render_error_map(
    gt: LabelImage,
    pred: LabelImage,
    registry: ClassRegistry,
    palette: Palette = DEFAULT_PALETTE,
) -> np.ndarray:
    """Paint each pixel with its outcome color; returns (H, W, 3) uint8."""
    lut = np.asarray(palette.as_table(), dtype=np.uint8)
    return lut[outcome_map(gt, pred, registry)]


def render_overlay(error_map: np.ndarray, original: np.ndarray, alpha: float) -> np.ndarray:
    """Blend the error map over the original page.

    Per channel: alpha * error + (1 - alpha) * original, rounded half-up.
    alpha=1 returns the error map, alpha=0 the original.
    """
    error_map = np.asarray(error_map)
    original = np.asarray(original)
    if error_map.shape != original.shape:
        raise DimensionMismatch(
            f"dimension mismatch: error map is {error_map.shape}, "
            f"original is {original.shape}"
        )
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    # float32 carries 8-bit channel blends exactly; np.round would round
    # half to even, the contract is half-up.
    blended = np.float32(alpha) * error_map.astype(np.float32)
    blended += np.float32(1.0 - alpha) * original.astype(np.float32)
    blended += np.float32(0.5)
    return np.floor(blended, out=blended).astype(np.uint8)
