"""Shared builders for test images, registries and randomized corpora."""

from __future__ import annotations

import io
import random

import numpy as np
from PIL import Image

from layouteval import ClassRegistry, LabelImage

Grid = list[list[frozenset[str]]]

#: Bit layouts exercised by size: deliberately not always the low bits and
#: not always in ascending order, so tests catch any code that confuses
#: registry order with bit order.
_BIT_LAYOUTS = {
    1: [0x01],
    2: [0x10, 0x02],
    3: [0x01, 0x40, 0x04],
    4: [0x01, 0x02, 0x04, 0x08],
    5: [0x01, 0x02, 0x04, 0x08, 0x100],
    6: [0x01, 0x02, 0x04, 0x08, 0x10, 0x20],
    7: [0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40],
    8: [0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80],
}


def registry_of_size(size: int, ignore_mask: int = 0) -> ClassRegistry:
    """Registry with `size` classes named background, fg1, fg2, ..."""
    names = ["background"] + [f"fg{i}" for i in range(1, size)]
    return ClassRegistry.from_bits(
        dict(zip(names, _BIT_LAYOUTS[size])), ignore_mask=ignore_mask
    )


def rgb_from_values(values: list[list[int]]) -> np.ndarray:
    """Spell 24-bit pixel values out into channels by hand."""
    out = np.zeros((len(values), len(values[0]), 3), dtype=np.uint8)
    for y, row in enumerate(values):
        for x, value in enumerate(row):
            out[y, x] = ((value >> 16) & 0xFF, (value >> 8) & 0xFF, value & 0xFF)
    return out


def png_from_values(values: list[list[int]]) -> bytes:
    buffer = io.BytesIO()
    Image.fromarray(rgb_from_values(values), "RGB").save(buffer, format="PNG")
    return buffer.getvalue()


def grid_to_png(registry: ClassRegistry, grid: Grid) -> bytes:
    """Encode a grid of class-name sets as a PNG in the registry's bit layout."""
    by_name = {label.name: label.encoding_bit for label in registry}
    values = [[sum(by_name[name] for name in cell) for cell in row] for row in grid]
    return png_from_values(values)


def grid_image(registry: ClassRegistry, grid: Grid) -> LabelImage:
    """LabelImage from a row-major grid of class-name sets."""
    height = len(grid)
    width = len(grid[0])
    sets = [registry.label_set(*sorted(cell)) for row in grid for cell in row]
    return LabelImage.from_sets(width, height, sets)


def random_grid(
    rng: random.Random,
    names: list[str],
    width: int,
    height: int,
    allow_empty: bool = False,
    single_label: bool = False,
) -> Grid:
    grid = []
    for _ in range(height):
        row = []
        for _ in range(width):
            if single_label:
                row.append(frozenset([rng.choice(names)]))
                continue
            cell = frozenset(name for name in names if rng.random() < 0.4)
            if not cell and not allow_empty:
                cell = frozenset([rng.choice(names)])
            row.append(cell)
        grid.append(row)
    return grid


def random_pair(
    rng: random.Random, single_label: bool = False, empty_pred_ok: bool = True
) -> tuple[ClassRegistry, Grid, Grid]:
    """One randomized (registry, gt, pred) sample for the oracle corpus."""
    size = rng.randint(1, 4)
    registry = registry_of_size(size)
    width = rng.randint(1, 16)
    height = rng.randint(1, 16)
    names = list(registry.names)
    gt = random_grid(rng, names, width, height, single_label=single_label)
    pred = random_grid(
        rng,
        names,
        width,
        height,
        allow_empty=empty_pred_ok and not single_label,
        single_label=single_label,
    )
    return registry, gt, pred
