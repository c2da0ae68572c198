"""Bit-encoded label rasters: class registry, decoding, encoding.

Ground truth and prediction come in as lossless RGB images whose 24-bit
pixel values are bitmasks: each class in the registry owns one bit, and a
pixel may carry several class bits at once (multi-label). Decoding turns
such a raster into a :class:`LabelImage`, a grid of label sets stored as
one canonical bitmask per pixel (bit ``i`` set means "class with registry
index ``i`` is present"). The canonical masks are independent of the
on-disk bit layout, so every downstream computation is layout-agnostic.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, Mapping

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DimensionMismatch,
    EmptyGroundTruthPixel,
    RegistryError,
    UndecodableImage,
    UnknownBits,
)

PIXEL_BITS = 24
_PIXEL_MASK = (1 << PIXEL_BITS) - 1

#: Raster formats accepted as input. Everything else (notably JPEG) is
#: rejected because lossy compression corrupts the label bits.
LOSSLESS_FORMATS = frozenset({"PNG", "BMP", "TIFF", "PPM", "PGM", "PBM"})

GROUND_TRUTH = "ground_truth"
PREDICTION = "prediction"

_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")
_RESERVED_NAMES = frozenset({"macro", "micro", "ignore_mask", "background_class"})


@dataclass(frozen=True)
class ClassLabel:
    """One content class: registry position, on-disk bit, display name."""

    index: int
    name: str
    encoding_bit: int
    is_background: bool = False


class ClassRegistry:
    """Ordered set of classes plus the pixel bits to strip before decoding.

    The class order is stable and defines the column order of every
    report. Exactly one class is the background class; the remaining ones
    are foreground. ``ignore_mask`` holds bits (for example a boundary
    flag) that are cleared from each pixel before decoding and must not
    overlap any class bit.
    """

    def __init__(self, classes: Iterable[ClassLabel], ignore_mask: int = 0):
        classes = tuple(classes)
        if not classes:
            raise RegistryError("a registry needs at least one class")
        if not 0 <= ignore_mask <= _PIXEL_MASK:
            raise RegistryError(f"ignore_mask 0x{ignore_mask:X} does not fit in {PIXEL_BITS} bits")
        seen_names: set[str] = set()
        seen_bits = 0
        background = None
        for position, label in enumerate(classes):
            if label.index != position:
                raise RegistryError(
                    f"class {label.name!r} has index {label.index}, expected {position}"
                )
            _check_name(label.name)
            if label.name in seen_names:
                raise RegistryError(f"duplicate class name {label.name!r}")
            seen_names.add(label.name)
            bit = label.encoding_bit
            if bit <= 0 or bit > _PIXEL_MASK or bit & (bit - 1):
                raise RegistryError(
                    f"class {label.name!r}: encoding bit 0x{bit:X} is not a single bit "
                    f"within {PIXEL_BITS} bits"
                )
            if bit & seen_bits:
                raise RegistryError(f"class {label.name!r} reuses encoding bit 0x{bit:X}")
            seen_bits |= bit
            if label.is_background:
                if background is not None:
                    raise RegistryError(
                        f"both {background.name!r} and {label.name!r} claim to be background"
                    )
                background = label
        if background is None:
            raise RegistryError("exactly one class must be the background class")
        if ignore_mask & seen_bits:
            raise RegistryError(
                f"ignore_mask 0x{ignore_mask:X} overlaps a class encoding bit"
            )
        self._classes = classes
        self._ignore_mask = ignore_mask
        self._background = background

    @classmethod
    def from_bits(
        cls,
        bits: Mapping[str, int],
        background: str | None = None,
        ignore_mask: int = 0,
    ) -> "ClassRegistry":
        """Build a registry from an ordered name-to-bit mapping.

        ``background`` names the background class; it defaults to the
        first entry of the mapping.
        """
        names = list(bits)
        if not names:
            raise RegistryError("a registry needs at least one class")
        if background is None:
            background = names[0]
        elif background not in bits:
            raise RegistryError(f"background class {background!r} is not a listed class")
        labels = [
            ClassLabel(index=i, name=name, encoding_bit=bits[name], is_background=name == background)
            for i, name in enumerate(names)
        ]
        return cls(labels, ignore_mask=ignore_mask)

    @classmethod
    def default(cls) -> "ClassRegistry":
        """DIVA-HisDB style registry: four classes, boundary bit ignored."""
        return cls.from_bits(
            {"background": 0x01, "comment": 0x02, "decoration": 0x04, "main_text": 0x08},
            ignore_mask=0x800000,
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ClassRegistry":
        """Load a registry from a key-value text file.

        Format, one entry per line: ``<class-name> = <bit>`` with bits in
        hex (``0x08``) or decimal, listed in report order. Blank lines and
        ``#`` comments are skipped. Two reserved keys are understood:
        ``ignore_mask`` (bits cleared before decoding, default 0) and
        ``background_class`` (name of the background class, default: the
        first class listed).
        """
        bits: dict[str, int] = {}
        ignore_mask = 0
        background = None
        for lineno, raw_line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise RegistryError(f"{path}:{lineno}: expected 'name = value', got {line!r}")
            key = key.strip()
            value = value.strip()
            if key == "ignore_mask":
                ignore_mask = _parse_int(value, path, lineno)
            elif key == "background_class":
                background = value
            elif key in bits:
                raise RegistryError(f"{path}:{lineno}: class {key!r} listed twice")
            else:
                bits[key] = _parse_int(value, path, lineno)
        if not bits:
            raise RegistryError(f"{path}: no classes defined")
        return cls.from_bits(bits, background=background, ignore_mask=ignore_mask)

    @property
    def classes(self) -> tuple[ClassLabel, ...]:
        return self._classes

    @property
    def ignore_mask(self) -> int:
        return self._ignore_mask

    @property
    def background(self) -> ClassLabel:
        return self._background

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(label.name for label in self._classes)

    def __len__(self) -> int:
        return len(self._classes)

    def __iter__(self) -> Iterator[ClassLabel]:
        return iter(self._classes)

    def __getitem__(self, index: int) -> ClassLabel:
        return self._classes[index]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClassRegistry):
            return NotImplemented
        return self._classes == other._classes and self._ignore_mask == other._ignore_mask

    def __repr__(self) -> str:
        names = ", ".join(self.names)
        return f"ClassRegistry([{names}], ignore_mask=0x{self._ignore_mask:X})"

    def label_set(self, *names: str) -> "LabelSet":
        """Label set containing the named classes (convenience for tests/tools)."""
        by_name = {label.name: label for label in self._classes}
        mask = 0
        for name in names:
            if name not in by_name:
                raise RegistryError(f"unknown class name {name!r}")
            mask |= 1 << by_name[name].index
        return LabelSet(mask)

    def resolve(self, label_set: "LabelSet") -> tuple[ClassLabel, ...]:
        """Classes contained in ``label_set``, in registry order."""
        return tuple(label for label in self._classes if label.index in label_set)


def _check_name(name: str) -> None:
    if not _NAME_RE.match(name):
        raise RegistryError(
            f"invalid class name {name!r}: letters, digits, '_', '-', '.' only"
        )
    if name in _RESERVED_NAMES:
        raise RegistryError(f"class name {name!r} is reserved")


def _parse_int(value: str, path: str | Path, lineno: int) -> int:
    try:
        return int(value, 0)
    except ValueError:
        raise RegistryError(f"{path}:{lineno}: {value!r} is not an integer") from None


@dataclass(frozen=True)
class LabelSet:
    """Immutable set of classes, packed as a bitmask over registry indices."""

    mask: int = 0

    @classmethod
    def of(cls, *labels: ClassLabel | int) -> "LabelSet":
        mask = 0
        for label in labels:
            mask |= 1 << (label.index if isinstance(label, ClassLabel) else label)
        return cls(mask)

    def __contains__(self, label: ClassLabel | int) -> bool:
        index = label.index if isinstance(label, ClassLabel) else label
        return bool(self.mask >> index & 1)

    def __iter__(self) -> Iterator[int]:
        mask = self.mask
        index = 0
        while mask:
            if mask & 1:
                yield index
            mask >>= 1
            index += 1

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __bool__(self) -> bool:
        return self.mask != 0

    def __or__(self, other: "LabelSet") -> "LabelSet":
        return LabelSet(self.mask | other.mask)

    def __and__(self, other: "LabelSet") -> "LabelSet":
        return LabelSet(self.mask & other.mask)

    def __xor__(self, other: "LabelSet") -> "LabelSet":
        return LabelSet(self.mask ^ other.mask)

    def __repr__(self) -> str:
        return f"LabelSet({{{', '.join(str(i) for i in self)}}})"


class LabelImage:
    """A width x height grid of label sets, one canonical bitmask per pixel.

    The backing array is (height, width) uint32 and is exposed read-only;
    decoding the same bytes twice therefore yields interchangeable,
    immutable values.
    """

    __slots__ = ("_masks",)

    def __init__(self, masks: np.ndarray):
        arr = np.asarray(masks, dtype=np.uint32)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-d mask array, got shape {arr.shape}")
        if arr.size == 0:
            raise ValueError("a label image needs at least one pixel")
        view = arr.view()
        view.flags.writeable = False
        self._masks = view

    @classmethod
    def from_sets(cls, width: int, height: int, sets: Iterable[LabelSet | int]) -> "LabelImage":
        masks = [s.mask if isinstance(s, LabelSet) else int(s) for s in sets]
        if len(masks) != width * height:
            raise ValueError(f"got {len(masks)} label sets for a {width}x{height} image")
        return cls(np.array(masks, dtype=np.uint32).reshape(height, width))

    @property
    def masks(self) -> np.ndarray:
        """(height, width) uint32 array of per-pixel class bitmasks."""
        return self._masks

    @property
    def width(self) -> int:
        return self._masks.shape[1]

    @property
    def height(self) -> int:
        return self._masks.shape[0]

    @property
    def pixel_count(self) -> int:
        return self._masks.size

    def label_set(self, x: int, y: int) -> LabelSet:
        return LabelSet(int(self._masks[y, x]))

    def sets(self) -> Iterator[LabelSet]:
        """Label sets in row-major order."""
        for value in self._masks.ravel():
            yield LabelSet(int(value))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabelImage):
            return NotImplemented
        return self._masks.shape == other._masks.shape and bool(
            np.array_equal(self._masks, other._masks)
        )

    def __repr__(self) -> str:
        return f"LabelImage({self.width}x{self.height})"


def load_rgb(source: bytes | bytearray | str | Path | BinaryIO) -> np.ndarray:
    """Read a lossless raster into an (H, W, 3) uint8 array.

    Raises UndecodableImage for corrupt data and for formats that are not
    in LOSSLESS_FORMATS. An unreadable path raises the underlying OSError,
    which is a file-system problem, not a decoding one.
    """
    if isinstance(source, (str, Path)):
        source = Path(source).read_bytes()
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    try:
        with Image.open(source) as im:
            image_format = im.format
            if image_format not in LOSSLESS_FORMATS:
                raise UndecodableImage(
                    f"unsupported or lossy raster format: {image_format or 'unknown'}"
                )
            return np.asarray(im.convert("RGB"))
    except UnidentifiedImageError as exc:
        raise UndecodableImage(f"not a decodable raster image: {exc}") from exc
    except OSError as exc:
        raise UndecodableImage(f"raster decoding failed: {exc}") from exc


def pack_rgb(rgb: np.ndarray) -> np.ndarray:
    """Fold (H, W, 3) uint8 channels into (H, W) 24-bit pixel values."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) array, got shape {rgb.shape}")
    out = rgb[..., 0].astype(np.uint32) << np.uint32(16)
    out |= rgb[..., 1].astype(np.uint32) << np.uint32(8)
    out |= rgb[..., 2]
    return out


def unpack_rgb(packed: np.ndarray) -> np.ndarray:
    """Split (H, W) 24-bit pixel values into (H, W, 3) uint8 channels."""
    packed = np.asarray(packed, dtype=np.uint32)
    return np.stack(
        [
            (packed >> np.uint32(16)) & np.uint32(0xFF),
            (packed >> np.uint32(8)) & np.uint32(0xFF),
            packed & np.uint32(0xFF),
        ],
        axis=-1,
    ).astype(np.uint8)


# Lookup-table decoding: each encoding bit lives in exactly one RGB
# channel, so one 256-entry table per channel maps a channel byte to its
# canonical-mask contribution. A gather per channel plus two ORs replaces
# per-class scans over the whole image; bytes carrying a stray bit map to
# a sentinel above the 24 usable mask bits.
_STRAY_SENTINEL = np.uint32(0x8000_0000)


def _channel_tables(registry: ClassRegistry) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    known = registry.ignore_mask
    for label in registry:
        known |= label.encoding_bit
    tables = []
    for shift in (16, 8, 0):
        table = np.zeros(256, dtype=np.uint32)
        for byte in range(256):
            pixel_bits = byte << shift
            mask = 0
            for label in registry:
                if pixel_bits & label.encoding_bit:
                    mask |= 1 << label.index
            if pixel_bits & ~known:
                mask |= int(_STRAY_SENTINEL)
            table[byte] = mask
        tables.append(table)
    return tables[0], tables[1], tables[2]


def decode_rgb(rgb: np.ndarray, registry: ClassRegistry, role: str) -> LabelImage:
    """Decode (H, W, 3) uint8 channel data into a LabelImage.

    ``role`` is ``"ground_truth"`` or ``"prediction"``; only ground truth
    requires every pixel to carry at least one label.
    """
    if role not in (GROUND_TRUTH, PREDICTION):
        raise ValueError(f"role must be {GROUND_TRUTH!r} or {PREDICTION!r}, got {role!r}")
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) array, got shape {rgb.shape}")
    red_table, green_table, blue_table = _channel_tables(registry)
    masks = red_table[rgb[..., 0]]
    masks |= green_table[rgb[..., 1]]
    masks |= blue_table[rgb[..., 2]]

    width = rgb.shape[1]
    if bool((masks & _STRAY_SENTINEL).any()):
        flat = int(np.argmax((masks.ravel() & _STRAY_SENTINEL) != 0))
        y, x = divmod(flat, width)
        value = int(pack_rgb(rgb[y : y + 1, x : x + 1])[0, 0])
        known = registry.ignore_mask
        for label in registry:
            known |= label.encoding_bit
        raise UnknownBits(
            f"pixel ({x}, {y}) has value 0x{value:06X} with unknown bits "
            f"0x{value & ~known & _PIXEL_MASK:06X}"
        )

    if role == GROUND_TRUTH:
        empty = masks == 0
        if bool(empty.any()):
            flat = int(np.argmax(empty.ravel()))
            y, x = divmod(flat, width)
            raise EmptyGroundTruthPixel(
                f"ground-truth pixel ({x}, {y}) carries no class label"
            )
    return LabelImage(masks)


def decode_packed(packed: np.ndarray, registry: ClassRegistry, role: str) -> LabelImage:
    """Decode (H, W) 24-bit pixel values into a LabelImage."""
    return decode_rgb(unpack_rgb(packed), registry, role)


def decode_label_image(
    source: bytes | bytearray | str | Path | BinaryIO,
    registry: ClassRegistry,
    role: str,
) -> LabelImage:
    """Decode a lossless raster into a LabelImage. Pure: same input, same result."""
    return decode_rgb(load_rgb(source), registry, role)


def encode_label_image(image: LabelImage, registry: ClassRegistry) -> np.ndarray:
    """Inverse of decoding: render canonical masks back to (H, W, 3) uint8.

    Round-trips with decode_label_image up to ignore_mask bits, which are
    never re-created.
    """
    packed = np.zeros_like(image.masks)
    for label in registry:
        present = (image.masks >> np.uint32(label.index)) & np.uint32(1)
        packed |= present * np.uint32(label.encoding_bit)
    return unpack_rgb(packed)


def png_bytes(rgb: np.ndarray, compress_level: int = 6) -> bytes:
    """Serialize an (H, W, 3) uint8 array as PNG."""
    buffer = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8), "RGB").save(
        buffer, format="PNG", compress_level=compress_level
    )
    return buffer.getvalue()


def save_png(rgb: np.ndarray, path: str | Path, compress_level: int = 6) -> None:
    Path(path).write_bytes(png_bytes(rgb, compress_level=compress_level))


def validate_pair(gt: LabelImage, pred: LabelImage) -> None:
    """Ensure both images have the same dimensions."""
    if gt.width != pred.width or gt.height != pred.height:
        raise DimensionMismatch(
            f"dimension mismatch: ground truth is {gt.width}x{gt.height}, "
            f"prediction is {pred.width}x{pred.height}"
        )
