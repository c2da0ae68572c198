"""Command-line front end.

Usage: layout-eval <gt-image> <prediction-image> [output-file.csv]
[output-directory] plus optional flags. Running without arguments prints
the expected inputs. The two optional positionals switch on CSV output
and visualization output respectively; nothing is written to disk unless
the matching argument was given.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from . import codec, report, visualization
from .codec import ClassRegistry
from .errors import (
    DimensionMismatch,
    EmptyGroundTruthPixel,
    RegistryError,
    UndecodableImage,
    UnknownBits,
)
from .metrics import evaluate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DECODE = 4
EXIT_DIMENSIONS = 5

_DECODE_ERRORS = (UndecodableImage, UnknownBits, EmptyGroundTruthPixel)


@dataclass
class RunConfig:
    gt_path: Path
    prediction_path: Path
    output_file: Path | None = None
    output_dir: Path | None = None
    original_image: Path | None = None
    classes_file: Path | None = None
    overlay_alpha: float = visualization.DEFAULT_PALETTE.overlay_alpha


def _alpha(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"alpha must be within 0..1, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="layout-eval",
        description=(
            "Pixel-level evaluation of a document layout analysis prediction "
            "against a bit-encoded ground truth image."
        ),
    )
    parser.add_argument(
        "gt_image",
        metavar="gt-image",
        help="ground truth image with bit-encoded class labels",
    )
    parser.add_argument(
        "prediction_image",
        metavar="prediction-image",
        help="prediction image, same encoding as the ground truth",
    )
    parser.add_argument(
        "output_file",
        metavar="output-file",
        nargs="?",
        help="if given, metric values are written to this file in CSV format",
    )
    parser.add_argument(
        "output_dir",
        metavar="output-directory",
        nargs="?",
        help="if given, visualization images are generated into this folder",
    )
    parser.add_argument(
        "--original",
        metavar="IMAGE",
        help="original page image; enables the blended overlay visualization",
    )
    parser.add_argument(
        "--classes",
        metavar="FILE",
        help="class registry file (name = bit per line); default: DIVA-HisDB layout",
    )
    parser.add_argument(
        "--alpha",
        metavar="0..1",
        type=_alpha,
        default=visualization.DEFAULT_PALETTE.overlay_alpha,
        help="blend factor for the overlay (default: %(default)s)",
    )
    return parser


def parse_args(argv: list[str]) -> RunConfig:
    parser = build_parser()
    if not argv:
        # Invoked without parameters: show the expected inputs and stop.
        parser.print_help(sys.stdout)
        raise SystemExit(EXIT_USAGE)
    args = parser.parse_args(argv)
    return RunConfig(
        gt_path=Path(args.gt_image),
        prediction_path=Path(args.prediction_image),
        output_file=Path(args.output_file) if args.output_file else None,
        output_dir=Path(args.output_dir) if args.output_dir else None,
        original_image=Path(args.original) if args.original else None,
        classes_file=Path(args.classes) if args.classes else None,
        overlay_alpha=args.alpha,
    )


def _fail(code: int, message: str) -> int:
    print(f"layout-eval: error: {message}", file=sys.stderr)
    return code


def run(config: RunConfig) -> int:
    """Decode, evaluate, report. Returns the process exit code."""
    try:
        registry = (
            ClassRegistry.from_file(config.classes_file)
            if config.classes_file
            else ClassRegistry.default()
        )
    except RegistryError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read class registry: {exc}")

    try:
        gt_bytes = config.gt_path.read_bytes()
        pred_bytes = config.prediction_path.read_bytes()
        original_bytes = (
            config.original_image.read_bytes() if config.original_image else None
        )
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))

    try:
        gt = codec.decode_label_image(gt_bytes, registry, codec.GROUND_TRUTH)
        pred = codec.decode_label_image(pred_bytes, registry, codec.PREDICTION)
        original = codec.load_rgb(original_bytes) if original_bytes is not None else None
    except _DECODE_ERRORS as exc:
        return _fail(EXIT_DECODE, str(exc))

    try:
        codec.validate_pair(gt, pred)
        result = evaluate(gt, pred, registry)
        error_map = (
            visualization.render_error_map(gt, pred, registry)
            if config.output_dir
            else None
        )
        overlay = None
        if error_map is not None and original is not None:
            if original.shape != error_map.shape:
                raise DimensionMismatch(
                    f"dimension mismatch: original image is "
                    f"{original.shape[1]}x{original.shape[0]}, "
                    f"evaluated pair is {gt.width}x{gt.height}"
                )
            overlay = visualization.render_overlay(error_map, original, config.overlay_alpha)
    except DimensionMismatch as exc:
        return _fail(EXIT_DIMENSIONS, str(exc))

    print(report.format_summary(result))

    try:
        if config.output_file:
            report.write_csv(result, config.output_file)
        if config.output_dir:
            config.output_dir.mkdir(parents=True, exist_ok=True)
            stem = config.prediction_path.stem
            codec.save_png(error_map, config.output_dir / f"{stem}.visualization.png")
            if overlay is not None:
                codec.save_png(overlay, config.output_dir / f"{stem}.overlap.png")
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))

    if config.original_image and not config.output_dir:
        print(
            "layout-eval: warning: --original has no effect without an output directory",
            file=sys.stderr,
        )
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    raise SystemExit(run(parse_args(argv)))


if __name__ == "__main__":
    main()
