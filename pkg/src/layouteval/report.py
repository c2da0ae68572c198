"""Report serialization: canonical metric names, CSV output, text summary.

The column schema is fixed so results stay diffable and joinable across
documents: exact_match, hamming_score, then for each of precision,
recall, f1, jaccard the macro average, the micro average, and the
per-class values in registry order. That is 4*|C| + 10 columns. The same
names key the JSON metrics returned by the evaluation service.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence, TextIO

from .metrics import EvaluationReport

METRIC_GROUPS = ("precision", "recall", "f1", "jaccard")

#: Fixed-point formatting used for the CSV and the stdout summary.
VALUE_FORMAT = "{:.6f}"


def metric_names(class_names: Sequence[str]) -> list[str]:
    """Canonical column names for a registry with the given class order."""
    names = ["exact_match", "hamming_score"]
    for group in METRIC_GROUPS:
        names.append(f"{group}_macro")
        names.append(f"{group}_micro")
        names.extend(f"{group}_{class_name}" for class_name in class_names)
    return names


def metric_values(report: EvaluationReport) -> list[float]:
    """Metric values in canonical column order."""
    values = [report.exact_match, report.hamming_score]
    for group in METRIC_GROUPS:
        values.append(getattr(report.macro, group))
        values.append(getattr(report.micro, group))
        values.extend(getattr(cm, group) for cm in report.per_class)
    return values


def metric_dict(report: EvaluationReport) -> dict[str, float]:
    """Canonical name -> value mapping (insertion-ordered)."""
    return dict(zip(metric_names(report.class_names), metric_values(report)))


def write_csv(report: EvaluationReport, destination: str | Path | TextIO) -> None:
    """Write the report as one header row plus one data row.

    UTF-8, comma separated, line-feed terminated, values with six
    decimal places. Writing the same report twice yields identical bytes.
    """
    header = ",".join(metric_names(report.class_names))
    row = ",".join(VALUE_FORMAT.format(value) for value in metric_values(report))
    text = f"{header}\n{row}\n"
    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    else:
        destination.write(text)


def format_summary(report: EvaluationReport) -> str:
    """Human-readable summary table with the same values as the CSV."""
    fmt = VALUE_FORMAT.format
    name_width = max(len(name) for name in (*report.class_names, "class"))
    lines = [
        f"pixels evaluated : {report.pixel_count}",
        f"classes          : {', '.join(report.class_names)}",
        "",
        f"exact_match      : {fmt(report.exact_match)}",
        f"hamming_score    : {fmt(report.hamming_score)}",
        "",
        f"{'class':<{name_width}}  {'precision':>9}  {'recall':>9}  "
        f"{'f1':>9}  {'jaccard':>9}  {'frequency':>9}",
    ]
    for scope, m in (("macro", report.macro), ("micro", report.micro)):
        lines.append(
            f"{scope:<{name_width}}  {fmt(m.precision):>9}  {fmt(m.recall):>9}  "
            f"{fmt(m.f1):>9}  {fmt(m.jaccard):>9}  {'':>9}"
        )
    for cm, freq in zip(report.per_class, report.frequencies):
        lines.append(
            f"{cm.label.name:<{name_width}}  {fmt(cm.precision):>9}  {fmt(cm.recall):>9}  "
            f"{fmt(cm.f1):>9}  {fmt(cm.jaccard):>9}  {fmt(freq.value):>9}"
        )
    return "\n".join(lines)
