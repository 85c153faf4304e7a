"""Markdown summary of every run found under an output directory."""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd
from jinja2 import Environment, PackageLoader, StrictUndefined

from faultfusion.errors import ArtifactError
from faultfusion.experiments.ablation import ABLATION_FILE
from faultfusion.experiments.robustness import ROBUSTNESS_FILE
from faultfusion.experiments.runs import MANIFEST_FILE, read_metrics
from faultfusion.schemas import MetricsReport, RunManifest

logger = logging.getLogger("faultfusion")

REPORT_FILE = "report.md"


@dataclass
class RunSummary:
    """Everything the template shows for one run directory."""

    name: str
    manifest: RunManifest
    metrics: MetricsReport | None = None
    tables: dict[str, str] = field(default_factory=dict)


def text_table(header: list[str], rows: list[list[str]]) -> str:
    """Right-aligned plain-text table with a rule under the header."""
    widths = [max(len(cell) for cell in column) for column in zip(header, *rows, strict=True)]
    lines = ["  ".join(cell.rjust(width) for cell, width in zip(header, widths, strict=True))]
    lines.append("  ".join("-" * width for width in widths))
    lines.extend("  ".join(cell.rjust(width) for cell, width in zip(row, widths, strict=True)) for row in rows)
    return "\n".join(lines)


def confusion_table(report: MetricsReport) -> str:
    """The confusion matrix with true classes as rows and a per-row total."""
    header = ["true \\ pred", *report.classes, "total"]
    rows = [
        [name, *(str(count) for count in counts), str(sum(counts))]
        for name, counts in zip(report.classes, report.confusion, strict=True)
    ]
    return text_table(header, rows)


def per_class_table(report: MetricsReport) -> str:
    """Precision, recall, F1 and support per class."""
    rows = [
        [c.name, f"{c.precision:.4f}", f"{c.recall:.4f}", f"{c.f1:.4f}", str(c.support)] for c in report.per_class
    ]
    return text_table(["class", "precision", "recall", "f1", "support"], rows)


def csv_table(path: Path) -> str:
    """A CSV artifact rendered as a text table."""
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    return text_table(list(frame.columns), frame.to_numpy().tolist())


def collect_runs(out: Path) -> list[RunSummary]:
    """Every ``run.json`` below ``out``, oldest first."""
    runs = []
    for manifest_path in sorted(out.rglob(MANIFEST_FILE)):
        directory = manifest_path.parent
        manifest = RunManifest.model_validate_json(manifest_path.read_text(encoding="utf-8"))
        summary = RunSummary(directory.relative_to(out).as_posix(), manifest, read_metrics(directory))
        for title, file_name in (("Ablation", ABLATION_FILE), ("Robustness", ROBUSTNESS_FILE)):
            if (directory / file_name).is_file():
                summary.tables[title] = csv_table(directory / file_name)
        runs.append(summary)
    runs.sort(key=lambda run: (run.manifest.created_at, run.name))
    return runs


def render_report(out: Path) -> Path:
    """Write ``<out>/report.md`` and return its path."""
    if not out.is_dir():
        msg = f"Output directory {out} does not exist"
        raise ArtifactError(msg)
    runs = collect_runs(out)
    if not runs:
        msg = f"No runs found under {out}"
        raise ArtifactError(msg)

    # Markdown output, nothing to escape.
    environment = Environment(  # noqa: S701
        loader=PackageLoader("faultfusion.experiments", "templates"),
        undefined=StrictUndefined,
        keep_trailing_newline=True,
        trim_blocks=True,
        lstrip_blocks=True,
    )
    environment.filters["confusion_table"] = confusion_table
    environment.filters["per_class_table"] = per_class_table
    text = environment.get_template("report.md.j2").render(runs=runs)
    path = out / REPORT_FILE
    path.write_text(text, encoding="utf-8")
    logger.info("Report over %d runs written to %s", len(runs), path)
    return path
