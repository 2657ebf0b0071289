"""Render experiment CSV traces into figures.

Reads the fixed-schema CSV written by the experiment harness and draws one
line series per group value (normally per method).  Rendering is strictly
read-only over the CSV: no numerical quantity is ever recomputed here, and
no timestamps are embedded, so identical inputs produce identical files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

CSV_COLUMNS = (
    "experiment",
    "method",
    "s",
    "l",
    "t",
    "matrix_loads",
    "matvecs",
    "mu",
    "rel_err_anorm",
    "residual_norm",
    "kappa_actual",
    "seed",
)
X_COLUMNS = ("matrix_loads", "mu", "l")
Y_COLUMNS = ("rel_err_anorm", "residual_norm", "kappa_actual")


class RenderError(ValueError):
    """Bad plot request: malformed CSV, unknown column, empty selection."""


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: input traces, axes, grouping, scales, output path."""

    csv_paths: tuple
    x: str
    y: str
    out: str
    group: str = "method"
    logy: bool = True
    logx: bool = False
    title: str | None = None


@dataclass
class RenderResult:
    out: str
    series: int
    labels: list = field(default_factory=list)


def read_trace(path) -> list:
    """Parse one harness CSV; validates the header against the fixed schema."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise RenderError(f"{path}: file is empty") from None
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise RenderError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = [dict(zip(header, row)) for row in reader if row]
    if not rows:
        raise RenderError(f"{path}: no data rows")
    return rows


def _validate_spec(spec: PlotSpec) -> None:
    if not spec.csv_paths:
        raise RenderError("at least one CSV path is required")
    if spec.x not in X_COLUMNS:
        raise RenderError(f"x must be one of {X_COLUMNS}, got {spec.x!r}")
    if spec.y not in Y_COLUMNS:
        raise RenderError(f"y must be one of {Y_COLUMNS}, got {spec.y!r}")
    if spec.group not in CSV_COLUMNS:
        raise RenderError(f"group must be a trace column, got {spec.group!r}")


def _series(rows, spec):
    """Group the usable rows; preserves first-appearance group order."""
    groups: dict = {}
    for row in rows:
        xs, ys = row.get(spec.x, ""), row.get(spec.y, "")
        if xs == "" or ys == "":
            continue
        key = row.get(spec.group, "")
        groups.setdefault(key, []).append((float(xs), float(ys)))
    if not groups:
        raise RenderError(
            f"no rows carry both {spec.x!r} and {spec.y!r}; nothing to draw"
        )
    return {key: sorted(points) for key, points in groups.items()}


_AXIS_LABELS = {
    "matrix_loads": "matrix loads",
    "mu": "shift",
    "l": "sketch width",
    "rel_err_anorm": "relative error (A-norm)",
    "residual_norm": "residual norm",
    "kappa_actual": "condition number",
}

_SAVE_METADATA = {
    ".svg": {"Date": None},
    ".pdf": {"CreationDate": None},
}


def render(spec: PlotSpec) -> RenderResult:
    """Draw the spec and write the image; returns the series actually drawn."""
    _validate_spec(spec)
    rows = []
    for path in spec.csv_paths:
        rows.extend(read_trace(path))
    groups = _series(rows, spec)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, points in groups.items():
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.plot(xs, ys, linewidth=1.6, label=str(label))
    if spec.logy:
        ax.set_yscale("log")
    if spec.logx:
        ax.set_xscale("log")
    ax.set_xlabel(_AXIS_LABELS.get(spec.x, spec.x))
    ax.set_ylabel(_AXIS_LABELS.get(spec.y, spec.y))
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, which="major", alpha=0.3)
    ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()

    suffix = "." + str(spec.out).rsplit(".", 1)[-1].lower() if "." in str(spec.out) else ""
    metadata = _SAVE_METADATA.get(suffix)
    try:
        fig.savefig(spec.out, dpi=150, metadata=metadata)
    finally:
        plt.close(fig)
    return RenderResult(out=str(spec.out), series=len(groups), labels=list(groups))
