"""Render scan CSVs to figures.

One figure per invocation.  Dashed overlays are drawn from the fit_a and
fit_b columns by plain recomputation a * x**b at the curve's tail; the
renderer performs no fitting of its own.  Output is deterministic:
fixed style, no embedded timestamps.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

#: figure kind -> columns the input CSV must provide
FIGURE_KINDS = {
    "rate_function": ("p0", "t", "x", "f"),
    "entropy_t": ("t", "N", "S_L"),
    "entropy_N": ("N", "t", "S_L", "fit_a", "fit_b"),
    "infidelity_N": ("N", "t", "I", "I_limit"),
    "convergence": ("N", "t", "p0", "epsilon", "fit_a", "fit_b"),
}

#: fraction of each curve, from the right, spanned by a fit overlay
OVERLAY_TAIL_FRACTION = 0.2

_STYLE = {
    "figure.figsize": (6.4, 4.4),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.6,
    "legend.fontsize": 8,
    "svg.hashsalt": "hartreelab-figures",
}


class SchemaError(ValueError):
    """The CSV is missing a column the figure kind requires."""


class NoDataError(ValueError):
    """The CSV holds no data rows."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render: input CSV, figure kind, output path, axis scales."""

    input_csv: Path
    figure_kind: str
    output_path: Path
    logx: bool = False
    logy: bool = False

    def __post_init__(self):
        if self.figure_kind not in FIGURE_KINDS:
            raise ValueError(
                f"unknown figure kind '{self.figure_kind}'; "
                f"expected one of {sorted(FIGURE_KINDS)}"
            )
        object.__setattr__(self, "input_csv", Path(self.input_csv))
        object.__setattr__(self, "output_path", Path(self.output_path))


@dataclass
class OverlayLine:
    """A dashed overlay with endpoints recomputable from the CSV columns."""

    label: str
    x: tuple[float, float]
    y: tuple[float, float]


def _read_rows(spec: FigureSpec) -> list[dict[str, float]]:
    required = FIGURE_KINDS[spec.figure_kind]
    with open(spec.input_csv, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in required:
            if column not in header:
                raise SchemaError(
                    f"{spec.input_csv}: kind '{spec.figure_kind}' needs "
                    f"column '{column}', found {header}"
                )
        rows = [{k: float(v) for k, v in row.items()} for row in reader]
    if not rows:
        raise NoDataError(f"{spec.input_csv}: no data rows")
    return rows


def _groups(rows: list[dict[str, float]], *keys: str):
    """Split rows into curves keyed by the given columns, in file order."""
    order: list[tuple] = []
    grouped: dict[tuple, list[dict[str, float]]] = {}
    for row in rows:
        key = tuple(row[k] for k in keys)
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append(row)
    return [(key, grouped[key]) for key in order]


def _fmt(value: float) -> str:
    return f"{value:g}"


def _overlay_from_fit(ax, curve_x, fit_a, fit_b, label) -> OverlayLine | None:
    """Dashed a * x**b across the curve tail; endpoints recompute exactly."""
    if math.isnan(fit_a) or math.isnan(fit_b):
        return None
    n_tail = max(2, math.ceil(OVERLAY_TAIL_FRACTION * len(curve_x)))
    tail = curve_x[-n_tail:]
    ys = [fit_a * x**fit_b for x in tail]
    ax.plot(tail, ys, linestyle="--", color="black", alpha=0.7, label=label)
    return OverlayLine(label=label, x=(tail[0], tail[-1]), y=(ys[0], ys[-1]))


def build_figure(spec: FigureSpec):
    """Build the matplotlib figure; returns (figure, overlay list)."""
    rows = _read_rows(spec)
    overlays: list[OverlayLine] = []

    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()

        if spec.figure_kind == "rate_function":
            for (p0, t), curve in _groups(rows, "p0", "t"):
                ax.plot(
                    [r["x"] for r in curve],
                    [r["f"] for r in curve],
                    label=f"p0={_fmt(p0)}, t={_fmt(t)}",
                )
            ax.set_xlabel("x")
            ax.set_ylabel("rate function")

        elif spec.figure_kind == "entropy_t":
            for (n,), curve in _groups(rows, "N"):
                ax.plot(
                    [r["t"] for r in curve],
                    [r["S_L"] for r in curve],
                    label=f"N={_fmt(n)}",
                )
            ax.set_xlabel("t")
            ax.set_ylabel("linear entropy")

        elif spec.figure_kind == "entropy_N":
            for (t,), curve in _groups(rows, "t"):
                xs = [r["N"] for r in curve]
                ax.plot(xs, [r["S_L"] for r in curve], label=f"t={_fmt(t)}")
                overlay = _overlay_from_fit(
                    ax, xs, curve[0]["fit_a"], curve[0]["fit_b"],
                    f"fit t={_fmt(t)}: b={curve[0]['fit_b']:.2f}",
                )
                if overlay:
                    overlays.append(overlay)
            ax.set_xlabel("N")
            ax.set_ylabel("linear entropy")

        elif spec.figure_kind == "infidelity_N":
            for (t,), curve in _groups(rows, "t"):
                xs = [r["N"] for r in curve]
                ax.plot(xs, [r["I"] for r in curve], label=f"t={_fmt(t)}")
                limit = curve[0]["I_limit"]
                ax.axhline(
                    limit, linestyle="--", color="black", alpha=0.7,
                    label=f"limit t={_fmt(t)}",
                )
                overlays.append(
                    OverlayLine(
                        label=f"limit t={_fmt(t)}",
                        x=(xs[0], xs[-1]),
                        y=(limit, limit),
                    )
                )
            ax.set_xlabel("N")
            ax.set_ylabel("mean-field infidelity")

        elif spec.figure_kind == "convergence":
            for (t,), curve in _groups(rows, "t"):
                xs = [r["N"] for r in curve]
                ax.plot(xs, [r["epsilon"] for r in curve], label=f"t={_fmt(t)}")
                overlay = _overlay_from_fit(
                    ax, xs, curve[0]["fit_a"], curve[0]["fit_b"],
                    f"fit t={_fmt(t)}: b={curve[0]['fit_b']:.2f}",
                )
                if overlay:
                    overlays.append(overlay)
            ax.set_xlabel("N")
            ax.set_ylabel("infidelity to the large-N limit")

        if spec.logx:
            ax.set_xscale("log")
        if spec.logy:
            ax.set_yscale("log")
        ax.legend(loc="best")
        fig.tight_layout()
    return fig, overlays


def _save_deterministic(fig, path: Path) -> None:
    """Write the figure without timestamps so reruns are byte-identical."""
    suffix = path.suffix.lower()
    metadata = None
    if suffix == ".pdf":
        metadata = {"CreationDate": None}
    elif suffix == ".svg":
        metadata = {"Date": None}
    fig.savefig(path, metadata=metadata)


def render(spec: FigureSpec) -> Path:
    """Render one figure and write it to the spec's output path."""
    fig, _ = build_figure(spec)
    try:
        spec.output_path.parent.mkdir(parents=True, exist_ok=True)
        _save_deterministic(fig, spec.output_path)
    finally:
        plt.close(fig)
    return spec.output_path
