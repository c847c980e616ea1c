"""
report

Templated human-readable outputs: the selection summary, the catalog graph and minimal SVG
plots for external viewing. All geometry is computed here; the templates only lay it out.

Classes:
    - ReportRenderer: Renders the jinja2 templates shipped in growth_isrp/templates.

Dependencies:
    - jinja2: template rendering.

Example Usage:
    from growth_isrp.report import ReportRenderer

    renderer = ReportRenderer()
    text = renderer.selection_text(report)
    dot = renderer.catalog_dot(catalog(include_all=True))
"""
import math
from typing import Any, Mapping, Sequence

import numpy as np
from jinja2 import Environment, PackageLoader, StrictUndefined

from growth_isrp.errors import DataError
from growth_isrp.model_types import CatalogEntry, FloatArray, ReplicationSummary, SelectionReport, StageFit

WIDTH, HEIGHT, MARGIN = 640, 400, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


class _Axis:
    def __init__(self, lo: float, hi: float, start: float, length: float, flip: bool = False):
        if not math.isfinite(lo) or not math.isfinite(hi):
            raise DataError("cannot plot non-finite values")
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        self.lo, self.hi, self.start, self.length, self.flip = lo, hi, start, length, flip

    def __call__(self, v: float) -> float:
        frac = (v - self.lo) / (self.hi - self.lo)
        return round(self.start + (1.0 - frac if self.flip else frac) * self.length, 2)

    def ticks(self, count: int = 5) -> list[tuple[float, str]]:
        return [(self(v), f"{v:.4g}") for v in np.linspace(self.lo, self.hi, count)]


def _axes(xs: Sequence[float], ys: Sequence[float]) -> tuple[_Axis, _Axis]:
    return (
        _Axis(min(xs), max(xs), MARGIN, WIDTH - 2 * MARGIN),
        _Axis(min(ys), max(ys), MARGIN, HEIGHT - 2 * MARGIN, flip=True),
    )


class ReportRenderer:
    """
    Renders report templates.

    Attributes:
        env (Environment): jinja2 environment bound to the package templates.

    Methods:
        - selection_text: Two-stage selection summary.
        - catalog_dot: Parent-to-row graph in DOT.
        - line_plot_svg: Polylines of one or more series.
        - box_plot_svg: Per-interval box plots of replicated estimates.
    """

    def __init__(self) -> None:
        self.env = Environment(
            loader=PackageLoader("growth_isrp", "templates"),
            undefined=StrictUndefined,
            keep_trailing_newline=True,
            trim_blocks=True,
            lstrip_blocks=True,
        )

    def _render(self, name: str, context: Mapping[str, Any]) -> str:
        return self.env.get_template(name).render(context)

    @staticmethod
    def _stage_rows(stage: Sequence[StageFit]) -> list[dict[str, Any]]:
        rows: list[dict[str, Any]] = []
        for rank, entry in enumerate(stage, start=1):
            result = entry["result"]
            if result is None:
                rows.append({"rank": rank, "label": entry["label"], "failed": True, "status": entry["status"]})
                continue
            estimates = ", ".join(
                f"{name}={result['estimates'][name]:.6g} (se {result['stderr'][name]:.3g})"  # type: ignore[literal-required]
                for name in result["free"]
            )
            rows.append({
                "rank": rank,
                "label": entry["label"],
                "failed": False,
                "estimates": estimates,
                "rmse": f"{result['rmse']:.6g}",
                "aic": f"{result['aic']:.4f}",
                "delta": f"{entry['delta_aic']:.2f}" if entry["delta_aic"] is not None else "",
                "converged": result["converged"],
            })
        return rows

    def selection_text(self, report: SelectionReport) -> str:
        """
        Text summary with one table per stage, best candidate first.

        Parameters:
            report (SelectionReport): Output of select_model.

        Returns:
            str: The summary.
        """
        return self._render("selection_report.txt.jinja", {
            "parent": report["parent"],
            "isrp_rows": self._stage_rows(report["isrp_stage"]),
            "model_rows": self._stage_rows(report["model_stage"]),
            "chosen": report["chosen"],
            "strength": report["strength"],
            "no_variation": report["no_variation"],
            "narrative": report["narrative"],
        })

    def catalog_dot(self, entries: Sequence[CatalogEntry]) -> str:
        parents = sorted({e["parent"] for e in entries})
        return self._render("catalog.dot.jinja", {
            "parents": parents,
            "entries": [
                {**e, "node": f"{e['parent']}__{e['variation']}"} for e in entries
            ],
        })

    def line_plot_svg(self, series: Mapping[str, tuple[Sequence[float] | FloatArray, Sequence[float] | FloatArray]],
                      title: str, xlabel: str = "t", ylabel: str = "X") -> str:
        """
        Polylines of named (t, y) series on shared axes; non-finite points are dropped.

        Raises:
            DataError: If no finite point is left.
        """
        cleaned = {
            name: [(float(t), float(y)) for t, y in zip(ts, ys) if math.isfinite(t) and math.isfinite(y)]
            for name, (ts, ys) in series.items()
        }
        points = [p for pts in cleaned.values() for p in pts]
        if not points:
            raise DataError("nothing to plot")
        x, y = _axes([p[0] for p in points], [p[1] for p in points])
        lines = [
            {
                "name": name,
                "color": PALETTE[i % len(PALETTE)],
                "points": " ".join(f"{x(t)},{y(v)}" for t, v in pts),
                "legend_y": MARGIN + 16 * i,
            }
            for i, (name, pts) in enumerate(cleaned.items())
        ]
        return self._render("line_plot.svg.jinja", {
            "width": WIDTH, "height": HEIGHT, "margin": MARGIN, "title": title,
            "xlabel": xlabel, "ylabel": ylabel, "lines": lines, "xticks": x.ticks(), "yticks": y.ticks(),
        })

    def box_plot_svg(self, summaries: Sequence[ReplicationSummary], title: str, ylabel: str = "estimate") -> str:
        """Box (quartiles), whiskers (2.5% and 97.5%) and median per interval."""
        usable = [s for s in summaries if s["count"] > 0]
        if not usable:
            raise DataError("no interval has estimates to plot")
        x = _Axis(0.5, len(summaries) + 0.5, MARGIN, WIDTH - 2 * MARGIN)
        y = _Axis(min(s["q025"] for s in usable), max(s["q975"] for s in usable), MARGIN,
                  HEIGHT - 2 * MARGIN, flip=True)
        half = 0.35 * (WIDTH - 2 * MARGIN) / max(len(summaries), 1)
        boxes = [
            {
                "j": s["j"], "cx": x(s["j"]), "left": round(x(s["j"]) - half, 2), "width": round(2 * half, 2),
                "low": y(s["q025"]), "q25": y(s["q25"]), "median": y(s["q50"]), "q75": y(s["q75"]),
                "high": y(s["q975"]),
            }
            for s in usable
        ]
        return self._render("box_plot.svg.jinja", {
            "width": WIDTH, "height": HEIGHT, "margin": MARGIN, "title": title, "ylabel": ylabel,
            "boxes": boxes, "yticks": y.ticks(),
        })
