"""Comparison artifacts: CSV + JSON tables and hand-built SVG charts.

SVGs are assembled from plain strings on a fixed 800x500 canvas with
embedded value labels, so rerunning on identical input reproduces the
files byte for byte (no plotting library, no timestamps).
"""

from __future__ import annotations

import json
import os

from .evaluation import ComparisonReport

CANVAS_W = 800
CANVAS_H = 500
MARGIN_LEFT = 90
MARGIN_RIGHT = 30
MARGIN_TOP = 60
MARGIN_BOTTOM = 70

BAR_FILL = "#4878a8"
ACCENT = "#333333"

COMPARISON_CSV_HEADER = "architecture,r2,mae,rmse,huber,epochs,params"

METRIC_CHARTS = (
    ("r2", "Coefficient of determination (scaled space)"),
    ("mae", "Mean absolute error (scaled space)"),
    ("rmse", "Root mean squared error (scaled space)"),
    ("huber", "Huber loss (scaled space)"),
)


def _fmt(value: float) -> str:
    return f"{value:.4f}"


def _svg_header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_W}" height="{CANVAS_H}" '
        f'viewBox="0 0 {CANVAS_W} {CANVAS_H}">',
        f'<rect width="{CANVAS_W}" height="{CANVAS_H}" fill="#ffffff"/>',
        f'<text x="{CANVAS_W // 2}" y="30" text-anchor="middle" '
        f'font-family="sans-serif" font-size="18" fill="{ACCENT}">{title}</text>',
    ]


def render_bar_chart(labels: list[str], values: list[float], title: str) -> str:
    plot_w = CANVAS_W - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = CANVAS_H - MARGIN_TOP - MARGIN_BOTTOM
    v_max = max(max(values), 0.0)
    v_min = min(min(values), 0.0)
    span = v_max - v_min or 1.0
    zero_y = MARGIN_TOP + plot_h * (v_max / span)
    slot = plot_w / len(values)
    bar_w = slot * 0.6

    parts = _svg_header(title)
    parts.append(
        f'<line x1="{MARGIN_LEFT}" y1="{zero_y:.2f}" x2="{CANVAS_W - MARGIN_RIGHT}" '
        f'y2="{zero_y:.2f}" stroke="{ACCENT}" stroke-width="1"/>'
    )
    for i, (label, value) in enumerate(zip(labels, values)):
        x = MARGIN_LEFT + slot * i + (slot - bar_w) / 2
        height = abs(value) / span * plot_h
        y = zero_y - height if value >= 0 else zero_y
        parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" height="{height:.2f}" '
            f'fill="{BAR_FILL}"/>'
        )
        label_y = y - 6 if value >= 0 else y + height + 16
        parts.append(
            f'<text x="{x + bar_w / 2:.2f}" y="{label_y:.2f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13" fill="{ACCENT}">{_fmt(value)}</text>'
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.2f}" y="{CANVAS_H - MARGIN_BOTTOM + 24}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="14" '
            f'fill="{ACCENT}">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_scatter_chart(
    points: list[tuple[str, float, float]], title: str, x_label: str, y_label: str
) -> str:
    plot_w = CANVAS_W - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = CANVAS_H - MARGIN_TOP - MARGIN_BOTTOM
    xs = [p[1] for p in points]
    ys = [p[2] for p in points]
    x_min, x_max = min(xs), max(xs)
    y_min, y_max = min(ys), max(ys)
    x_span = (x_max - x_min) or 1.0
    y_span = (y_max - y_min) or 1.0
    # breathing room so extreme points do not sit on the frame
    x_min, x_span = x_min - 0.1 * x_span, x_span * 1.2
    y_min, y_span = y_min - 0.1 * y_span, y_span * 1.2

    parts = _svg_header(title)
    parts.append(
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="{ACCENT}" stroke-width="1"/>'
    )
    parts.append(
        f'<text x="{MARGIN_LEFT + plot_w / 2:.2f}" y="{CANVAS_H - 16}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14" fill="{ACCENT}">{x_label}</text>'
    )
    parts.append(
        f'<text x="24" y="{MARGIN_TOP + plot_h / 2:.2f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14" fill="{ACCENT}" '
        f'transform="rotate(-90 24 {MARGIN_TOP + plot_h / 2:.2f})">{y_label}</text>'
    )
    for name, x_val, y_val in points:
        px = MARGIN_LEFT + (x_val - x_min) / x_span * plot_w
        py = MARGIN_TOP + plot_h - (y_val - y_min) / y_span * plot_h
        parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="6" fill="{BAR_FILL}"/>')
        parts.append(
            f'<text x="{px:.2f}" y="{py - 12:.2f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13" fill="{ACCENT}">'
            f'{name} ({x_val:.0f}, {_fmt(y_val)})</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def comparison_csv(cr: ComparisonReport) -> str:
    lines = [COMPARISON_CSV_HEADER]
    for r in cr.reports:
        lines.append(
            f"{r.architecture},{r.scaled.r2!r},{r.scaled.mae!r},{r.scaled.rmse!r},"
            f"{r.scaled.huber!r},{r.epochs_to_converge},{r.parameter_count}"
        )
    return "\n".join(lines) + "\n"


def ranking_table(cr: ComparisonReport) -> str:
    header = f"{'rank':<5}{'architecture':<14}{'r2':>10}{'mae':>10}{'rmse':>10}{'huber':>10}{'epochs':>8}{'params':>9}"
    lines = [header, "-" * len(header)]
    for i, r in enumerate(cr.reports, start=1):
        lines.append(
            f"{i:<5}{r.architecture:<14}{r.scaled.r2:>10.4f}{r.scaled.mae:>10.4f}"
            f"{r.scaled.rmse:>10.4f}{r.scaled.huber:>10.4f}"
            f"{r.epochs_to_converge:>8}{r.parameter_count:>9}"
        )
    return "\n".join(lines)


def render_report(cr: ComparisonReport, out_dir) -> list[str]:
    """Write comparison.csv/json plus four bar charts and one trade-off scatter."""
    if not cr.reports:
        raise ValueError("refusing to render an empty comparison report")
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def emit(name: str, content: str):
        path = os.path.join(out_dir, name)
        with open(path, "w") as fp:
            fp.write(content)
        written.append(path)

    emit("comparison.csv", comparison_csv(cr))
    emit("comparison.json", json.dumps(cr.as_dict(), separators=(",", ":")) + "\n")

    labels = [r.architecture for r in cr.reports]
    for metric, title in METRIC_CHARTS:
        values = [getattr(r.scaled, metric) for r in cr.reports]
        emit(f"{metric}.svg", render_bar_chart(labels, values, title))
    points = [(a, float(e), r2) for a, r2, e in cr.tradeoff()]
    emit(
        "r2_vs_epochs.svg",
        render_scatter_chart(
            points,
            "Prediction performance vs training efficiency",
            "epochs to converge",
            "r2 (scaled space)",
        ),
    )
    return written
