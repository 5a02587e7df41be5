"""Summary tables and convergence plots for collections of run records."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from .pipeline import NAIVE, RunRecord, summarize

SUMMARY_COLUMNS = (
    ("Method", "method"),
    ("Instance", "instance"),
    ("Trials", "trials"),
    ("FS rate", "fs_rate"),
    ("Avg. BKS gap", "avg_gap"),
    ("Min. BKS gap", "min_gap"),
    ("SA time", "sa_time"),
    ("N_variables", "n_variables"),
    ("VR rate", "vr_rate"),
)

_METHOD_ORDER = {NAIVE: 0, "DBD": 1, "ABD": 2}
_COLOURS = {NAIVE: "#7f7f7f", "DBD": "#1f77b4", "ABD": "#d62728"}


def load_records(run_dir):
    """Every run record JSON below ``run_dir``; other JSON files are skipped."""
    records = []
    for path in sorted(Path(run_dir).rglob("*.json")):
        text = path.read_text()
        if '"fs_flag"' not in text:
            continue
        records.append(RunRecord.from_json(text))
    return records


def _cell(key, row):
    v = row[key]
    if key == "method":
        return "Naive method" if v == NAIVE else v
    if key in ("fs_rate", "vr_rate"):
        return f"{v:.2f}%" if key == "vr_rate" else f"{v:.0f}%"
    if key in ("avg_gap", "min_gap"):
        return "-" if v is None else f"{v:.2f}%"
    if key == "sa_time":
        return "-" if row["method"] == NAIVE else f"{v:.2f}s"
    if key == "n_variables":
        return f"{v:,}"
    return str(v)


def ordered_rows(records):
    rows = summarize(records)
    rows.sort(key=lambda r: (_METHOD_ORDER.get(r["method"], 9), r["instance"]))
    return rows


def summary_table(records):
    """Plain-text summary in the column order of the results tables."""
    rows = ordered_rows(records)
    header = [h for h, _ in SUMMARY_COLUMNS]
    body = [[_cell(k, r) for _, k in SUMMARY_COLUMNS] for r in rows]
    widths = [max(len(x) for x in col) for col in zip(header, *body)]
    line = "  ".join(h.ljust(w) for h, w in zip(header, widths))
    out = [line, "-" * len(line)]
    out += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in body]
    return "\n".join(out) + "\n"


def summary_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([k for _, k in SUMMARY_COLUMNS])
    for r in ordered_rows(records):
        w.writerow(["" if r[k] is None else r[k] for _, k in SUMMARY_COLUMNS])
    return buf.getvalue()


def convergence_svg(records, title="", width=640, height=400):
    """Line plot of every trial's curve; time on a log axis.

    The y axis shows the BKS gap when every record knows its best-known
    value and the raw objective otherwise.
    """
    curves = [(r.method, r.curve()) for r in records if r.incumbents]
    use_gap = bool(curves) and all(r.bks for r in records if r.incumbents)
    left, right, top, bottom = 70, 20, 30, 50
    pw, ph = width - left - right, height - top - bottom
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="18" text-anchor="middle" font-size="13">{_esc(title)}</text>',
    ]
    if not curves:
        parts.append(f'<text x="{width / 2}" y="{height / 2}" text-anchor="middle">no feasible runs</text>')
        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    def yval(p):
        return p.gap_pct if use_gap else p.objective

    ts = [max(p.wall_time, 1e-3) for _, c in curves for p in c]
    ys = [yval(p) for _, c in curves for p in c]
    t_lo, t_hi = math.log10(min(ts)), math.log10(max(ts))
    if t_hi - t_lo < 1e-9:
        t_lo, t_hi = t_lo - 0.5, t_hi + 0.5
    y_lo, y_hi = min(ys), max(ys)
    if y_hi - y_lo < 1e-9:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0

    def sx(t):
        return left + (math.log10(max(t, 1e-3)) - t_lo) / (t_hi - t_lo) * pw

    def sy(y):
        return top + (y_hi - y) / (y_hi - y_lo) * ph

    parts.append(
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>'
    )
    for e in range(math.floor(t_lo), math.ceil(t_hi) + 1):
        if t_lo - 1e-9 <= e <= t_hi + 1e-9:
            x = sx(10.0**e)
            parts.append(f'<line x1="{x:.1f}" y1="{top + ph}" x2="{x:.1f}" y2="{top + ph + 4}" stroke="black"/>')
            parts.append(f'<text x="{x:.1f}" y="{top + ph + 16}" text-anchor="middle">{10.0**e:g}</text>')
    for i in range(5):
        y = y_lo + (y_hi - y_lo) * i / 4
        py = sy(y)
        label = f"{y:.1f}%" if use_gap else f"{y:.0f}"
        parts.append(f'<line x1="{left - 4}" y1="{py:.1f}" x2="{left}" y2="{py:.1f}" stroke="black"/>')
        parts.append(f'<text x="{left - 6}" y="{py + 4:.1f}" text-anchor="end">{label}</text>')
    parts.append(
        f'<text x="{left + pw / 2}" y="{height - 12}" text-anchor="middle">wall-clock time [s, log scale]</text>'
    )
    ylabel = "BKS gap [%]" if use_gap else "objective"
    parts.append(
        f'<text x="14" y="{top + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {top + ph / 2})">{ylabel}</text>'
    )
    for method, curve in curves:
        # step plot: the objective holds until the next improvement
        pts = []
        for a, b in zip(curve, curve[1:] + [None]):
            pts.append((sx(a.wall_time), sy(yval(a))))
            if b is not None:
                pts.append((sx(b.wall_time), sy(yval(a))))
        colour = _COLOURS.get(method, "black")
        coords = " ".join(f"{x:.1f},{y:.1f}" for x, y in pts)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{colour}" stroke-opacity="0.7"/>'
        )
    methods = sorted({m for m, _ in curves}, key=lambda m: _METHOD_ORDER.get(m, 9))
    for i, method in enumerate(methods):
        y = top + 14 + 14 * i
        colour = _COLOURS.get(method, "black")
        parts.append(f'<line x1="{left + pw - 80}" y1="{y - 4}" x2="{left + pw - 60}" y2="{y - 4}" stroke="{colour}"/>')
        parts.append(f'<text x="{left + pw - 55}" y="{y}">{_esc(method)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(text):
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
