"""Static SVG figures from CSV artifacts.

Pure text generation on a fixed 640x480 canvas: re-rendering the same
CSV yields byte-identical output, and the source data is embedded as an
SVG comment for provenance.
"""

from __future__ import annotations

import os

__all__ = ["render_ecdf_overlay", "render_density", "render_profile", "render_artifact_dir"]

_W, _H = 640, 480
_MARGIN = 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c")


def _fmt(x: float) -> str:
    return "%.6g" % x


def _scale(points, lo, hi, out_lo, out_hi):
    span = hi - lo if hi > lo else 1.0
    return [(out_lo + (p - lo) / span * (out_hi - out_lo)) for p in points]


def _polyline(xs, ys, color):
    pts = " ".join("%s,%s" % (_fmt(x), _fmt(y)) for x, y in zip(xs, ys))
    return '<polyline fill="none" stroke="%s" stroke-width="1.5" points="%s"/>' % (color, pts)


def _frame(title: str):
    return [
        '<rect x="%d" y="%d" width="%d" height="%d" fill="none" stroke="#333"/>' % (
            _MARGIN, _MARGIN, _W - 2 * _MARGIN, _H - 2 * _MARGIN,
        ),
        '<text x="%d" y="%d" font-family="monospace" font-size="13">%s</text>' % (
            _MARGIN, _MARGIN - 12, title,
        ),
    ]


def _document(body, data_comment: str) -> str:
    head = '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d">' % (_W, _H)
    comment = "<!-- data:\n%s\n-->" % data_comment
    return "\n".join([head, comment] + body + ["</svg>"]) + "\n"


def _read_csv(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) < 2:
        raise ValueError("CSV %s has no data rows" % path)
    header = lines[0].split(",")
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    cols = list(zip(*rows))
    return header, cols, "\n".join(lines)


def _series_window(series):
    flat = [v for s in series for v in s]
    return min(flat), max(flat)


def render_ecdf_overlay(csv_paths, out_path, title="ecdf overlay") -> None:
    """Step-function overlay of value,ecdf CSV files."""
    body = _frame(title)
    datas = []
    xs_all, ys_all = [], []
    for path in csv_paths:
        _, cols, raw = _read_csv(path)
        datas.append("%s\n%s" % (path, raw))
        xs_all.append(cols[0])
        ys_all.append(cols[1])
    xlo, xhi = _series_window(xs_all)
    for k, (xs, ys) in enumerate(zip(xs_all, ys_all)):
        px = _scale(xs, xlo, xhi, _MARGIN, _W - _MARGIN)
        py = _scale(ys, 0.0, 1.0, _H - _MARGIN, _MARGIN)
        body.append(_polyline(px, py, _COLORS[k % len(_COLORS)]))
        body.append(
            '<text x="%d" y="%d" font-family="monospace" font-size="11" fill="%s">%s</text>'
            % (_W - _MARGIN - 220, _MARGIN + 16 + 14 * k, _COLORS[k % len(_COLORS)], os.path.basename(csv_paths[k]))
        )
    with open(out_path, "w") as fh:
        fh.write(_document(body, "\n".join(datas)))


def render_density(csv_path, out_path, title="equilibrium density") -> None:
    """Polyline of the x,rho columns of a measure CSV."""
    _, cols, raw = _read_csv(csv_path)
    xs, ys = list(cols[0]), list(cols[1])
    body = _frame(title)
    ylo, yhi = 0.0, max(ys) * 1.05 if max(ys) > 0 else 1.0
    px = _scale(xs, min(xs), max(xs), _MARGIN, _W - _MARGIN)
    py = _scale(ys, ylo, yhi, _H - _MARGIN, _MARGIN)
    body.append(_polyline(px, py, _COLORS[0]))
    with open(out_path, "w") as fh:
        fh.write(_document(body, raw))


def render_profile(csv_path, out_path, title="rigidity profile") -> None:
    """One polyline per quantile column of an index,q...,q... CSV."""
    header, cols, raw = _read_csv(csv_path)
    xs = list(cols[0])
    body = _frame(title)
    ylo, yhi = 0.0, max(max(c) for c in cols[1:]) * 1.05
    px = _scale(xs, min(xs), max(xs), _MARGIN, _W - _MARGIN)
    for k, col in enumerate(cols[1:]):
        py = _scale(list(col), ylo, yhi, _H - _MARGIN, _MARGIN)
        body.append(_polyline(px, py, _COLORS[k % len(_COLORS)]))
        body.append(
            '<text x="%d" y="%d" font-family="monospace" font-size="11" fill="%s">%s</text>'
            % (_W - _MARGIN - 120, _MARGIN + 16 + 14 * k, _COLORS[k % len(_COLORS)], header[k + 1])
        )
    with open(out_path, "w") as fh:
        fh.write(_document(body, raw))


def render_artifact_dir(artifact_dir) -> list:
    """Render every known CSV in a directory; returns the SVG paths."""
    made = []
    for name in sorted(os.listdir(artifact_dir)):
        path = os.path.join(artifact_dir, name)
        if not name.endswith(".csv"):
            continue
        with open(path) as fh:
            header = fh.readline().strip()
        out = path[:-4] + ".svg"
        if header.startswith("value,ecdf"):
            render_ecdf_overlay([path], out, title=name)
        elif header.startswith("x,rho"):
            render_density(path, out, title=name)
        elif header.startswith("index,"):
            render_profile(path, out, title=name)
        else:
            continue
        made.append(out)
    return made
