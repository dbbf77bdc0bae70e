"""Minimal deterministic SVG renderers for line plots and heatmaps."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=40, bottom=55)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"]

# viridis anchors; intermediate colours are linear blends
_CMAP = np.array([
    [68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37],
], dtype=np.float64)


def _num(v: float) -> str:
    return f"{v:.6g}"


def _color(frac: float) -> str:
    frac = min(max(frac, 0.0), 1.0) if np.isfinite(frac) else 0.0
    pos = frac * (len(_CMAP) - 1)
    i = min(int(pos), len(_CMAP) - 2)
    rgb = _CMAP[i] + (pos - i) * (_CMAP[i + 1] - _CMAP[i])
    return "#%02x%02x%02x" % tuple(int(round(c)) for c in rgb)


def _limits(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        return 0.0, 1.0
    lo, hi = float(arr.min()), float(arr.max())
    if hi == lo:
        pad = abs(lo) * 0.1 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def _frame(title: str, xlabel: str, ylabel: str, xlim, ylim) -> list[str]:
    L, R, T, B = MARGIN["left"], WIDTH - MARGIN["right"], MARGIN["top"], HEIGHT - MARGIN["bottom"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{L}" y="{T}" width="{R - L}" height="{B - T}" fill="none" stroke="black"/>',
        f'<text x="{(L + R) / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="16" y="{(T + B) / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(T + B) / 2})">{escape(ylabel)}</text>',
    ]
    for v in _ticks(*xlim):
        x = L + (v - xlim[0]) / (xlim[1] - xlim[0]) * (R - L)
        out.append(f'<line x1="{x:.2f}" y1="{B}" x2="{x:.2f}" y2="{B + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{B + 18}" text-anchor="middle">{_num(v)}</text>')
    for v in _ticks(*ylim):
        y = B - (v - ylim[0]) / (ylim[1] - ylim[0]) * (B - T)
        out.append(f'<line x1="{L - 5}" y1="{y:.2f}" x2="{L}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{L - 8}" y="{y + 4:.2f}" text-anchor="end">{_num(v)}</text>')
    return out


def line_plot(x, series: dict[str, np.ndarray], title: str = "", xlabel: str = "t",
              ylabel: str = "") -> str:
    x = np.asarray(x, dtype=np.float64)
    xlim = _limits(x)
    ylim = _limits(np.concatenate([np.asarray(v, dtype=np.float64).ravel() for v in series.values()]))
    out = _frame(title, xlabel, ylabel, xlim, ylim)
    L, R, T, B = MARGIN["left"], WIDTH - MARGIN["right"], MARGIN["top"], HEIGHT - MARGIN["bottom"]
    for k, (name, y) in enumerate(series.items()):
        y = np.asarray(y, dtype=np.float64)
        px = L + (x - xlim[0]) / (xlim[1] - xlim[0]) * (R - L)
        py = B - (y - ylim[0]) / (ylim[1] - ylim[0]) * (B - T)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        color = PALETTE[k % len(PALETTE)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(
            f'<text x="{R - 8}" y="{T + 16 + 14 * k}" text-anchor="end" fill="{color}">{escape(name)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def heatmap(matrix, x_values, y_values, title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """Rows of ``matrix`` follow ``y_values`` (bottom to top), columns ``x_values``."""
    Z = np.asarray(matrix, dtype=np.float64)
    xs = np.asarray(x_values, dtype=np.float64)
    ys = np.asarray(y_values, dtype=np.float64)
    if Z.shape != (ys.size, xs.size):
        raise ValueError(f"matrix shape {Z.shape} does not match axes ({ys.size}, {xs.size})")
    L, R, T, B = MARGIN["left"], WIDTH - MARGIN["right"] - 60, MARGIN["top"], HEIGHT - MARGIN["bottom"]
    zlo, zhi = _limits(Z)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{(L + R) / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="16" y="{(T + B) / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(T + B) / 2})">{escape(ylabel)}</text>',
    ]
    cw = (R - L) / xs.size
    ch = (B - T) / ys.size
    for i in range(ys.size):
        for j in range(xs.size):
            frac = (Z[i, j] - zlo) / (zhi - zlo)
            out.append(
                f'<rect x="{L + j * cw:.2f}" y="{B - (i + 1) * ch:.2f}" width="{cw:.2f}" '
                f'height="{ch:.2f}" fill="{_color(frac)}"/>'
            )
    step_x = max(1, xs.size // 8)
    for j in range(0, xs.size, step_x):
        out.append(f'<text x="{L + (j + 0.5) * cw:.2f}" y="{B + 18}" text-anchor="middle">{_num(xs[j])}</text>')
    step_y = max(1, ys.size // 8)
    for i in range(0, ys.size, step_y):
        out.append(f'<text x="{L - 8}" y="{B - (i + 0.5) * ch + 4:.2f}" text-anchor="end">{_num(ys[i])}</text>')
    out.append(f'<rect x="{L}" y="{T}" width="{R - L}" height="{B - T}" fill="none" stroke="black"/>')
    # colour bar
    bx = R + 20
    for k in range(50):
        y = B - (k + 1) * (B - T) / 50
        out.append(f'<rect x="{bx}" y="{y:.2f}" width="16" height="{(B - T) / 50 + 0.5:.2f}" fill="{_color(k / 49)}"/>')
    out.append(f'<text x="{bx + 20}" y="{B}" font-size="10">{_num(zlo)}</text>')
    out.append(f'<text x="{bx + 20}" y="{T + 10}" font-size="10">{_num(zhi)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
