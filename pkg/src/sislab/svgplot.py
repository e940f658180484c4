"""
Minimal deterministic SVG line plots.

Output depends only on the input numbers: fixed canvas, fixed number
formatting, series drawn in the order given. No timestamps or ids.
"""

import math
from xml.sax.saxutils import escape

import numpy as np

from .errors import ValidationError

__all__ = ["emit_svg", "nice_ticks", "STYLES"]

WIDTH, HEIGHT = 480, 320
MARGIN = dict(left=64, right=96, top=32, bottom=44)

STYLES = {
    "MO": ("#1f77b4", ""),
    "MW": ("#d62728", ""),
    "SO": ("#2ca02c", "6,3"),
    "SW": ("#9467bd", "2,2"),
}
_FALLBACK = (("#444444", ""), ("#ff7f0e", "4,2"), ("#8c564b", "1,2"))


def nice_ticks(lo, hi, target=5):
    """Round-number ticks covering ``[lo, hi]`` (1, 2, 5 times a power of ten)."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValidationError("tick range must be finite")
    if hi < lo:
        lo, hi = hi, lo
    if hi == lo:
        pad = abs(lo) * 0.1 or 1.0
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step + 1e-9)
    stop = math.ceil(hi / step - 1e-9)
    return [round(k * step, 12) for k in range(start, stop + 1)]


def _fmt(v):
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _label(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.0e}"
    return f"{v:.6g}"


def emit_svg(series, title="", xlabel="x", ylabel=""):
    """Render ``{name: (x, y)}`` as one polyline per series.

    Every data point becomes one coordinate pair; nothing is decimated.
    """
    if not series:
        raise ValidationError("nothing to plot")
    data = []
    for name, (x, y) in series.items():
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.size == 0 or x.shape != y.shape:
            raise ValidationError(f"series {name!r} is empty or mismatched")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValidationError(f"series {name!r} has non-finite values")
        data.append((str(name), x, y))
    xt = nice_ticks(min(d[1].min() for d in data), max(d[1].max() for d in data))
    yt = nice_ticks(min(d[2].min() for d in data), max(d[2].max() for d in data))
    x0, x1, y0, y1 = xt[0], xt[-1], yt[0], yt[-1]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def py(v):
        return MARGIN["top"] + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black" stroke-width="1"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:g}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>')
    base = MARGIN["top"] + ph
    for v in xt:
        X = _fmt(px(v))
        out.append(f'<line x1="{X}" y1="{base}" x2="{X}" y2="{base + 4}" stroke="black"/>')
        out.append(f'<text x="{X}" y="{base + 16}" text-anchor="middle">{_label(v)}</text>')
    for v in yt:
        Y = _fmt(py(v))
        out.append(f'<line x1="{MARGIN["left"] - 4}" y1="{Y}" x2="{MARGIN["left"]}" y2="{Y}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{Y}" text-anchor="end" dominant-baseline="middle">'
                   f'{_label(v)}</text>')
    if xlabel:
        out.append(f'<text x="{MARGIN["left"] + pw / 2:g}" y="{HEIGHT - 6}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="14" y="{MARGIN["top"] + ph / 2:g}" text-anchor="middle" '
                   f'transform="rotate(-90 14 {MARGIN["top"] + ph / 2:g})">{escape(ylabel)}</text>')
    for k, (name, x, y) in enumerate(data):
        color, dash = STYLES.get(name, _FALLBACK[k % len(_FALLBACK)])
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline data-series="{escape(name)}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"{dash_attr} points="{pts}"/>')
        ly = MARGIN["top"] + 14 + 16 * k
        lx = WIDTH - MARGIN["right"] + 10
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash_attr}/>')
        out.append(f'<text x="{lx + 22}" y="{ly}" dominant-baseline="middle">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
