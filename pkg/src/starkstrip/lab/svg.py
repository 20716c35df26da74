"""Minimal deterministic SVG plots: scatter and line with optional log axes.

No plotting dependency; figures are simple XML written with fixed float
formatting so identical data produces identical bytes.
"""

from __future__ import annotations

import math

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 36, 55
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _ticks(lo: float, hi: float, n: int = 6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * abs(step):
        out.append(0.0 if abs(t) < 1e-12 * abs(step) else t)
        t += step
    return out


class _Axis:
    def __init__(self, lo, hi, log):
        self.log = log
        if log:
            lo, hi = math.log10(lo), math.log10(hi)
        pad = 0.05 * (hi - lo) if hi > lo else 0.5
        self.lo, self.hi = lo - pad, hi + pad

    def unit(self, v):
        v = math.log10(v) if self.log else v
        return (v - self.lo) / (self.hi - self.lo)

    def tick_values(self):
        if not self.log:
            return [(t, _fmt(t)) for t in _ticks(self.lo, self.hi)]
        out = []
        for e in range(math.floor(self.lo), math.ceil(self.hi) + 1):
            if self.lo <= e <= self.hi:
                out.append((10.0 ** e, f"1e{e}"))
        if len(out) < 2:
            out = [(10.0 ** t, f"1e{_fmt(t)}") for t in _ticks(self.lo, self.hi, 5)]
        return out


def xy_plot(path, series, *, xlabel="", ylabel="", title="", logx=False, logy=False):
    """Write an SVG figure of the given series.

    ``series`` is a list of dicts with keys x, y (sequences), label, and
    kind ("line" or "scatter"). Log axes drop non-positive values.
    """
    cleaned = []
    for k, s in enumerate(series):
        xs, ys = [], []
        for x, y in zip(s["x"], s["y"]):
            if (logx and x <= 0) or (logy and y <= 0):
                continue
            if math.isfinite(x) and math.isfinite(y):
                xs.append(float(x))
                ys.append(float(y))
        if xs:
            cleaned.append({
                "x": xs, "y": ys,
                "label": s.get("label", f"series {k}"),
                "kind": s.get("kind", "line"),
                "color": _COLORS[k % len(_COLORS)],
            })
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    if not cleaned:
        parts.append(f'<text x="{_W/2}" y="{_H/2}" text-anchor="middle">no plottable data</text></svg>')
        _write(path, parts)
        return
    ax = _Axis(min(min(s["x"]) for s in cleaned), max(max(s["x"]) for s in cleaned), logx)
    ay = _Axis(min(min(s["y"]) for s in cleaned), max(max(s["y"]) for s in cleaned), logy)
    px = lambda v: _ML + ax.unit(v) * (_W - _ML - _MR)
    py = lambda v: _H - _MB - ay.unit(v) * (_H - _MT - _MB)

    parts.append(
        f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" height="{_H-_MT-_MB}" '
        'fill="none" stroke="black"/>'
    )
    if title:
        parts.append(f'<text x="{_W/2}" y="20" text-anchor="middle">{title}</text>')
    for v, lab in ax.tick_values():
        x = px(v)
        parts.append(f'<line x1="{_fmt(x)}" y1="{_H-_MB}" x2="{_fmt(x)}" y2="{_H-_MB+5}" stroke="black"/>')
        parts.append(f'<text x="{_fmt(x)}" y="{_H-_MB+18}" text-anchor="middle">{lab}</text>')
    for v, lab in ay.tick_values():
        y = py(v)
        parts.append(f'<line x1="{_ML-5}" y1="{_fmt(y)}" x2="{_ML}" y2="{_fmt(y)}" stroke="black"/>')
        parts.append(f'<text x="{_ML-8}" y="{_fmt(y+4)}" text-anchor="end">{lab}</text>')
    parts.append(f'<text x="{_W/2}" y="{_H-12}" text-anchor="middle">{xlabel}</text>')
    parts.append(
        f'<text x="16" y="{_H/2}" text-anchor="middle" transform="rotate(-90 16 {_H/2})">{ylabel}</text>'
    )
    for k, s in enumerate(cleaned):
        pts = [(px(x), py(y)) for x, y in zip(s["x"], s["y"])]
        if s["kind"] == "line":
            d = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
            parts.append(f'<polyline points="{d}" fill="none" stroke="{s["color"]}" stroke-width="1.5"/>')
        else:
            for x, y in pts:
                parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3" fill="{s["color"]}"/>')
        parts.append(
            f'<text x="{_W-_MR-8}" y="{_MT+16+14*k}" text-anchor="end" fill="{s["color"]}">{s["label"]}</text>'
        )
    parts.append("</svg>")
    _write(path, parts)


def _write(path, parts):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
