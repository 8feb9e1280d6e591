"""Dependency-free SVG line charts with byte-stable output.

Only what the result tables need: line series over a numeric axis, linear
or log vertical scale, legend, ticks. No timestamps or randomness, so a
given table always renders to identical bytes.
"""

from __future__ import annotations

import math

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd",
           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")

WIDTH, HEIGHT = 720, 480
MARGIN = {"left": 64, "right": 24, "top": 40, "bottom": 48}


def _fmt(x):
    return f"{x:.6g}"


def _nice_step(span, target=6):
    if span <= 0:
        return 1.0
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            return mult * mag
    return 10.0 * mag


def _ticks(lo, hi):
    step = _nice_step(hi - lo)
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out or [lo, hi]


def _log_ticks(lo, hi):
    out = []
    e = math.floor(math.log10(lo))
    while 10.0 ** e <= hi * 1.0000001:
        if 10.0 ** e >= lo * 0.9999999:
            out.append(10.0 ** e)
        e += 1
    return out or [lo, hi]


def line_chart(series, title="", xlabel="", ylabel="", logy=False):
    """Render series to an SVG string.

    ``series`` is a list of (label, xs, ys); non-finite ys split the line.
    """
    pts = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys)
           if math.isfinite(x) and math.isfinite(y) and (not logy or y > 0)]
    if not pts:
        raise ValueError("nothing to plot")
    xs_all = [p[0] for p in pts]
    ys_all = [p[1] for p in pts]
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if logy:
        y_lo, y_hi = y_lo / 1.5, y_hi * 1.5
    else:
        pad = 0.05 * (y_hi - y_lo) or max(abs(y_hi), 1.0) * 0.05
        y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return MARGIN["left"] + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y):
        if logy:
            frac = (math.log10(y) - math.log10(y_lo)) \
                / (math.log10(y_hi) - math.log10(y_lo))
        else:
            frac = (y - y_lo) / (y_hi - y_lo)
        return MARGIN["top"] + (1.0 - frac) * plot_h

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
           f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    if title:
        out.append(f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="15">{title}</text>')

    x0, y0 = MARGIN["left"], MARGIN["top"]
    out.append(f'<rect x="{x0}" y="{y0}" width="{plot_w}" height="{plot_h}" '
               'fill="none" stroke="#444"/>')
    for t in _ticks(x_lo, x_hi):
        px = sx(t)
        out.append(f'<line x1="{_fmt(px)}" y1="{y0 + plot_h}" x2="{_fmt(px)}" '
                   f'y2="{y0 + plot_h + 5}" stroke="#444"/>')
        out.append(f'<text x="{_fmt(px)}" y="{y0 + plot_h + 20}" '
                   'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">{_fmt(t)}</text>')
    y_tick_vals = _log_ticks(y_lo, y_hi) if logy else _ticks(y_lo, y_hi)
    for t in y_tick_vals:
        py = sy(t)
        out.append(f'<line x1="{x0 - 5}" y1="{_fmt(py)}" x2="{x0}" '
                   f'y2="{_fmt(py)}" stroke="#444"/>')
        out.append(f'<text x="{x0 - 8}" y="{_fmt(py + 4)}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>')
        out.append(f'<line x1="{x0}" y1="{_fmt(py)}" x2="{x0 + plot_w}" '
                   f'y2="{_fmt(py)}" stroke="#ddd" stroke-dasharray="3,4"/>')
    if xlabel:
        out.append(f'<text x="{x0 + plot_w // 2}" y="{HEIGHT - 10}" '
                   'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="13">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{y0 + plot_h // 2}" text-anchor="middle" '
                   'font-family="sans-serif" font-size="13" '
                   f'transform="rotate(-90 16 {y0 + plot_h // 2})">{ylabel}</text>')

    for idx, (label, xs, ys) in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        segment = []
        chunks = []
        for x, y in zip(xs, ys):
            good = math.isfinite(x) and math.isfinite(y) and (not logy or y > 0)
            if good:
                segment.append(f"{_fmt(sx(x))},{_fmt(sy(y))}")
            elif segment:
                chunks.append(segment)
                segment = []
        if segment:
            chunks.append(segment)
        for chunk in chunks:
            if len(chunk) == 1:
                cx, cy = chunk[0].split(",")
                out.append(f'<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>')
            else:
                out.append(f'<polyline points="{" ".join(chunk)}" fill="none" '
                           f'stroke="{color}" stroke-width="1.8"/>')
        ly = y0 + 14 + 16 * idx
        lx = x0 + plot_w - 170
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" '
                   f'font-size="12">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_chart(path, series, **kw):
    text = line_chart(series, **kw)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path
