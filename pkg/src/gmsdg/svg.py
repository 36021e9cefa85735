"""Minimal static SVG line/scatter plots (axes, ticks, legend, log scales)."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#000000")


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        return [10.0 ** k for k in range(a, b + 1)]
    if hi == lo:
        return [lo]
    raw = (hi - lo) / 5
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    start = math.floor(lo / step) * step
    out, t = [], start
    while t <= hi + 1e-9 * step:
        out.append(round(t, 12))
        t += step
    return out


def _fmt(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-2:
        return f"{v:.0e}"
    return f"{v:g}"


class Panel:
    def __init__(self, title="", xlabel="", ylabel="", logx=False, logy=False):
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.logx, self.logy = logx, logy
        self.series = []

    def add(self, xs, ys, label="", markers=True, line=True):
        pts = [(float(x), float(y)) for x, y in zip(xs, ys)
               if math.isfinite(x) and math.isfinite(y)
               and (not self.logx or x > 0) and (not self.logy or y > 0)]
        self.series.append((pts, label, markers, line))
        return self

    def render(self, x0, y0, w, h) -> list[str]:
        pad_l, pad_r, pad_t, pad_b = 64, 16, 28, 44
        pw, ph = w - pad_l - pad_r, h - pad_t - pad_b
        allpts = [p for s in self.series for p in s[0]]
        out = [f'<text x="{x0 + w / 2:.1f}" y="{y0 + 18:.1f}" text-anchor="middle" '
               f'font-size="13">{escape(self.title)}</text>']
        if not allpts:
            out.append(f'<text x="{x0 + w / 2:.1f}" y="{y0 + h / 2:.1f}" text-anchor="middle">no data</text>')
            return out
        xs = [p[0] for p in allpts]
        ys = [p[1] for p in allpts]
        xlo, xhi = min(xs), max(xs)
        ylo, yhi = min(ys), max(ys)
        if xlo == xhi:
            xlo, xhi = (xlo / 2, xhi * 2) if self.logx else (xlo - 1, xhi + 1)
        if ylo == yhi:
            ylo, yhi = (ylo / 2, yhi * 2) if self.logy else (ylo - 1, yhi + 1)
        xt, yt = _ticks(xlo, xhi, self.logx), _ticks(ylo, yhi, self.logy)
        xlo, xhi = min(xlo, xt[0]), max(xhi, xt[-1])
        ylo, yhi = min(ylo, yt[0]), max(yhi, yt[-1])
        fx = (lambda v: math.log10(v)) if self.logx else (lambda v: v)
        fy = (lambda v: math.log10(v)) if self.logy else (lambda v: v)

        def X(v):
            return x0 + pad_l + (fx(v) - fx(xlo)) / (fx(xhi) - fx(xlo)) * pw

        def Y(v):
            return y0 + pad_t + ph - (fy(v) - fy(ylo)) / (fy(yhi) - fy(ylo)) * ph

        out.append(f'<rect x="{x0 + pad_l:.1f}" y="{y0 + pad_t:.1f}" width="{pw:.1f}" height="{ph:.1f}" '
                   'fill="none" stroke="#000"/>')
        for t in xt:
            out.append(f'<line x1="{X(t):.1f}" y1="{y0 + pad_t + ph:.1f}" x2="{X(t):.1f}" '
                       f'y2="{y0 + pad_t + ph + 4:.1f}" stroke="#000"/>')
            out.append(f'<text x="{X(t):.1f}" y="{y0 + pad_t + ph + 16:.1f}" text-anchor="middle" '
                       f'font-size="10">{_fmt(t)}</text>')
        for t in yt:
            out.append(f'<line x1="{x0 + pad_l - 4:.1f}" y1="{Y(t):.1f}" x2="{x0 + pad_l:.1f}" '
                       f'y2="{Y(t):.1f}" stroke="#000"/>')
            out.append(f'<text x="{x0 + pad_l - 6:.1f}" y="{Y(t) + 3:.1f}" text-anchor="end" '
                       f'font-size="10">{_fmt(t)}</text>')
        out.append(f'<text x="{x0 + pad_l + pw / 2:.1f}" y="{y0 + h - 8:.1f}" text-anchor="middle" '
                   f'font-size="11">{escape(self.xlabel)}</text>')
        out.append(f'<text x="{x0 + 14:.1f}" y="{y0 + pad_t + ph / 2:.1f}" text-anchor="middle" font-size="11" '
                   f'transform="rotate(-90 {x0 + 14:.1f} {y0 + pad_t + ph / 2:.1f})">{escape(self.ylabel)}</text>')
        for k, (pts, label, markers, line) in enumerate(self.series):
            color = PALETTE[k % len(PALETTE)]
            if line and len(pts) > 1:
                path = " ".join(f"{X(x):.2f},{Y(y):.2f}" for x, y in pts)
                out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
            if markers:
                out += [f'<circle cx="{X(x):.2f}" cy="{Y(y):.2f}" r="2.5" fill="{color}"/>' for x, y in pts]
            if label:
                ly = y0 + pad_t + 12 + 13 * k
                out.append(f'<line x1="{x0 + pad_l + pw - 80:.1f}" y1="{ly - 4:.1f}" x2="{x0 + pad_l + pw - 66:.1f}" '
                           f'y2="{ly - 4:.1f}" stroke="{color}" stroke-width="2"/>')
                out.append(f'<text x="{x0 + pad_l + pw - 62:.1f}" y="{ly:.1f}" font-size="10">{escape(label)}</text>')
        return out


def render(panels: list[Panel], width: int = 520, height: int = 360) -> str:
    total_w = width * len(panels)
    body = []
    for k, p in enumerate(panels):
        body += p.render(k * width, 0, width, height)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{height}" '
            f'viewBox="0 0 {total_w} {height}" font-family="sans-serif">\n'
            '<rect width="100%" height="100%" fill="#fff"/>\n' + "\n".join(body) + "\n</svg>\n")
