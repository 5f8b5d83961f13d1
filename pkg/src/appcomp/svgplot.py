"""Minimal SVG line chart: shaded baseline band plus the searched curve."""
from __future__ import annotations

from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 50


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def training_chart(baseline_curves, search_curve, title: str = "") -> str:
    """Best-so-far KL per epoch; band spans the min/max over baseline runs."""
    base = [[r.best_kl for r in c] for c in baseline_curves]
    prop = [r.best_kl for r in search_curve]
    epochs = max([len(c) for c in base] + [len(prop)])
    values = [v for c in base for v in c] + prop
    y_lo, y_hi = 0.0, max(values) * 1.05 if values else 1.0
    x_hi = max(epochs - 1, 1)
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(e):
        return LEFT + pw * e / x_hi

    def sy(v):
        return TOP + ph * (1 - (v - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>')
    # axes
    x0, y0 = LEFT, TOP + ph
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{LEFT + pw}" y2="{y0}" stroke="black"/>')
    parts.append(f'<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{y0}" stroke="black"/>')
    for t in _ticks(0, x_hi):
        parts.append(f'<text x="{_fmt(sx(t))}" y="{y0 + 18}" text-anchor="middle" font-size="11">{round(t)}</text>')
    for t in _ticks(y_lo, y_hi):
        parts.append(f'<text x="{x0 - 6}" y="{_fmt(sy(t) + 4)}" text-anchor="end" font-size="11">{t:.3f}</text>')
    parts.append(f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">epoch</text>')
    parts.append(f'<text x="16" y="{TOP + ph / 2}" text-anchor="middle" font-size="12" '
                 f'transform="rotate(-90 16 {TOP + ph / 2})">KL divergence</text>')

    if base:
        lo = [min(c[e] for c in base if e < len(c)) for e in range(epochs) if any(e < len(c) for c in base)]
        hi = [max(c[e] for c in base if e < len(c)) for e in range(len(lo))]
        pts = [f"{_fmt(sx(e))},{_fmt(sy(v))}" for e, v in enumerate(hi)]
        pts += [f"{_fmt(sx(e))},{_fmt(sy(v))}" for e, v in reversed(list(enumerate(lo)))]
        parts.append(f'<polygon points="{" ".join(pts)}" fill="#9ecae1" fill-opacity="0.5" stroke="none"/>')
    if prop:
        pts = " ".join(f"{_fmt(sx(e))},{_fmt(sy(v))}" for e, v in enumerate(prop))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#d62728" stroke-width="2"/>')
    # legend
    lx, ly = LEFT + pw - 170, TOP + 10
    parts.append(f'<rect x="{lx}" y="{ly}" width="14" height="10" fill="#9ecae1" fill-opacity="0.5"/>')
    parts.append(f'<text x="{lx + 20}" y="{ly + 9}" font-size="11">baseline spread</text>')
    parts.append(f'<line x1="{lx}" y1="{ly + 22}" x2="{lx + 14}" y2="{ly + 22}" stroke="#d62728" stroke-width="2"/>')
    parts.append(f'<text x="{lx + 20}" y="{ly + 26}" font-size="11">searched pipeline</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
