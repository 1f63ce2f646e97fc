"""Static SVG drawings of curves, domains and welding solutions."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .curves import AnalyticCurve, uniform_nodes

CANVAS = 640
PAD = 40
SAMPLES = 512
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def svg_document(items: Sequence[tuple[str, AnalyticCurve]], title: str = "") -> str:
    """One closed polyline of 512 samples per ``(label, curve)``, scaled to a fixed canvas."""
    t = uniform_nodes(SAMPLES)
    polys = [(label, np.asarray(c(t))) for label, c in items]
    if polys:
        allp = np.concatenate([p for _, p in polys])
        lo = complex(allp.real.min(), allp.imag.min())
        span = max(allp.real.max() - lo.real, allp.imag.max() - lo.imag, 1e-12)
    else:
        lo, span = 0j, 1.0
    scale = (CANVAS - 2 * PAD) / span

    def xy(z):
        return PAD + (z.real - lo.real) * scale, CANVAS - PAD - (z.imag - lo.imag) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" '
           f'viewBox="0 0 {CANVAS} {CANVAS}">',
           f'<rect width="{CANVAS}" height="{CANVAS}" fill="white"/>']
    if title:
        out.append(f'<text x="{PAD}" y="{PAD // 2}" font-family="sans-serif" font-size="14">{_escape(title)}</text>')
    for k, (label, p) in enumerate(polys):
        colour = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in (xy(z) for z in p))
        out.append(f'<polygon class="curve" data-label="{_escape(label)}" points="{pts}" '
                   f'fill="none" stroke="{colour}" stroke-width="1.5"/>')
        top = p[np.argmax(p.imag)]
        x, y = xy(top)
        out.append(f'<text x="{_fmt(x)}" y="{_fmt(y - 6)}" font-family="sans-serif" font-size="12" '
                   f'fill="{colour}" text-anchor="middle">{_escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def plot_items(doc_kind: str, obj) -> list:
    """Labelled curves to draw for a decoded document."""
    from .curves import DomainSpec
    if isinstance(obj, AnalyticCurve):
        return [("curve", obj)]
    if isinstance(obj, DomainSpec):
        return [(f"curve {i}", c) for i, c in enumerate(obj.curves)]
    if doc_kind == "welding":
        return [("weld curve", obj.weld_curve), ("unit circle", AnalyticCurve.circle())]
    if doc_kind == "problem":
        items = [(f"source {i}", c) for i, c in enumerate(obj.domain.curves)]
        items += [(f"target {j}", b.target) for j, b in enumerate(obj.boundary_data)]
        return items
    if doc_kind == "factorization":
        items = []
        for i, f in enumerate(obj.factors):
            if f.domain is not None:
                items += [(f"g{i + 1} domain", c) for c in f.domain.curves]
        return items
    raise TypeError(f"nothing to plot for {doc_kind}")
