"""SVG 1.1 drawing of a packing with its contact network coloured by contact state."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .analysis import BROKEN, SHEARED, STUCK

STYLE = {
    BROKEN: 'stroke="#888888" stroke-width="1.5" stroke-dasharray="6,4"',
    STUCK: 'stroke="#b2182b" stroke-width="4"',
    SHEARED: 'stroke="#2166ac" stroke-width="1.5"',
}


def render_svg(
    positions,
    radii,
    edges,
    states,
    displacement=None,
    labels=None,
    width: int = 640,
    title: str = "contact network",
) -> str:
    """Disks as circles, edges styled by state, optional layer at x + u.

    ``positions`` and ``displacement`` are (N, 2) arrays in the same vertex
    order as ``edges``; ``labels`` gives a text label per vertex.
    """
    x = np.asarray(positions, float)
    r = np.asarray(radii, float)
    pts = [x - r[:, None], x + r[:, None]]
    if displacement is not None:
        y = x + np.asarray(displacement, float).reshape(-1, 2)
        pts += [y - r[:, None], y + r[:, None]]
    lo = np.min([p.min(axis=0) for p in pts], axis=0)
    hi = np.max([p.max(axis=0) for p in pts], axis=0)
    pad = 0.05 * float(max(hi - lo))
    lo, hi = lo - pad, hi + pad
    scale = width / float(hi[0] - lo[0])
    height = int(np.ceil(scale * float(hi[1] - lo[1]))) + 40

    def tx(p):
        return (p[0] - lo[0]) * scale, (hi[1] - p[1]) * scale

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<title>{escape(title)}</title>",
        '<g id="disks" fill="#f4f4f4" stroke="#333333" stroke-width="1">',
    ]
    for p, rad in zip(x, r):
        cx, cy = tx(p)
        out.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{rad * scale:.3f}"/>')
    out.append("</g>")
    out.append('<g id="edges" fill="none">')
    for (i, j), s in zip(edges, states):
        (x1, y1), (x2, y2) = tx(x[i]), tx(x[j])
        out.append(
            f'<line class="{s}" x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" {STYLE[s]}/>'
        )
    out.append("</g>")
    if labels is not None:
        out.append('<g id="labels" font-family="sans-serif" font-size="10" text-anchor="middle">')
        for p, lab in zip(x, labels):
            cx, cy = tx(p)
            out.append(f'<text x="{cx:.3f}" y="{cy + 3:.3f}">{escape(str(lab))}</text>')
        out.append("</g>")
    if displacement is not None:
        out.append('<g id="deformed" fill="none" stroke="#1b7837" stroke-width="1" stroke-dasharray="2,2">')
        for p, rad in zip(y, r):
            cx, cy = tx(p)
            out.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{rad * scale:.3f}"/>')
        out.append("</g>")
    ly = height - 25
    out.append('<g id="legend" font-family="sans-serif" font-size="12">')
    for k, s in enumerate((BROKEN, STUCK, SHEARED)):
        x0 = 10 + 150 * k
        out.append(f'<line x1="{x0}" y1="{ly}" x2="{x0 + 40}" y2="{ly}" {STYLE[s]}/>')
        out.append(f'<text x="{x0 + 48}" y="{ly + 4}">{s}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
