"""Minimal SVG output: edge-colored complexes, box plots, sorted curves."""
from __future__ import annotations

import os
from xml.sax.saxutils import escape

import numpy as np

# diverging cool-warm ramp: blue at 0, light grey at 0.5, red at 1
_COOL = np.array([59, 76, 192], dtype=float)
_MID = np.array([221, 221, 221], dtype=float)
_WARM = np.array([180, 4, 38], dtype=float)


def coolwarm(v):
    """Hex color for a value in [0, 1] (clipped)."""
    v = float(np.clip(v, 0.0, 1.0)) if np.isfinite(v) else 0.5
    if v < 0.5:
        c = _COOL + (_MID - _COOL) * (v / 0.5)
    else:
        c = _MID + (_WARM - _MID) * ((v - 0.5) / 0.5)
    r, g, b = (int(round(x)) for x in c)
    return f"#{r:02x}{g:02x}{b:02x}"


def _write(path, width, height, body):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
                 f'viewBox="0 0 {width} {height}">\n')
        fh.write(f'<rect width="{width}" height="{height}" fill="white"/>\n')
        fh.write("\n".join(body))
        fh.write("\n</svg>\n")


def render_complex(K, edge_values, path, title=None, size=600, vmin=0.0, vmax=1.0, triangles=True):
    """Draw a planar complex with edges colored by ``edge_values``.

    Values are mapped linearly from [vmin, vmax] onto the cool-warm ramp.
    Needs vertex coordinates; raises ValueError otherwise.
    """
    if K.coords is None:
        raise ValueError("complex has no coordinates")
    P = np.asarray(K.coords, dtype=float)[:, :2]
    vals = np.asarray(edge_values, dtype=float)
    if vals.shape[0] != K.count(1):
        raise ValueError("need one value per edge")
    pad = 20
    lo, hi = P.min(axis=0), P.max(axis=0)
    scale = (size - 2 * pad) / max(float((hi - lo).max()), 1e-12)
    height = int(round((hi[1] - lo[1]) * scale)) + 2 * pad + (24 if title else 0)
    top = 24 if title else 0

    def xy(v):
        x = pad + (P[v, 0] - lo[0]) * scale
        y = top + pad + (hi[1] - P[v, 1]) * scale
        return x, y

    body = []
    if title:
        body.append(f'<text x="{pad}" y="18" font-family="sans-serif" font-size="14">{escape(title)}</text>')
    if triangles and K.dim >= 2:
        for t in K.simplices(2):
            pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in map(xy, t))
            body.append(f'<polygon points="{pts}" fill="#f2f2f2" stroke="none"/>')
    span = vmax - vmin if vmax > vmin else 1.0
    for (a, b), v in zip(K.simplices(1), vals):
        (x1, y1), (x2, y2) = xy(a), xy(b)
        body.append(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                    f'stroke="{coolwarm((v - vmin) / span)}" stroke-width="1.6"/>')
    for v in K.vertices:
        x, y = xy(v)
        body.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1.3" fill="#333"/>')
    _write(path, size, height, body)


def box_plot(groups, path, title="", ylabel="MSE", width=640, height=360):
    """Box plots for ``{label: values}``; whiskers at 1.5 IQR."""
    labels = list(groups)
    ml, mb, mt = 56, 40, 30
    pw, ph = width - ml - 16, height - mb - mt
    allv = np.concatenate([np.asarray(groups[k], float) for k in labels]) if labels else np.zeros(1)
    ymax = max(float(allv.max()) if allv.size else 1.0, 1e-6) * 1.05

    def Y(v):
        return mt + ph * (1.0 - v / ymax)

    body = [f'<text x="{ml}" y="18" font-family="sans-serif" font-size="13">{escape(title)}</text>',
            f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
            f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
            f'<text x="12" y="{mt + ph / 2:.0f}" font-family="sans-serif" font-size="11" '
            f'transform="rotate(-90 12 {mt + ph / 2:.0f})">{escape(ylabel)}</text>']
    for t in np.linspace(0, ymax, 5):
        body.append(f'<text x="{ml - 4}" y="{Y(t) + 4:.1f}" font-family="sans-serif" font-size="10" '
                    f'text-anchor="end">{t:.3g}</text>')
    slot = pw / max(len(labels), 1)
    for i, k in enumerate(labels):
        v = np.sort(np.asarray(groups[k], float))
        cx = ml + slot * (i + 0.5)
        body.append(f'<text x="{cx:.1f}" y="{mt + ph + 16}" font-family="sans-serif" font-size="10" '
                    f'text-anchor="middle">{escape(str(k))}</text>')
        if v.size == 0:
            continue
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        iqr = q3 - q1
        lo = v[v >= q1 - 1.5 * iqr].min()
        hi = v[v <= q3 + 1.5 * iqr].max()
        bw = min(slot * 0.5, 40)
        body.append(f'<line x1="{cx:.1f}" y1="{Y(lo):.1f}" x2="{cx:.1f}" y2="{Y(hi):.1f}" stroke="#444"/>')
        body.append(f'<rect x="{cx - bw / 2:.1f}" y="{Y(q3):.1f}" width="{bw:.1f}" '
                    f'height="{max(Y(q1) - Y(q3), 0.5):.1f}" fill="#9fb6e0" stroke="#444"/>')
        body.append(f'<line x1="{cx - bw / 2:.1f}" y1="{Y(med):.1f}" x2="{cx + bw / 2:.1f}" '
                    f'y2="{Y(med):.1f}" stroke="#b40426" stroke-width="2"/>')
        for o in v[(v < lo) | (v > hi)]:
            body.append(f'<circle cx="{cx:.1f}" cy="{Y(o):.1f}" r="2" fill="none" stroke="#444"/>')
    _write(path, width, height, body)


def sorted_curve(truth, pred, path, title="", width=640, height=320):
    """Ground truth and predictions, both ordered by increasing ground truth."""
    truth = np.asarray(truth, float)
    pred = np.asarray(pred, float)
    order = np.argsort(truth, kind="stable")
    ml, mb, mt = 40, 24, 26
    pw, ph = width - ml - 12, height - mb - mt
    n = max(len(truth) - 1, 1)

    def pts(v):
        return " ".join(f"{ml + pw * i / n:.1f},{mt + ph * (1 - np.clip(y, 0, 1)):.1f}"
                        for i, y in enumerate(v[order]))

    body = [f'<text x="{ml}" y="16" font-family="sans-serif" font-size="13">{escape(title)}</text>',
            f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
            f'<polyline points="{pts(pred)}" fill="none" stroke="#b40426" stroke-width="1"/>',
            f'<polyline points="{pts(truth)}" fill="none" stroke="#3b4cc0" stroke-width="1.5"/>']
    _write(path, width, height, body)
