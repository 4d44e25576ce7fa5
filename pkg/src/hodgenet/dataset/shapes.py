"""Small hand-built planar complexes with known homology."""
from __future__ import annotations

import math

import numpy as np

from ..complex import build_complex


def _ring_band(m, inner, outer, center):
    """Triangulated band between an inner and an outer m-gon.

    Inner vertices come first, both rings numbered counterclockwise, so
    edges along each ring are oriented with the circulation.
    """
    pts = []
    for k in range(m):
        t = 2 * math.pi * k / m
        pts.append((center[0] + inner * math.cos(t), center[1] + inner * math.sin(t)))
    for k in range(m):
        t = 2 * math.pi * k / m + math.pi / m
        pts.append((center[0] + outer * math.cos(t), center[1] + outer * math.sin(t)))
    tris = []
    for k in range(m):
        k1 = (k + 1) % m
        tris.append([k, k1, m + k])
        tris.append([k1, m + k, m + k1])
    return tris, np.array(pts)


def annulus_complex(m=6, inner=1.0, outer=2.0):
    """One coarse annulus: 2m vertices, 2m triangles, beta = (1, 1, 0)."""
    if m < 3:
        raise ValueError("need m >= 3")
    tris, pts = _ring_band(m, inner, outer, (0.0, 0.0))
    return build_complex([sorted(t) for t in tris], coords=pts)


def double_annulus(m=6, inner=1.0, outer=2.0):
    """Two coarse annuli touching at one outer vertex; beta = (1, 2, 0).

    ``m`` must be even so that an outer vertex of each ring lands on the
    same point.
    """
    if m < 4 or m % 2:
        raise ValueError("m must be an even integer >= 4")
    ta, pa = _ring_band(m, inner, outer, (0.0, 0.0))
    cx = 2 * outer * math.cos(math.pi / m)
    tb, pb = _ring_band(m, inner, outer, (cx, 0.0))
    shared_a = m  # outer vertex 0 of the first ring, at angle pi/m
    shared_b = m + m // 2 - 1  # outer vertex of the second ring at angle pi - pi/m
    ids_b = []
    nxt = 2 * m
    for v in range(2 * m):
        if v == shared_b:
            ids_b.append(shared_a)
        else:
            ids_b.append(nxt)
            nxt += 1
    coords = np.zeros((nxt, 2))
    coords[: 2 * m] = pa
    for v, i in enumerate(ids_b):
        if v != shared_b:
            coords[i] = pb[v]
    tris = [sorted(t) for t in ta] + [sorted(ids_b[v] for v in t) for t in tb]
    return build_complex(tris, coords=coords)
