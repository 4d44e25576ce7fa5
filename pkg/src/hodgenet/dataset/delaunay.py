"""Bowyer-Watson Delaunay triangulation in the plane."""
from __future__ import annotations

import zlib
from fractions import Fraction

import numpy as np

from .. import kernels
from ..complex import build_complex

JITTER = 1e-9
INCIRCLE_REL_TOL = 1e-12
SUPER_SCALE = 1e4


def incircle_exact(pa, pb, pc, pd):
    """Exact sign of the in-circle determinant (positive: pd inside CCW abc)."""
    ax, ay = Fraction(pa[0]) - Fraction(pd[0]), Fraction(pa[1]) - Fraction(pd[1])
    bx, by = Fraction(pb[0]) - Fraction(pd[0]), Fraction(pb[1]) - Fraction(pd[1])
    cx, cy = Fraction(pc[0]) - Fraction(pd[0]), Fraction(pc[1]) - Fraction(pd[1])
    det = ((ax * ax + ay * ay) * (bx * cy - cx * by)
           + (bx * bx + by * by) * (cx * ay - ax * cy)
           + (cx * cx + cy * cy) * (ax * by - bx * ay))
    return (det > 0) - (det < 0)


def orient(pa, pb, pc):
    return (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0])


def jitter_points(points):
    """Deterministic perturbation of relative size JITTER, seeded by the input bytes."""
    pts = np.ascontiguousarray(points, dtype=float)
    extent = float(np.ptp(pts, axis=0).max()) if len(pts) else 1.0
    rng = np.random.default_rng(zlib.crc32(pts.tobytes()))
    return pts + JITTER * (extent or 1.0) * rng.uniform(-1.0, 1.0, size=pts.shape)


def _check_not_collinear(pts):
    if len(pts) < 3:
        raise ValueError("Delaunay triangulation needs at least 3 points")
    centered = pts - pts.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if s[-1] <= 1e-12 * max(s[0], 1e-300):
        raise ValueError("all input points are collinear")


def delaunay_triangles(points, jitter=True):
    """Triangles (CCW index triples) of the Delaunay triangulation of ``points``."""
    pts = np.asarray(points, dtype=float)
    _check_not_collinear(pts)
    if jitter:
        pts = jitter_points(pts)
    n = len(pts)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    c = 0.5 * (lo + hi)
    r = SUPER_SCALE * max(float((hi - lo).max()), 1e-12)
    sup = np.array([[c[0] - 2 * r, c[1] - r], [c[0] + 2 * r, c[1] - r], [c[0], c[1] + 2 * r]])
    allp = np.vstack([pts, sup])
    xs, ys = allp[:, 0].copy(), allp[:, 1].copy()

    cap = 8 * n + 16
    tris = np.zeros((cap, 3), dtype=np.int64)
    alive = np.zeros(cap, dtype=np.bool_)
    tris[0] = (n, n + 1, n + 2)
    alive[0] = True
    count = 1
    for i in range(n):
        px, py = xs[i], ys[i]
        codes = kernels.incircle_scan(tris[:count], alive[:count], xs, ys, px, py, INCIRCLE_REL_TOL)
        bad = codes == 1
        for t in np.flatnonzero(codes == 2):
            a, b, cc = tris[t]
            if incircle_exact(allp[a], allp[b], allp[cc], allp[i]) > 0:
                bad[t] = True
        bad_idx = np.flatnonzero(bad)
        edge_count = {}
        directed = []
        for t in bad_idx:
            a, b, cc = (int(v) for v in tris[t])
            for u, v in ((a, b), (b, cc), (cc, a)):
                key = (u, v) if u < v else (v, u)
                edge_count[key] = edge_count.get(key, 0) + 1
                directed.append((u, v))
        boundary = [(u, v) for u, v in directed if edge_count[(u, v) if u < v else (v, u)] == 1]
        alive[bad_idx] = False
        need = count + len(boundary)
        if need > cap:
            cap = max(2 * cap, need)
            tris = np.resize(tris, (cap, 3))
            alive = np.resize(alive, cap)
            alive[count:] = False
        for u, v in boundary:
            tris[count] = (u, v, i)
            alive[count] = True
            count += 1
    keep = alive[:count] & np.all(tris[:count] < n, axis=1)
    return tris[:count][keep]


def delaunay_2d(points, jitter=True):
    """Delaunay complex of a planar point cloud, vertex ids = point indices."""
    pts = np.asarray(points, dtype=float)
    tris = delaunay_triangles(pts, jitter=jitter)
    maximal = [sorted(map(int, t)) for t in tris] + [[v] for v in range(len(pts))]
    return build_complex(maximal, coords=pts)


def is_delaunay(points, triangles, tol=1e-9):
    """True if no point lies strictly inside any triangle's circumcircle (within tol)."""
    pts = np.asarray(points, dtype=float)
    for t in triangles:
        a, b, c = pts[list(t)]
        d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
        ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1]) + (c @ c) * (a[1] - b[1])) / d
        uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0]) + (c @ c) * (b[0] - a[0])) / d
        center = np.array([ux, uy])
        r2 = np.sum((a - center) ** 2)
        d2 = np.sum((pts - center) ** 2, axis=1)
        inside = d2 < r2 * (1 - tol)
        inside[list(t)] = False
        if inside.any():
            return False
    return True
