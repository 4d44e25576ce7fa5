"""Alpha filtrations, Z/2 persistence and filtration snapshots."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..complex import SimplicialComplex
from .delaunay import delaunay_2d

log = logging.getLogger(__name__)


class Filtration:
    """A complex with a monotone value per simplex.

    ``order`` lists ``(dim, index)`` pairs sorted by (value, dim, vertex tuple),
    which puts every face before its cofaces.
    """

    def __init__(self, complex, values):
        self.complex = complex
        self.values = [np.asarray(v, dtype=float) for v in values]
        keys = []
        for d, level in enumerate(complex.simplices_by_dim):
            for i, s in enumerate(level):
                keys.append((float(self.values[d][i]), d, s, i))
        keys.sort()
        self.order = [(d, i) for _, d, _, i in keys]
        self.position = {key: p for p, key in enumerate(self.order)}

    def __len__(self):
        return len(self.order)

    def value_at(self, pos):
        d, i = self.order[pos]
        return float(self.values[d][i])

    def simplex_at(self, pos):
        d, i = self.order[pos]
        return self.complex.simplices(d)[i]

    def is_monotone(self):
        K = self.complex
        for d in range(1, K.dim + 1):
            for i, s in enumerate(K.simplices(d)):
                for j in range(d + 1):
                    face = s[:j] + s[j + 1:]
                    fd, fi = K.index_of[face]
                    if self.values[fd][fi] > self.values[d][i]:
                        return False
        return True

    def sublevel(self, threshold):
        """Subcomplex of all simplices with value <= threshold."""
        keep = [v <= threshold for v in self.values]
        return self.complex.subcomplex(keep)


def circumradius(a, b, c):
    la, lb, lc = np.linalg.norm(b - c), np.linalg.norm(a - c), np.linalg.norm(a - b)
    area2 = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    if area2 == 0.0:
        return math.inf
    return la * lb * lc / (2.0 * area2)


def alpha_filtration(points):
    """Alpha filtration (radius convention) on the Delaunay complex of ``points``.

    Triangles get their circumradius. An edge gets half its length when its
    diametral disc is empty of the opposite vertices of its incident
    triangles (Gabriel edge, which for a Delaunay triangulation means empty
    of all points), else the smallest value among incident triangles.
    """
    pts = np.asarray(points, dtype=float)
    K = delaunay_2d(pts)
    P = K.coords
    edges = K.simplices(1)
    tris = K.simplices(2)
    tri_alpha = np.array([circumradius(P[a], P[b], P[c]) for a, b, c in tris])
    edge_alpha = np.array([0.5 * np.linalg.norm(P[a] - P[b]) for a, b in edges])
    gabriel = np.ones(len(edges), dtype=bool)
    incident_min = np.full(len(edges), np.inf)
    for t, s in enumerate(tris):
        for j in range(3):
            face = s[:j] + s[j + 1:]
            opp = s[j]
            e = K.index_of[face][1]
            incident_min[e] = min(incident_min[e], tri_alpha[t])
            a, b = face
            if np.dot(P[a] - P[opp], P[b] - P[opp]) < 0.0:
                gabriel[e] = False
    edge_alpha = np.where(gabriel, edge_alpha, incident_min)
    # faces never enter after their cofaces
    edge_alpha = np.minimum(edge_alpha, incident_min)
    values = [np.zeros(K.count(0)), edge_alpha, tri_alpha]
    K = SimplicialComplex(K.simplices_by_dim, coords=P, alpha=values, validate=False)
    return Filtration(K, values)


@dataclass
class Barcode:
    intervals: list  # (dim, birth, death, persistence); death is inf for essential bars
    pairs: list = field(default_factory=list)  # (birth_pos, death_pos) in filtration order
    essential: list = field(default_factory=list)  # birth positions of unpaired simplices
    reduced: dict = field(default_factory=dict, repr=False)  # death_pos -> reduced column bits

    def bars(self, dim, finite_only=False):
        return [iv for iv in self.intervals if iv[0] == dim and (not finite_only or math.isfinite(iv[2]))]


def persistence_barcode(f, max_dim=None):
    """Standard Z/2 column reduction with the twist (clearing) optimization.

    Pairs with zero persistence are recorded in ``pairs`` but left out of
    ``intervals``.
    """
    K = f.complex
    top = K.dim if max_dim is None else min(K.dim, max_dim + 1)
    pos = f.position
    by_dim = {d: [] for d in range(top + 1)}
    for p, (d, i) in enumerate(f.order):
        if d <= top:
            by_dim[d].append(p)
    cleared = set()
    low_to_col = {}
    reduced = {}
    for d in range(top, 0, -1):
        for p in by_dim[d]:
            if p in cleared:
                continue
            s = f.simplex_at(p)
            col = 0
            for j in range(d + 1):
                fd, fi = K.index_of[s[:j] + s[j + 1:]]
                col |= 1 << pos[(fd, fi)]
            while col:
                low = col.bit_length() - 1
                other = low_to_col.get(low)
                if other is None:
                    break
                col ^= reduced[other]
            if col:
                low = col.bit_length() - 1
                low_to_col[low] = p
                reduced[p] = col
                cleared.add(low)
    pairs = sorted((low, p) for low, p in low_to_col.items())
    paired = set(low_to_col) | set(low_to_col.values())
    limit = top if max_dim is None else max_dim
    essential = [p for p in range(len(f)) if p not in paired and f.order[p][0] <= limit]
    intervals = []
    for b, dpos in pairs:
        dim = f.order[b][0]
        if dim > limit:
            continue
        birth, death = f.value_at(b), f.value_at(dpos)
        if death > birth:
            intervals.append((dim, birth, death, death - birth))
    for b in essential:
        intervals.append((f.order[b][0], f.value_at(b), math.inf, math.inf))
    intervals.sort(key=lambda iv: (iv[0], -iv[3], iv[1]))
    return Barcode(intervals, pairs, essential, reduced)


def snapshot_complexes(f, barcode, top_k=5, dim=1):
    """Sublevel complexes at the birth and just before the death of the
    ``top_k`` most persistent bars of dimension ``dim``.

    The death snapshot uses death - eps with eps half the gap to the previous
    distinct filtration value, so the feature is still alive. Duplicates are
    dropped, keeping first occurrence.
    """
    bars = [iv for iv in barcode.bars(dim)]
    if not bars:
        log.warning("no dimension-%d bars; no snapshots taken", dim)
        return []
    bars.sort(key=lambda iv: (-iv[3], iv[1]))
    distinct = np.unique(np.concatenate([v for v in f.values]))
    out, seen = [], set()
    for _, birth, death, _ in bars[:top_k]:
        thresholds = [birth]
        if math.isfinite(death):
            k = np.searchsorted(distinct, death)
            prev = distinct[k - 1] if k > 0 else birth
            thresholds.append(death - 0.5 * (death - prev))
        for t in thresholds:
            K = f.sublevel(t)
            if K.simplices_by_dim in seen:
                continue
            seen.add(K.simplices_by_dim)
            out.append(K)
    return out
