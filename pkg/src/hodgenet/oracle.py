"""Ground truth: optimal H_1 generators and normalized hop distances to them.

The basis is found greedily over a Horton-style candidate set (for every
root vertex, each non-tree edge of its shortest-path tree closes a cycle).
Candidates are scanned by increasing length and kept when they are
independent of the triangle boundaries and of the cycles kept so far,
with independence decided by Z/2 elimination on bitsets.
"""
from __future__ import annotations

import csv
import heapq
import os
from collections import deque
from dataclasses import dataclass, field
from itertools import groupby

import numpy as np

from . import kernels
from .complex import _z2_columns, betti_numbers
from .errors import SizeGuardError
from .hlgraph import adjacency_mask
from .spectral import hodge_laplacian

BRUTE_FORCE_MAX_EDGES = 200


@dataclass
class HomologyBasis:
    generators: list = field(default_factory=list)  # sorted tuples of edge indices
    lengths: list = field(default_factory=list)

    @property
    def rank(self):
        return len(self.generators)

    def edge_set(self):
        return sorted({e for g in self.generators for e in g})


@dataclass
class DistanceTarget:
    values: np.ndarray
    raw_hops: np.ndarray  # -1 where no generator is reachable
    normalizer: int


def edge_lengths(K, metric="auto"):
    """Per-edge length: unit, Euclidean, or Euclidean when coords exist (``auto``)."""
    if metric == "auto":
        metric = "euclidean" if K.coords is not None else "unit"
    edges = K.simplices(1)
    if metric == "unit":
        return np.ones(len(edges))
    if metric != "euclidean":
        raise ValueError(f"unknown edge metric {metric!r}")
    if K.coords is None:
        raise ValueError("euclidean edge lengths need vertex coordinates")
    e = np.array(edges, dtype=int).reshape(-1, 2)
    return np.linalg.norm(K.coords[e[:, 0]] - K.coords[e[:, 1]], axis=1)


def _incidence(K):
    adj = {v: [] for v in K.vertices}
    for j, (a, b) in enumerate(K.simplices(1)):
        adj[a].append((b, j))
        adj[b].append((a, j))
    for v in adj:
        adj[v].sort()
    return adj


def _shortest_path_tree(adj, root, lengths, unit):
    # returns {vertex: (dist, parent_edge)} in settle order
    dist = {root: 0.0}
    parent = {root: -1}
    order = []
    if unit:
        q = deque([root])
        while q:
            u = q.popleft()
            order.append(u)
            for v, e in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1.0
                    parent[v] = e
                    q.append(v)
    else:
        heap = [(0.0, root)]
        done = set()
        while heap:
            du, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            order.append(u)
            for v, e in adj[u]:
                nd = du + lengths[e]
                if v not in dist or nd < dist[v] or (nd == dist[v] and v not in done and e < parent[v]):
                    dist[v] = nd
                    parent[v] = e
                    heapq.heappush(heap, (nd, v))
    return dist, parent, order


def _bits_length(bits, lengths):
    total = 0.0
    while bits:
        low = bits & -bits
        total += lengths[low.bit_length() - 1]
        bits ^= low
    return total


def candidate_cycles(K, lengths=None):
    """Horton candidates as a dict ``bitset -> length`` over edge indices."""
    if lengths is None:
        lengths = edge_lengths(K)
    lengths = np.asarray(lengths, dtype=float)
    unit = bool(np.all(lengths == 1.0))
    edges = K.simplices(1)
    adj = _incidence(K)
    out = {}
    for root in K.vertices:
        if not adj[root]:
            continue
        dist, parent, order = _shortest_path_tree(adj, root, lengths, unit)
        path = {root: 0}
        for u in order:
            if u != root:
                e = parent[u]
                a, b = edges[e]
                path[u] = path[a if b == u else b] | (1 << e)
        tree = {parent[u] for u in order if u != root}
        for e, (a, b) in enumerate(edges):
            if e in tree or a not in path or b not in path:
                continue
            bits = path[a] ^ path[b] ^ (1 << e)
            if bits in out:
                continue
            out[bits] = float(bits.bit_count()) if unit else _bits_length(bits, lengths)
    return out


def _bits_to_tuple(bits):
    out = []
    while bits:
        low = bits & -bits
        out.append(low.bit_length() - 1)
        bits ^= low
    return tuple(out)


def optimal_h1_basis(K, metric="auto"):
    """Shortest H_1 basis by greedy selection over Horton candidates.

    Equal-length candidates are visited in lexicographic order of their
    sorted edge-index tuples.
    """
    if K.dim < 1 or K.count(1) == 0:
        return HomologyBasis()
    beta1 = betti_numbers(K, 1)[1]
    if beta1 == 0:
        return HomologyBasis()
    lengths = edge_lengths(K, metric)
    pivots = {}

    def reduce(c):
        while c:
            top = c.bit_length() - 1
            p = pivots.get(top)
            if p is None:
                return c
            c ^= p
        return 0

    for col in _z2_columns(K, 2) if K.dim >= 2 else []:
        r = reduce(col)
        if r:
            pivots[r.bit_length() - 1] = r
    cands = sorted(candidate_cycles(K, lengths).items(), key=lambda kv: kv[1])
    basis = HomologyBasis()
    for length, group in groupby(cands, key=lambda kv: kv[1]):
        for tup, bits in sorted((_bits_to_tuple(b), b) for b, _ in group):
            r = reduce(bits)
            if r:
                pivots[r.bit_length() - 1] = r
                basis.generators.append(tup)
                basis.lengths.append(length)
                if basis.rank == beta1:
                    return basis
    raise RuntimeError("candidate set did not span H_1; this indicates a bug")


def edge_adjacency(K, adjacency="lower"):
    """Edge-to-edge adjacency (no self loops) as CSR.

    ``lower``: edges sharing a vertex. ``full``: support of L_1, which for
    edges coincides with ``lower`` because two edges of a triangle share a
    vertex.
    """
    L = hodge_laplacian(K, 1)
    mask = adjacency_mask(L, "down" if adjacency == "lower" else "full")
    mask = mask.tolil()
    mask.setdiag(0)
    mask = mask.tocsr()
    mask.eliminate_zeros()
    return mask


def _normalize(hops, A, normalize):
    n = len(hops)
    values = np.ones(n)
    finite = hops >= 0
    if normalize == "global":
        m = int(hops[finite].max()) if finite.any() else 0
        if m > 0:
            values[finite] = hops[finite] / m
        else:
            values[finite] = 0.0
        return values, m
    if normalize != "component":
        raise ValueError(f"unknown normalization {normalize!r}")
    from scipy.sparse.csgraph import connected_components

    _, labels = connected_components(A, directed=False)
    m_all = 0
    for c in np.unique(labels):
        sel = (labels == c) & finite
        if not sel.any():
            continue
        m = int(hops[sel].max())
        m_all = max(m_all, m)
        values[sel] = hops[sel] / m if m > 0 else 0.0
    return values, m_all


def hop_distance_target(K, basis, adjacency="lower", normalize="global"):
    """Multi-source BFS hop distance from each edge to the nearest generator edge."""
    n = K.count(1)
    A = edge_adjacency(K, adjacency) if n else None
    hops = np.full(n, -1, dtype=np.int64)
    q = deque()
    for e in basis.edge_set():
        hops[e] = 0
        q.append(e)
    if n:
        indptr, indices = A.indptr, A.indices
        while q:
            u = q.popleft()
            for v in indices[indptr[u]:indptr[u + 1]]:
                if hops[v] < 0:
                    hops[v] = hops[u] + 1
                    q.append(v)
    values, m = _normalize(hops, A, normalize) if n else (np.ones(0), 0)
    return DistanceTarget(values, hops, m)


def brute_force_distance(K, basis, adjacency="lower", normalize="global"):
    """All-pairs (Floyd-Warshall) reference for :func:`hop_distance_target`."""
    n = K.count(1)
    if n > BRUTE_FORCE_MAX_EDGES:
        raise SizeGuardError(f"{n} edges exceeds the brute-force guard of {BRUTE_FORCE_MAX_EDGES}")
    if n == 0:
        return DistanceTarget(np.ones(0), np.zeros(0, dtype=np.int64), 0)
    A = edge_adjacency(K, adjacency)
    D = np.full((n, n), np.inf)
    D[A.nonzero()] = 1.0
    np.fill_diagonal(D, 0.0)
    D = kernels.floyd_warshall(D)
    sources = basis.edge_set()
    if sources:
        best = D[:, sources].min(axis=1)
    else:
        best = np.full(n, np.inf)
    hops = np.where(np.isfinite(best), best, -1).astype(np.int64)
    values, m = _normalize(hops, A, normalize)
    return DistanceTarget(values, hops, m)


def write_labels(target, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["edge_index", "hops", "normalized"])
        for i, (h, v) in enumerate(zip(target.raw_hops, target.values)):
            w.writerow([i, int(h), repr(float(v))])


def read_labels(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    hops = np.array([int(r["hops"]) for r in rows], dtype=np.int64)
    values = np.array([float(r["normalized"]) for r in rows])
    finite = hops[hops >= 0]
    return DistanceTarget(values, hops, int(finite.max()) if finite.size else 0)


def write_generators(basis, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        for g in basis.generators:
            fh.write(" ".join(map(str, g)) + "\n")


def read_generators(path):
    with open(path) as fh:
        return [tuple(int(t) for t in line.split()) for line in fh if line.strip()]
