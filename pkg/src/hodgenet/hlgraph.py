"""Hodge Laplacian graphs: masked shift-inverted Laplacians over d-simplices."""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import EmptyDimensionError
from .spectral import ShiftInvertedLaplacian, hodge_laplacian, shift_invert

MODES = ("full", "down", "up")


def adjacency_mask(L, mode="full"):
    """Binary mask of the structural support of L_d (``full``), L_d^down or L_d^up.

    Self-loops are always present.
    """
    if mode not in MODES:
        raise ValueError(f"mask mode must be one of {MODES}, got {mode!r}")
    n = L.n
    eye = sp.identity(n, dtype=np.int8, format="csr")
    if mode == "full":
        m = L.up_support + L.down_support + eye
    elif mode == "down":
        m = L.down_support + eye
    else:
        m = L.up_support + eye
    m = (m > 0).astype(np.int8).tocsr()
    m.sort_indices()
    return m


@dataclass(eq=False)
class HodgeLaplacianGraph:
    d: int
    nodes: list
    mask_mode: str
    mask: sp.csr_matrix
    weight_matrix: sp.csr_matrix
    shift_inverted: ShiftInvertedLaplacian | None = None
    normalized: bool = False

    @property
    def n(self):
        return self.weight_matrix.shape[0]

    @property
    def edges(self):
        """(src, dst, weight) triples in row-major order, self-loops included."""
        coo = self.mask.tocoo()
        order = np.lexsort((coo.col, coo.row))
        rows, cols = coo.row[order], coo.col[order]
        vals = np.asarray(self.weight_matrix[rows, cols]).ravel()
        return [(int(r), int(c), float(v)) for r, c, v in zip(rows, cols, vals)]

    def components(self):
        return connected_components(self.mask, directed=False)


def masked_weights(S, mask, normalize=False):
    """A (Hadamard) S as CSR, keeping the exact sparsity pattern of the mask."""
    coo = mask.tocoo()
    vals = S.matrix[coo.row, coo.col]
    W = sp.csr_matrix((vals, (coo.row, coo.col)), shape=mask.shape)
    W.sort_indices()
    if normalize:
        deg = np.asarray(abs(W).sum(axis=1)).ravel()
        inv = np.zeros_like(deg)
        inv[deg > 0] = deg[deg > 0] ** -0.5
        D = sp.diags(inv)
        W = (D @ W @ D).tocsr()
        W.sort_indices()
    return W


def build_hlgraph(K, d=1, mode="full", normalize=False, laplacian=None, shift_inverted=None):
    """Hodge Laplacian graph of K in dimension d.

    Edge weights are the signed entries of (I + L_d)^{-1} on the mask support.
    ``normalize`` applies D^{-1/2} W D^{-1/2} with D the absolute row sums.
    """
    if K.count(d) == 0:
        raise EmptyDimensionError(f"complex has no simplices in dimension {d}")
    L = laplacian if laplacian is not None else hodge_laplacian(K, d)
    S = shift_inverted if shift_inverted is not None else shift_invert(L)
    mask = adjacency_mask(L, mode)
    W = masked_weights(S, mask, normalize=normalize)
    return HodgeLaplacianGraph(d, list(K.simplices(d)), mode, mask, W, S, normalize)


def export_graph(G, csv_path, json_path=None):
    """Write the edge list as ``src,dst,weight`` and a node->simplex JSON sidecar."""
    os.makedirs(os.path.dirname(os.path.abspath(csv_path)), exist_ok=True)
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src", "dst", "weight"])
        for s, t, x in G.edges:
            w.writerow([s, t, repr(x)])
    if json_path is None:
        json_path = os.path.splitext(csv_path)[0] + ".json"
    meta = {
        "dim": G.d,
        "mask_mode": G.mask_mode,
        "normalized": G.normalized,
        "nodes": {str(i): list(s) for i, s in enumerate(G.nodes)},
    }
    with open(json_path, "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
    return csv_path, json_path
