"""Per-simplex input features: link Betti numbers plus spectral embedding."""
from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass

import numpy as np

from .complex import betti_numbers, link
from .errors import EmptyDimensionError
from .spectral import hodge_laplacian, shift_invert, spectral_embedding

log = logging.getLogger(__name__)


@dataclass(eq=False)
class FeatureMatrix:
    d: int
    k_embed: int
    values: np.ndarray

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def columns(self):
        return [f"beta{i}" for i in range(self.d + 2)] + [f"emb{i}" for i in range(self.k_embed)]

    @property
    def betti_block(self):
        return self.values[:, : self.d + 2]

    @property
    def embedding_block(self):
        return self.values[:, self.d + 2:]


def link_betti_features(K, d):
    """n x (d+2) matrix; row i is beta_0..beta_{d+1} of the link of the i-th d-simplex."""
    out = np.zeros((K.count(d), d + 2))
    for i, s in enumerate(K.simplices(d)):
        lk = link(K, s)
        if len(lk):
            out[i] = betti_numbers(lk, d + 1)
    return out


def assemble_features(K, d=1, k_embed=5, shift_inverted=None, zscore=False):
    """Betti block followed by the k_embed-dimensional spectral embedding.

    When the complex has fewer than ``k_embed`` d-simplices the embedding is
    truncated and padded with zero columns so the width stays fixed.
    """
    n = K.count(d)
    if n == 0:
        raise EmptyDimensionError(f"complex has no simplices in dimension {d}")
    S = shift_inverted if shift_inverted is not None else shift_invert(hodge_laplacian(K, d))
    k = min(k_embed, n)
    if k < k_embed:
        log.warning("k_embed=%d exceeds %d simplices; padding embedding with zeros", k_embed, n)
    emb = np.zeros((n, k_embed))
    emb[:, :k] = spectral_embedding(S, k)
    values = np.hstack([link_betti_features(K, d), emb])
    if zscore:
        mu = values.mean(axis=0)
        sd = values.std(axis=0)
        sd[sd == 0] = 1.0
        values = (values - mu) / sd
    return FeatureMatrix(d, k_embed, values)


def write_features(F, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(F.columns)
        for row in F.values:
            w.writerow([repr(float(x)) for x in row])


def read_features(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n_beta = sum(1 for c in header if c.startswith("beta"))
    values = np.array([[float(x) for x in r] for r in body]).reshape(len(body), len(header))
    return FeatureMatrix(n_beta - 2, len(header) - n_beta, values)
