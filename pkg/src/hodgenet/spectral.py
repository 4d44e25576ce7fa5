"""Hodge Laplacians, their shift-inverted form, diffusion and spectral embeddings."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .complex import _boundary_or_empty
from .errors import DivergedError, EmptyDimensionError, NumericalFailure

log = logging.getLogger(__name__)

EIG_EPS = 1e-9
KER_TOL = 1e-8
JACOBI_MAX_N = 64
JACOBI_TOL = 1e-10
JACOBI_MAX_SWEEPS = 100
QL_MAX_ITER = 60
DEGENERATE_GAP = 1e-10


def fix_signs(V):
    """Flip each column so its largest-magnitude entry is positive.

    Ties in magnitude go to the lowest row index (``argmax`` semantics).
    """
    V = np.array(V, dtype=float, copy=True)
    if V.size == 0:
        return V
    rows = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[rows, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def eigh(a, method="auto", jacobi_max_n=JACOBI_MAX_N):
    """Symmetric eigendecomposition, eigenvalues ascending.

    ``method`` is ``"jacobi"``, ``"ql"`` or ``"auto"`` (Jacobi up to
    ``jacobi_max_n`` rows, Householder + implicit QL above).
    """
    a = np.ascontiguousarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("eigh needs a square matrix")
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    if not np.all(np.isfinite(a)):
        raise NumericalFailure("matrix has non-finite entries", iterations=0)
    if method == "auto":
        method = "jacobi" if n <= jacobi_max_n else "ql"
    if method == "jacobi":
        w, V, its, ok = kernels.jacobi_eigh(a, JACOBI_TOL, JACOBI_MAX_SWEEPS)
        what = "Jacobi sweeps"
    elif method == "ql":
        w, V, its, ok = kernels.tridiag_ql_eigh(a, QL_MAX_ITER)
        what = "QL iterations"
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    if not ok:
        raise NumericalFailure(f"eigensolver did not converge after {its} {what}", iterations=int(its))
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


@dataclass(eq=False)
class HodgeLaplacian:
    """Up, down and total Hodge Laplacian in dimension ``d``.

    ``up_support``/``down_support`` are combinatorial adjacency patterns
    (shared coface / shared face), independent of numerical cancellation.
    """

    d: int
    up: sp.csr_matrix
    down: sp.csr_matrix
    up_support: sp.csr_matrix
    down_support: sp.csr_matrix
    _eig: tuple | None = field(default=None, repr=False)

    @property
    def n(self):
        return self.up.shape[0]

    @property
    def total(self):
        return (self.up + self.down).tocsr()

    def dense(self):
        return self.total.toarray()

    def eigh(self, method="auto"):
        if self._eig is None:
            self._eig = eigh(self.dense(), method=method)
        return self._eig

    def kernel_dim(self, tol=KER_TOL):
        w, _ = self.eigh()
        return int(np.sum(w < tol))


def hodge_laplacian(K, d):
    """L_d = B_{d+1} B_{d+1}^T + B_d^T B_d with missing operators treated as zero."""
    if d < 0 or d > K.dim or K.count(d) == 0:
        raise EmptyDimensionError(f"complex has no simplices in dimension {d}")
    n = K.count(d)
    if d >= 1:
        bd = _boundary_or_empty(K, d)
        down = (bd.T @ bd).tocsr().astype(float)
        # |B| has no negative entries, so the product cannot cancel
        ad = abs(bd)
        down_support = (ad.T @ ad).tocsr()
    else:
        down = sp.csr_matrix((n, n))
        down_support = sp.csr_matrix((n, n), dtype=np.int64)
    if d + 1 <= K.dim:
        bu = _boundary_or_empty(K, d + 1)
        up = (bu @ bu.T).tocsr().astype(float)
        au = abs(bu)
        up_support = (au @ au.T).tocsr()
    else:
        up = sp.csr_matrix((n, n))
        up_support = sp.csr_matrix((n, n), dtype=np.int64)
    for m in (up, down, up_support, down_support):
        m.sort_indices()
    return HodgeLaplacian(d, up, down, (up_support > 0).astype(np.int8), (down_support > 0).astype(np.int8))


@dataclass(eq=False)
class ShiftInvertedLaplacian:
    """(I + L_d)^{-1} together with its eigenpairs, eigenvalues descending."""

    d: int
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    laplacian_eigenvalues: np.ndarray

    @property
    def n(self):
        return self.matrix.shape[0]

    def kernel_dim(self, tol=KER_TOL):
        """Multiplicity of the eigenvalue 1, i.e. the Betti number."""
        return int(np.sum(np.abs(self.eigenvalues - 1.0) <= tol))

    def gap_at(self, k):
        """Eigenvalue gap right after the first k eigenpairs (inf if k >= n)."""
        if k <= 0 or k >= self.n:
            return np.inf
        return float(self.eigenvalues[k - 1] - self.eigenvalues[k])


def shift_invert(L):
    """Shift-invert via the eigendecomposition of L: Q diag(1/(1+lambda)) Q^T."""
    w, Q = L.eigh()
    mu = 1.0 / (1.0 + w)
    M = (Q * mu) @ Q.T
    M = 0.5 * (M + M.T)
    # ascending lambda is descending mu
    return ShiftInvertedLaplacian(L.d, M, mu.copy(), fix_signs(Q), w.copy())


def diffuse(operator, x0, steps):
    """Iterate x <- x + M x for ``steps`` steps without renormalization."""
    M = operator.matrix if isinstance(operator, ShiftInvertedLaplacian) else operator
    if isinstance(M, HodgeLaplacian):
        M = M.total
    x = np.array(x0, dtype=float, copy=True)
    if M.shape != (x.shape[0], x.shape[0]):
        raise ValueError(f"operator shape {M.shape} does not match signal length {x.shape[0]}")
    for step in range(1, steps + 1):
        x = x + M @ x
        if not np.all(np.isfinite(x)):
            raise DivergedError(f"diffusion diverged at step {step}", step=step)
    return x


def _eigenpairs_by_magnitude(S):
    if isinstance(S, ShiftInvertedLaplacian):
        return S.eigenvalues, S.eigenvectors
    w, Q = S.eigh()
    order = np.argsort(-np.abs(w), kind="stable")
    return w[order], Q[:, order]


def low_rank(S, k):
    """Sum of lambda_j q_j q_j^T over the k largest-magnitude eigenpairs."""
    w, Q = _eigenpairs_by_magnitude(S)
    if not 1 <= k <= len(w):
        raise ValueError(f"rank k={k} outside [1, {len(w)}]")
    Qk = Q[:, :k]
    M = (Qk * w[:k]) @ Qk.T
    return 0.5 * (M + M.T)


def spectral_embedding(S, k):
    """Rows of the top-k eigenvectors of the shift-inverted Laplacian."""
    if not 1 <= k <= S.n:
        raise ValueError(f"embedding width k={k} outside [1, {S.n}]")
    gap = S.gap_at(k)
    if gap < DEGENERATE_GAP:
        log.debug("degenerate eigenvalue at embedding cut k=%d (gap %.2e)", k, gap)
    return S.eigenvectors[:, :k].copy()


def kernel_projector(S, tol=KER_TOL):
    """Orthogonal projector onto the harmonic space (eigenvalue 1 of S)."""
    mask = np.abs(S.eigenvalues - 1.0) <= tol
    Q = S.eigenvectors[:, mask]
    return Q @ Q.T
