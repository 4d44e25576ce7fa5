"""Numba-compiled kernels.

Each function here has a vectorized counterpart in ``_np`` with the same
signature and return convention.
"""
import math

import numpy as np
from numba import njit

_NB = dict(cache=True, nogil=True)


@njit(**_NB)
def _offdiag_norm(a):
    n = a.shape[0]
    s = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            s += a[i, j] * a[i, j]
    return math.sqrt(2.0 * s)


@njit(**_NB)
def jacobi_eigh(a, tol, max_sweeps):
    """Cyclic Jacobi on a symmetric matrix.

    Returns ``(w, v, sweeps, converged)`` with eigenvectors as columns of v.
    ``a`` is copied; convergence is off-diagonal Frobenius norm <= tol * ||a||_F.
    """
    n = a.shape[0]
    a = a.copy()
    vt = np.eye(n)  # rows are eigenvectors while iterating
    ref = math.sqrt(np.sum(a * a))
    if ref == 0.0:
        ref = 1.0
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        if _offdiag_norm(a) <= tol * ref:
            converged = True
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vp = vt[p, k]
                    vq = vt[q, k]
                    vt[p, k] = c * vp - s * vq
                    vt[q, k] = s * vp + c * vq
    if not converged and _offdiag_norm(a) <= tol * ref:
        converged = True
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, vt.T.copy(), sweeps, converged


@njit(**_NB)
def _tred2(v, d, e):
    # Householder reduction to tridiagonal form; v is overwritten with the
    # accumulated orthogonal transform (columns).
    n = v.shape[0]
    for j in range(n):
        d[j] = v[n - 1, j]
    for i in range(n - 1, 0, -1):
        scale = 0.0
        h = 0.0
        for k in range(i):
            scale += abs(d[k])
        if scale == 0.0:
            e[i] = d[i - 1]
            for j in range(i):
                d[j] = v[i - 1, j]
                v[i, j] = 0.0
                v[j, i] = 0.0
        else:
            for k in range(i):
                d[k] /= scale
                h += d[k] * d[k]
            f = d[i - 1]
            g = math.sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h = h - f * g
            d[i - 1] = f - g
            for j in range(i):
                e[j] = 0.0
            for j in range(i):
                f = d[j]
                v[j, i] = f
                g = e[j] + v[j, j] * f
                for k in range(j + 1, i):
                    g += v[k, j] * d[k]
                    e[k] += v[k, j] * f
                e[j] = g
            f = 0.0
            for j in range(i):
                e[j] /= h
                f += e[j] * d[j]
            hh = f / (h + h)
            for j in range(i):
                e[j] -= hh * d[j]
            for j in range(i):
                f = d[j]
                g = e[j]
                for k in range(j, i):
                    v[k, j] -= f * e[k] + g * d[k]
                d[j] = v[i - 1, j]
                v[i, j] = 0.0
        d[i] = h
    for i in range(n - 1):
        v[n - 1, i] = v[i, i]
        v[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            for k in range(i + 1):
                d[k] = v[k, i + 1] / h
            for j in range(i + 1):
                g = 0.0
                for k in range(i + 1):
                    g += v[k, i + 1] * v[k, j]
                for k in range(i + 1):
                    v[k, j] -= g * d[k]
        for k in range(i + 1):
            v[k, i + 1] = 0.0
    for j in range(n):
        d[j] = v[n - 1, j]
        v[n - 1, j] = 0.0
    v[n - 1, n - 1] = 1.0
    e[0] = 0.0


@njit(**_NB)
def _tql2(zt, d, e, max_iter):
    # Implicit QL on the tridiagonal (d, e); rotations applied to the rows of
    # zt (transposed eigenvector matrix) for contiguous access.
    n = d.shape[0]
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0
    f = 0.0
    tst1 = 0.0
    eps = 2.0 ** -52
    total = 0
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n - 1:
            if abs(e[m]) <= eps * tst1:
                break
            m += 1
        if m > l:
            it = 0
            while True:
                it += 1
                total += 1
                if it > max_iter:
                    return total, False
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f += h
                p = d[m]
                c = 1.0
                c2 = c
                c3 = c
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    for k in range(n):
                        h = zt[i + 1, k]
                        zt[i + 1, k] = s * zt[i, k] + c * h
                        zt[i, k] = c * zt[i, k] - s * h
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= eps * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0
    return total, True


@njit(**_NB)
def tridiag_ql_eigh(a, max_iter):
    """Householder tridiagonalization followed by implicit QL.

    Returns ``(w, v, iterations, converged)``; eigenvalues unsorted.
    """
    n = a.shape[0]
    v = a.copy()
    d = np.zeros(n)
    e = np.zeros(n)
    _tred2(v, d, e)
    zt = v.T.copy()
    total, ok = _tql2(zt, d, e, max_iter)
    return d, zt.T.copy(), total, ok


@njit(**_NB)
def floyd_warshall(dist):
    """All-pairs shortest paths in place on a float matrix (inf = no edge)."""
    n = dist.shape[0]
    for k in range(n):
        for i in range(n):
            dik = dist[i, k]
            if dik == np.inf:
                continue
            for j in range(n):
                alt = dik + dist[k, j]
                if alt < dist[i, j]:
                    dist[i, j] = alt
    return dist


@njit(**_NB)
def incircle_scan(tris, alive, xs, ys, px, py, rel_tol):
    """Sign of the in-circle determinant of each live CCW triangle vs a point.

    Returns int8 codes: 1 strictly inside, 0 outside or on, 2 when
    |det| <= rel_tol * permanent (caller resolves these exactly).
    """
    m = tris.shape[0]
    out = np.zeros(m, dtype=np.int8)
    for t in range(m):
        if not alive[t]:
            continue
        a = tris[t, 0]
        b = tris[t, 1]
        c = tris[t, 2]
        adx = xs[a] - px
        ady = ys[a] - py
        bdx = xs[b] - px
        bdy = ys[b] - py
        cdx = xs[c] - px
        cdy = ys[c] - py
        alift = adx * adx + ady * ady
        blift = bdx * bdx + bdy * bdy
        clift = cdx * cdx + cdy * cdy
        bc = bdx * cdy - cdx * bdy
        ca = cdx * ady - adx * cdy
        ab = adx * bdy - bdx * ady
        det = alift * bc + blift * ca + clift * ab
        perm = (alift * (abs(bdx * cdy) + abs(cdx * bdy))
                + blift * (abs(cdx * ady) + abs(adx * cdy))
                + clift * (abs(adx * bdy) + abs(bdx * ady)))
        if abs(det) <= rel_tol * perm:
            out[t] = 2
        elif det > 0.0:
            out[t] = 1
    return out
