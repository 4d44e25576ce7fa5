"""Vectorized numpy kernels, used when numba is disabled or unavailable."""
import math

import numpy as np


def _round_robin(n):
    # Tournament schedule: n-1 rounds of n/2 disjoint pairs (n even).
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        lo, hi = np.minimum(p, q), np.maximum(p, q)
        rounds.append((lo, hi))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _offdiag_norm(a):
    off = a - np.diag(np.diag(a))
    return math.sqrt(float(np.sum(off * off)))


def jacobi_eigh(a, tol, max_sweeps):
    n = a.shape[0]
    m = n + (n % 2)
    A = np.zeros((m, m))
    A[:n, :n] = a
    V = np.eye(m)
    ref = math.sqrt(float(np.sum(a * a))) or 1.0
    rounds = _round_robin(m) if m > 1 else []
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        if _offdiag_norm(A) <= tol * ref:
            converged = True
            break
        sweeps += 1
        for p, q in rounds:
            apq = A[p, q]
            nz = apq != 0.0
            if not nz.any():
                continue
            p, q, apq = p[nz], q[nz], apq[nz]
            theta = (A[q, q] - A[p, p]) / (2.0 * apq)
            with np.errstate(over="ignore"):
                t = 1.0 / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(theta < 0.0, -t, t)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = c * Ap - s * Aq
            A[:, q] = s * Ap + c * Aq
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            A[p, q] = 0.0
            A[q, p] = 0.0
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = c * Vp - s * Vq
            V[:, q] = s * Vp + c * Vq
    if not converged and _offdiag_norm(A) <= tol * ref:
        converged = True
    return np.diag(A)[:n].copy(), V[:n, :n].copy(), sweeps, converged


def _householder_tridiag(a):
    n = a.shape[0]
    A = a.copy()
    Q = np.eye(n)
    for k in range(n - 2):
        x = A[k + 1:, k]
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        alpha = -math.copysign(nx, x[0])
        v = x.copy()
        v[0] -= alpha
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        v /= nv
        A[k + 1:, :] -= 2.0 * np.outer(v, v @ A[k + 1:, :])
        A[:, k + 1:] -= 2.0 * np.outer(A[:, k + 1:] @ v, v)
        Q[:, k + 1:] -= 2.0 * np.outer(Q[:, k + 1:] @ v, v)
    d = np.diag(A).copy()
    e = np.zeros(n)
    e[1:] = np.diag(A, -1)
    return d, e, Q


def _tql2(zt, d, e, max_iter):
    n = d.shape[0]
    e[:-1] = e[1:].copy()
    e[n - 1] = 0.0
    f = 0.0
    tst1 = 0.0
    eps = 2.0 ** -52
    total = 0
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n - 1 and abs(e[m]) > eps * tst1:
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
                d[l + 2:] -= h
                f += h
                p = d[m]
                c = c2 = c3 = 1.0
                el1 = e[l + 1]
                s = s2 = 0.0
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
                    hrow = zt[i + 1].copy()
                    zt[i + 1] = s * zt[i] + c * hrow
                    zt[i] = c * zt[i] - s * hrow
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= eps * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0
    return total, True


def tridiag_ql_eigh(a, max_iter):
    d, e, Q = _householder_tridiag(a)
    zt = Q.T.copy()
    total, ok = _tql2(zt, d, e, max_iter)
    return d, zt.T.copy(), total, ok


def floyd_warshall(dist):
    for k in range(dist.shape[0]):
        np.minimum(dist, dist[:, k, None] + dist[None, k, :], out=dist)
    return dist


def incircle_scan(tris, alive, xs, ys, px, py, rel_tol):
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    adx, ady = xs[a] - px, ys[a] - py
    bdx, bdy = xs[b] - px, ys[b] - py
    cdx, cdy = xs[c] - px, ys[c] - py
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = (alift * (bdx * cdy - cdx * bdy)
           + blift * (cdx * ady - adx * cdy)
           + clift * (adx * bdy - bdx * ady))
    perm = (alift * (np.abs(bdx * cdy) + np.abs(cdx * bdy))
            + blift * (np.abs(cdx * ady) + np.abs(adx * cdy))
            + clift * (np.abs(adx * bdy) + np.abs(bdx * ady)))
    out = (det > 0.0).astype(np.int8)
    out[np.abs(det) <= rel_tol * perm] = 2
    out[~alive] = 0
    return out
