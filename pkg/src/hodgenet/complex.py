"""Abstract simplicial complexes, boundary operators, Betti numbers and links.

Simplices are stored as ascending vertex tuples, ordered lexicographically
inside each dimension. Every matrix built elsewhere in the package uses this
row/column order.
"""
from __future__ import annotations

import io
import logging
import os
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from .errors import (
    ComplexFormatError,
    EmptyDimensionError,
    MalformedSimplexError,
    MissingSimplexError,
)

log = logging.getLogger(__name__)

# prime for the rational-rank proxy used by the torsion check
_RANK_PRIME = 2_147_483_647


class SimplicialComplex:
    """Immutable, downward-closed collection of simplices.

    Parameters
    ----------
    simplices_by_dim : sequence of sequences of vertex tuples
        Must already be downward closed, sorted and duplicate free; use
        :func:`build_complex` or :meth:`from_simplices` otherwise.
    weights : optional sequence of arrays, one per dimension
    coords : optional array indexed by vertex id, shape (max_vertex + 1, 2 or 3)
    alpha : optional sequence of arrays of filtration values, one per dimension
    """

    def __init__(self, simplices_by_dim, weights=None, coords=None, alpha=None, validate=True):
        self._simplices = tuple(tuple(tuple(s) for s in level) for level in simplices_by_dim)
        while self._simplices and not self._simplices[-1]:
            self._simplices = self._simplices[:-1]
        self.index_of = {}
        for d, level in enumerate(self._simplices):
            for i, s in enumerate(level):
                self.index_of[s] = (d, i)
        if weights is None:
            weights = [np.ones(len(level)) for level in self._simplices]
        self._weights = tuple(np.asarray(w, dtype=float) for w in weights[: len(self._simplices)])
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        self.alpha = None
        if alpha is not None:
            self.alpha = tuple(np.asarray(a, dtype=float) for a in alpha[: len(self._simplices)])
        self._star = None
        if validate:
            self._validate()

    @classmethod
    def from_simplices(cls, simplices, **kwargs):
        """Build from an arbitrary (closed) iterable of simplices, sorting them."""
        by_dim = {}
        for s in simplices:
            s = tuple(sorted(s))
            by_dim.setdefault(len(s) - 1, set()).add(s)
        top = max(by_dim, default=-1)
        levels = [sorted(by_dim.get(d, ())) for d in range(top + 1)]
        return cls(levels, **kwargs)

    def _validate(self):
        if len(self.index_of) != sum(len(level) for level in self._simplices):
            raise MalformedSimplexError("duplicate simplices")
        for d, level in enumerate(self._simplices):
            for s in level:
                if len(s) != d + 1 or any(a >= b for a, b in zip(s, s[1:])):
                    raise MalformedSimplexError(f"simplex {s} is not strictly increasing of dim {d}")
                if s[0] < 0:
                    raise MalformedSimplexError(f"negative vertex id in {s}")
                if d > 0:
                    for face in combinations(s, d):
                        if face not in self.index_of:
                            raise MalformedSimplexError(f"face {face} of {s} missing")
            if list(level) != sorted(level):
                raise MalformedSimplexError(f"dimension {d} not in lexicographic order")
        if len(self._weights) != len(self._simplices):
            raise ValueError("weights must have one array per dimension")
        for d, w in enumerate(self._weights):
            if w.shape != (len(self._simplices[d]),):
                raise ValueError(f"weights for dim {d} have wrong length")
            if not np.all(w > 0):
                raise ValueError("simplex weights must be strictly positive")

    # -- basic accessors -------------------------------------------------

    @property
    def dim(self):
        """Top dimension, -1 for the empty complex."""
        return len(self._simplices) - 1

    @property
    def simplices_by_dim(self):
        return self._simplices

    def simplices(self, d):
        if 0 <= d < len(self._simplices):
            return self._simplices[d]
        return ()

    def count(self, d):
        return len(self.simplices(d))

    def counts(self):
        return [len(level) for level in self._simplices]

    def weights(self, d):
        if 0 <= d < len(self._weights):
            return self._weights[d]
        return np.zeros(0)

    @property
    def vertices(self):
        return [s[0] for s in self.simplices(0)]

    def __contains__(self, simplex):
        return tuple(sorted(simplex)) in self.index_of

    def __len__(self):
        return len(self.index_of)

    def __eq__(self, other):
        return isinstance(other, SimplicialComplex) and self._simplices == other._simplices

    def __hash__(self):
        return hash(self._simplices)

    def __repr__(self):
        return f"SimplicialComplex(counts={self.counts()})"

    def index(self, simplex):
        key = tuple(sorted(simplex))
        try:
            return self.index_of[key][1]
        except KeyError:
            raise MissingSimplexError(f"simplex {key} not in complex") from None

    def maximal_simplices(self):
        out = []
        for d, level in enumerate(self._simplices):
            for s in level:
                if not any(len(c) > len(s) for c in self.cofaces(s)):
                    out.append(s)
        return out

    def _star_index(self):
        if self._star is None:
            star = {}
            for level in self._simplices:
                for s in level:
                    for v in s:
                        star.setdefault(v, []).append(s)
            self._star = star
        return self._star

    def cofaces(self, simplex):
        """All simplices containing ``simplex`` (itself included)."""
        key = tuple(sorted(simplex))
        if key not in self.index_of:
            raise MissingSimplexError(f"simplex {key} not in complex")
        cand = self._star_index().get(key[0], [])
        ks = set(key)
        return [s for s in cand if ks.issubset(s)]

    def skeleton(self, d):
        return SimplicialComplex(
            self._simplices[: d + 1],
            weights=self._weights[: d + 1],
            coords=self.coords,
            alpha=None if self.alpha is None else self.alpha[: d + 1],
            validate=False,
        )

    def subcomplex(self, keep):
        """Subcomplex from a per-dimension list of boolean masks (must be closed)."""
        levels, weights, alpha = [], [], []
        for d, level in enumerate(self._simplices):
            mask = np.asarray(keep[d], dtype=bool) if d < len(keep) else np.zeros(len(level), bool)
            levels.append([s for s, k in zip(level, mask) if k])
            weights.append(self._weights[d][mask])
            if self.alpha is not None:
                alpha.append(self.alpha[d][mask])
        return SimplicialComplex(
            levels,
            weights=weights,
            coords=self.coords,
            alpha=alpha if self.alpha is not None else None,
        )


def build_complex(maximal_simplices, weights=None, coords=None, alpha=None):
    """Downward closure of a list of vertex lists."""
    closed = set()
    for raw in maximal_simplices:
        s = tuple(int(v) for v in raw)
        if not s:
            raise MalformedSimplexError("empty simplex")
        if len(set(s)) != len(s):
            raise MalformedSimplexError(f"duplicate vertices in simplex {list(raw)}")
        if min(s) < 0:
            raise MalformedSimplexError(f"negative vertex id in {list(raw)}")
        s = tuple(sorted(s))
        if s in closed:
            continue
        for k in range(1, len(s) + 1):
            closed.update(combinations(s, k))
    return SimplicialComplex.from_simplices(closed, weights=weights, coords=coords, alpha=alpha)


def boundary_matrix(K, d):
    """Signed boundary operator from d-simplices to (d-1)-simplices.

    Column j for ``s = (v0, ..., vd)`` holds ``(-1)**i`` in the row of the face
    obtained by dropping ``vi``. Returns an integer CSC matrix.
    """
    if d < 1:
        raise ValueError("boundary_matrix needs d >= 1")
    if d > K.dim or K.count(d) == 0:
        raise EmptyDimensionError(f"complex has no simplices in dimension {d}")
    rows, cols, vals = [], [], []
    index_of = K.index_of
    for j, s in enumerate(K.simplices(d)):
        for i in range(d + 1):
            face = s[:i] + s[i + 1:]
            rows.append(index_of[face][1])
            cols.append(j)
            vals.append(1 if i % 2 == 0 else -1)
    shape = (K.count(d - 1), K.count(d))
    return sp.csc_matrix((np.array(vals, dtype=np.int64), (rows, cols)), shape=shape)


def _boundary_or_empty(K, d):
    if d < 1 or d > K.dim:
        return sp.csc_matrix((K.count(d - 1) if d >= 1 else 0, K.count(d)), dtype=np.int64)
    return boundary_matrix(K, d)


def _z2_columns(K, d):
    # boundary columns as python-int bitsets over (d-1)-simplex indices
    index_of = K.index_of
    cols = []
    for s in K.simplices(d):
        mask = 0
        for i in range(d + 1):
            mask |= 1 << index_of[s[:i] + s[i + 1:]][1]
        cols.append(mask)
    return cols


def z2_rank(columns):
    """Rank over Z/2 of a list of bitset columns."""
    pivots = {}
    rank = 0
    for c in columns:
        while c:
            top = c.bit_length() - 1
            p = pivots.get(top)
            if p is None:
                pivots[top] = c
                rank += 1
                break
            c ^= p
    return rank


def boundary_rank_z2(K, d):
    if d < 1 or d > K.dim:
        return 0
    return z2_rank(_z2_columns(K, d))


def boundary_rank_modp(K, d, p=_RANK_PRIME):
    """Rank of the boundary over GF(p); equals the rational rank barring
    a p-divisible minor, which is used as the rational proxy."""
    if d < 1 or d > K.dim:
        return 0
    index_of = K.index_of
    pivots = {}
    rank = 0
    for s in K.simplices(d):
        col = {}
        for i in range(d + 1):
            col[index_of[s[:i] + s[i + 1:]][1]] = 1 if i % 2 == 0 else p - 1
        while col:
            low = max(col)
            piv = pivots.get(low)
            if piv is None:
                inv = pow(col[low], p - 2, p)
                pivots[low] = {k: v * inv % p for k, v in col.items()}
                rank += 1
                break
            f = col[low]
            for k, v in piv.items():
                nv = (col.get(k, 0) - f * v) % p
                if nv:
                    col[k] = nv
                else:
                    col.pop(k, None)
    return rank


def betti_numbers(K, max_dim=None, check_torsion=False):
    """Betti numbers over Z/2 for dimensions 0..max_dim.

    Dimensions above the top dimension of ``K`` contribute zeros, so the
    result always has ``max_dim + 1`` entries. With ``check_torsion`` a warning
    is logged when ranks over Z/2 and over the rationals disagree.
    """
    if max_dim is None:
        max_dim = max(K.dim, 0)
    ranks = [boundary_rank_z2(K, d) for d in range(max_dim + 2)]
    betti = []
    for d in range(max_dim + 1):
        rk_d = ranks[d] if d >= 1 else 0
        betti.append(K.count(d) - rk_d - ranks[d + 1])
    if check_torsion:
        for d in range(1, min(max_dim + 1, K.dim) + 1):
            if boundary_rank_modp(K, d) != ranks[d]:
                log.warning(
                    "boundary rank in dimension %d differs over Z/2 and Q; "
                    "complex has torsion and Z/2 Betti numbers differ from real ones", d - 1,
                )
                break
    return betti


def has_torsion(K):
    return any(boundary_rank_modp(K, d) != boundary_rank_z2(K, d) for d in range(1, K.dim + 1))


def euler_characteristic(K):
    return sum((-1) ** d * n for d, n in enumerate(K.counts()))


def link(K, simplex):
    """Link of ``simplex``: all tau disjoint from it whose union with it is in K."""
    key = tuple(sorted(simplex))
    if key not in K.index_of:
        raise MissingSimplexError(f"simplex {key} not in complex")
    ks = set(key)
    out = set()
    for c in K.cofaces(key):
        if len(c) > len(key):
            out.add(tuple(v for v in c if v not in ks))
    return SimplicialComplex.from_simplices(out, coords=K.coords)


# -- text format -----------------------------------------------------------

def _parse_float(tok, lineno):
    try:
        return float(tok)
    except ValueError:
        raise ComplexFormatError(f"expected a number, got {tok!r}", lineno) from None


def _parse_int(tok, lineno):
    try:
        return int(tok)
    except ValueError:
        raise ComplexFormatError(f"expected an integer, got {tok!r}", lineno) from None


def parse_complex(text):
    """Parse the line-oriented complex format.

    ::

        dim 2 vertices 4
        0 1 2
        1 3
        # coords
        v 0 0.0 0.0
        ...
        # weights
        w 1 0 2.5
        # alpha
        a 1 0 0.25
    """
    header = None
    maximal = []
    section = None
    coords = {}
    weight_lines = []
    alpha_lines = []
    section_line = {}
    header_line = 1
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            name = line[1:].strip().lower()
            if name in ("coords", "weights", "alpha"):
                section = name
                section_line[name] = lineno
            continue
        toks = line.split()
        if header is None:
            if len(toks) != 4 or toks[0] != "dim" or toks[2] != "vertices":
                raise ComplexFormatError("header must read 'dim <D> vertices <N>'", lineno)
            header = (_parse_int(toks[1], lineno), _parse_int(toks[3], lineno))
            header_line = lineno
            if header[0] < 0 or header[1] < 0:
                raise ComplexFormatError("negative dimension or vertex count", lineno)
            continue
        if section is None:
            verts = [_parse_int(t, lineno) for t in toks]
            if len(set(verts)) != len(verts):
                raise ComplexFormatError(f"duplicate vertex in simplex {verts}", lineno)
            if any(v < 0 or v >= header[1] for v in verts):
                raise ComplexFormatError(f"vertex id out of range [0, {header[1]})", lineno)
            if len(verts) - 1 > header[0]:
                raise ComplexFormatError(f"simplex of dimension {len(verts) - 1} exceeds declared dim {header[0]}", lineno)
            maximal.append(verts)
        elif section == "coords":
            if toks[0] != "v" or len(toks) not in (4, 5):
                raise ComplexFormatError("coords lines read 'v <id> <x> <y> [<z>]'", lineno)
            vid = _parse_int(toks[1], lineno)
            if vid < 0 or vid >= header[1]:
                raise ComplexFormatError(f"coords for unknown vertex {vid}", lineno)
            if vid in coords:
                raise ComplexFormatError(f"duplicate coords for vertex {vid}", lineno)
            coords[vid] = [_parse_float(t, lineno) for t in toks[2:]]
        else:
            tag = "w" if section == "weights" else "a"
            if toks[0] != tag or len(toks) != 4:
                raise ComplexFormatError(f"{section} lines read '{tag} <dim> <index> <value>'", lineno)
            entry = (_parse_int(toks[1], lineno), _parse_int(toks[2], lineno), _parse_float(toks[3], lineno), lineno)
            (weight_lines if tag == "w" else alpha_lines).append(entry)
    if header is None:
        raise ComplexFormatError("missing header", 1)
    D, N = header
    maximal.extend([v] for v in range(N))
    K = build_complex(maximal)
    if K.dim != D and not (N == 0 and D == 0):
        raise ComplexFormatError(f"declared dim {D} but complex has top dimension {K.dim}", header_line)
    coord_arr = None
    if coords:
        widths = {len(c) for c in coords.values()}
        if len(widths) != 1:
            raise ComplexFormatError("mixed 2D/3D coordinates", section_line["coords"])
        missing = sorted(set(range(N)) - set(coords))
        if missing:
            raise ComplexFormatError(f"coords section incomplete: vertex {missing[0]} has no coordinates",
                                     section_line["coords"])
        coord_arr = np.array([coords[v] for v in range(N)], dtype=float)
    weights = None
    if weight_lines:
        weights = [np.ones(n) for n in K.counts()]
        for d, i, val, lineno in weight_lines:
            if not (0 <= d <= K.dim and 0 <= i < K.count(d)):
                raise ComplexFormatError(f"weight for nonexistent simplex ({d}, {i})", lineno)
            if not val > 0:
                raise ComplexFormatError("weights must be strictly positive", lineno)
            weights[d][i] = val
    alpha = None
    if alpha_lines:
        alpha = [np.zeros(n) for n in K.counts()]
        for d, i, val, lineno in alpha_lines:
            if not (0 <= d <= K.dim and 0 <= i < K.count(d)):
                raise ComplexFormatError(f"alpha for nonexistent simplex ({d}, {i})", lineno)
            alpha[d][i] = val
    return SimplicialComplex(K.simplices_by_dim, weights=weights, coords=coord_arr, alpha=alpha, validate=False)


def read_complex(path):
    with open(path) as fh:
        return parse_complex(fh.read())


def format_complex(K):
    n_vertices = (max(K.vertices) + 1) if K.count(0) else 0
    lines = [f"dim {max(K.dim, 0)} vertices {n_vertices}"]
    for s in K.maximal_simplices():
        lines.append(" ".join(map(str, s)))
    if K.coords is not None:
        lines.append("# coords")
        for v in range(n_vertices):
            lines.append("v %d " % v + " ".join(repr(float(x)) for x in K.coords[v]))
    if any(np.any(K.weights(d) != 1.0) for d in range(K.dim + 1)):
        lines.append("# weights")
        for d in range(K.dim + 1):
            for i, w in enumerate(K.weights(d)):
                if w != 1.0:
                    lines.append(f"w {d} {i} {float(w)!r}")
    if K.alpha is not None:
        lines.append("# alpha")
        for d in range(K.dim + 1):
            for i, a in enumerate(K.alpha[d]):
                lines.append(f"a {d} {i} {float(a)!r}")
    return "\n".join(lines) + "\n"


def write_complex(K, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write(format_complex(K))
