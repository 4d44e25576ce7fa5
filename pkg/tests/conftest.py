import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from hodgenet.complex import build_complex


def hollow_triangle():
    return build_complex([[0, 1], [1, 2], [0, 2]])


def filled_triangle():
    return build_complex([[0, 1, 2]])


def tetra_boundary():
    return build_complex([[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]])


def hexagon_annulus():
    """Hexagonal hole (0..5) inside a triangulated band (outer ring 6..11)."""
    tris = []
    for k in range(6):
        k1 = (k + 1) % 6
        tris += [[k, k1, 6 + k], [k1, 6 + k, 6 + k1]]
    ang = np.linspace(0, 2 * np.pi, 7)[:-1]
    coords = np.vstack([np.c_[np.cos(ang), np.sin(ang)], 2 * np.c_[np.cos(ang + np.pi / 6), np.sin(ang + np.pi / 6)]])
    return build_complex([sorted(t) for t in tris], coords=coords)


@pytest.fixture
def hollow():
    return hollow_triangle()


@pytest.fixture
def filled():
    return filled_triangle()


@pytest.fixture
def tetra():
    return tetra_boundary()


@pytest.fixture
def annulus():
    return hexagon_annulus()


def random_complex(rng, n_vertices=8, n_max=6, max_dim=3, p=0.5):
    """Closure of random maximal simplices; vertex ids 0..n_vertices-1 all present."""
    simplices = [[v] for v in range(n_vertices)]
    for _ in range(rng.integers(1, n_max + 1)):
        k = int(rng.integers(1, max_dim + 2))
        simplices.append(sorted(rng.choice(n_vertices, size=min(k, n_vertices), replace=False).tolist()))
    return build_complex(simplices)


@st.composite
def complexes(draw, max_vertices=8, max_dim=3, max_maximal=6):
    n = draw(st.integers(2, max_vertices))
    verts = list(range(n))
    maximal = [[v] for v in verts]
    for _ in range(draw(st.integers(1, max_maximal))):
        k = draw(st.integers(2, min(max_dim + 1, n)))
        maximal.append(sorted(draw(st.lists(st.sampled_from(verts), min_size=k, max_size=k, unique=True))))
    return build_complex(maximal)


@st.composite
def graph_complexes(draw, max_vertices=9):
    """Random 2-complexes: a random graph plus a random subset of its triangles."""
    n = draw(st.integers(3, max_vertices))
    pairs = list(itertools.combinations(range(n), 2))
    edges = draw(st.lists(st.sampled_from(pairs), min_size=2, max_size=min(len(pairs), 16), unique=True))
    es = set(edges)
    tris = [t for t in itertools.combinations(range(n), 3)
            if (t[0], t[1]) in es and (t[1], t[2]) in es and (t[0], t[2]) in es]
    keep = draw(st.lists(st.booleans(), min_size=len(tris), max_size=len(tris)))
    maximal = [list(e) for e in edges] + [list(t) for t, k in zip(tris, keep) if k]
    return build_complex(maximal)
