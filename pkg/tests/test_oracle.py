import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings

from hodgenet.complex import betti_numbers, boundary_matrix, build_complex
from hodgenet.dataset.shapes import annulus_complex, double_annulus
from hodgenet.errors import SizeGuardError
from hodgenet.oracle import (
    brute_force_distance, hop_distance_target, optimal_h1_basis, read_generators, read_labels,
    write_generators, write_labels,
)

from conftest import graph_complexes, hexagon_annulus


def test_hollow_triangle_basis(hollow):
    B = optimal_h1_basis(hollow)
    assert B.rank == 1 and B.generators[0] == (0, 1, 2) and B.lengths[0] == 3
    assert hop_distance_target(hollow, B).values.tolist() == [0.0, 0.0, 0.0]


def test_filled_triangle(filled):
    B = optimal_h1_basis(filled)
    assert B.rank == 0
    T = hop_distance_target(filled, B)
    assert T.values.tolist() == [1.0, 1.0, 1.0]
    assert brute_force_distance(filled, B).values.tolist() == [1.0, 1.0, 1.0]


def test_pendant_edge():
    K = build_complex([[0, 1], [1, 2], [0, 2], [2, 3]])
    T = hop_distance_target(K, optimal_h1_basis(K))
    assert T.raw_hops.tolist() == [0, 0, 0, 1]
    assert T.values.tolist() == [0.0, 0.0, 0.0, 1.0]


def test_hexagon_annulus_generator(annulus):
    B = optimal_h1_basis(annulus, metric="unit")
    assert B.lengths == [6]
    edges = annulus.simplices(1)
    gen = {edges[i] for i in B.generators[0]}
    assert gen == {tuple(sorted((k, (k + 1) % 6))) for k in range(6)}
    T = hop_distance_target(annulus, B)
    # inner ring 0, everything else one hop away (all other edges touch the inner ring or not)
    hand = []
    for u, v in edges:
        if u < 6 and v < 6:
            hand.append(0)
        elif u < 6 or v < 6:
            hand.append(1)
        else:
            hand.append(2)
    assert T.raw_hops.tolist() == hand
    assert np.array_equal(brute_force_distance(annulus, B).raw_hops, T.raw_hops)


# -- exhaustive search oracle -------------------------------------------------

def _gf2_rank(rows):
    M = np.array(rows, dtype=np.uint8) % 2
    if M.size == 0:
        return 0
    r = 0
    for c in range(M.shape[1]):
        piv = np.flatnonzero(M[r:, c])
        if piv.size == 0:
            continue
        p = r + piv[0]
        M[[r, p]] = M[[p, r]]
        below = np.flatnonzero(M[:, c])
        below = below[below != r]
        M[below] ^= M[r]
        r += 1
        if r == M.shape[0]:
            break
    return r


def exhaustive_lengths(K):
    """Sorted lengths of a minimum H1 basis by matroid greedy over all simple cycles."""
    edges = list(K.simplices(1))
    eidx = {e: i for i, e in enumerate(edges)}
    G = nx.Graph(edges)
    G.add_nodes_from(v for (v,) in K.simplices(0))
    cycles = []
    for cyc in nx.simple_cycles(G):
        if len(cyc) < 3:
            continue
        vec = np.zeros(len(edges), dtype=np.uint8)
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            vec[eidx[tuple(sorted((a, b)))]] = 1
        cycles.append(vec)
    cycles.sort(key=lambda v: int(v.sum()))
    bnd = []
    if K.dim >= 2:
        B2 = boundary_matrix(K, 2).toarray()
        bnd = [np.abs(B2[:, j]) % 2 for j in range(B2.shape[1])]
    base = _gf2_rank(bnd) if bnd else 0
    chosen, lengths = list(bnd), []
    for v in cycles:
        if _gf2_rank(chosen + [v]) > base + len(lengths):
            chosen.append(v)
            lengths.append(int(v.sum()))
    return lengths


def _torus():
    # 7-vertex Moebius-Kantor style minimal torus triangulation
    tris = []
    for i in range(7):
        tris.append(sorted([i, (i + 1) % 7, (i + 3) % 7]))
        tris.append(sorted([i, (i + 2) % 7, (i + 3) % 7]))
    return build_complex(tris)


def _theta():
    return build_complex([[0, 1], [1, 2], [2, 3], [3, 0], [0, 4], [4, 2]])


def _rp2():
    return build_complex([[0, 1, 3], [0, 1, 4], [0, 2, 3], [0, 2, 5], [0, 4, 5],
                          [1, 2, 4], [1, 2, 5], [1, 3, 5], [2, 3, 4], [3, 4, 5]])


def _grid_with_hole():
    vid = lambda i, j: j * 4 + i
    tris = []
    for j in range(3):
        for i in range(3):
            if (i, j) != (1, 1):
                a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
                tris += [[a, b, c], [a, c, d]]
    return build_complex(tris)


HAND_BUILT = {
    "hollow": lambda: build_complex([[0, 1], [1, 2], [0, 2]]),
    "square_with_tail": lambda: build_complex([[0, 1], [1, 2], [2, 3], [0, 3], [3, 4]]),
    "theta": _theta,
    "k4_graph": lambda: build_complex([list(e) for e in itertools.combinations(range(4), 2)]),
    "hexagon_annulus": hexagon_annulus,
    "annulus8": lambda: annulus_complex(8),
    "double_annulus": lambda: double_annulus(4),
    "torus": _torus,
    "rp2": _rp2,
    "grid_with_hole": _grid_with_hole,
}


@pytest.mark.parametrize("name", list(HAND_BUILT))
def test_greedy_matches_exhaustive(name):
    K = HAND_BUILT[name]()
    assert K.count(1) <= 40
    B = optimal_h1_basis(K, metric="unit")
    assert B.rank == betti_numbers(K, 1)[1]
    assert sorted(int(x) for x in B.lengths) == exhaustive_lengths(K)


@pytest.mark.parametrize("name", list(HAND_BUILT))
def test_generators_are_independent_cycles(name):
    K = HAND_BUILT[name]()
    B = optimal_h1_basis(K, metric="unit")
    B1 = boundary_matrix(K, 1).toarray()
    vecs = []
    for g in B.generators:
        v = np.zeros(K.count(1), dtype=np.uint8)
        v[list(g)] = 1
        assert not np.any((B1 @ v) % 2)
        vecs.append(v)
    bnd = [np.abs(c) % 2 for c in boundary_matrix(K, 2).toarray().T] if K.dim >= 2 else []
    assert _gf2_rank(bnd + vecs) == _gf2_rank(bnd) + len(vecs)
    assert list(B.lengths) == sorted(B.lengths)


@settings(max_examples=60, deadline=None)
@given(graph_complexes())
def test_targets_match_brute_force(K):
    B = optimal_h1_basis(K)
    T = hop_distance_target(K, B)
    R = brute_force_distance(K, B)
    assert np.array_equal(T.raw_hops, R.raw_hops)
    assert np.array_equal(T.values, R.values)
    assert np.all((T.values >= 0) & (T.values <= 1))
    on = B.edge_set()
    for i in range(K.count(1)):
        assert (T.values[i] == 0) == (i in on)


@settings(max_examples=30, deadline=None)
@given(graph_complexes())
def test_greedy_matches_exhaustive_random(K):
    assert sorted(int(x) for x in optimal_h1_basis(K, metric="unit").lengths) == exhaustive_lengths(K)


def test_size_guard():
    edges = [[i, i + 1] for i in range(201)]
    K = build_complex(edges)
    with pytest.raises(SizeGuardError):
        brute_force_distance(K, optimal_h1_basis(K))


def test_component_normalization():
    # a triangle with a 2-edge tail, plus a separate triangle with a 1-edge tail
    K = build_complex([[0, 1], [1, 2], [0, 2], [2, 3], [3, 4], [5, 6], [6, 7], [5, 7], [7, 8]])
    B = optimal_h1_basis(K)
    g = hop_distance_target(K, B, normalize="global")
    c = hop_distance_target(K, B, normalize="component")
    i = K.index_of[(7, 8)][1]
    assert g.values[i] == 0.5 and c.values[i] == 1.0


def test_label_and_generator_io(tmp_path, annulus):
    B = optimal_h1_basis(annulus)
    T = hop_distance_target(annulus, B)
    write_labels(T, str(tmp_path / "l.csv"))
    write_generators(B, str(tmp_path / "g.txt"))
    back = read_labels(str(tmp_path / "l.csv"))
    assert np.array_equal(back.values, T.values) and np.array_equal(back.raw_hops, T.raw_hops)
    assert read_generators(str(tmp_path / "g.txt")) == list(B.generators)
    assert (tmp_path / "l.csv").read_text().splitlines()[0] == "edge_index,hops,normalized"
