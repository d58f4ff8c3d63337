import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hodgewatch.complex import (
    SimplicialComplex,
    boundary_matrix,
    build_complex,
    check_closure,
    clique_lift,
    permute_vertices,
    weighted_boundary,
)
from hodgewatch.errors import (
    ClosureViolation,
    DuplicateSimplex,
    MissingWeights,
    NonPositiveWeight,
    NotABijection,
    RankOutOfRange,
)

from .oracles import brute_force_cliques, random_graph

REFERENCE = [(1, 2, 3), (1, 4)]


def reference():
    return build_complex(REFERENCE)


def test_completion_inserts_faces():
    c = reference()
    assert c.simplex_list() == [
        (1,), (2,), (3,), (4,),
        (1, 2), (1, 3), (1, 4), (2, 3),
        (1, 2, 3),
    ]
    assert check_closure(c)


def test_completed_faces_get_unit_weight():
    c = build_complex([(1, 2, 3)], weights=[5.0])
    assert c.weight(2).tolist() == [5.0]
    assert c.weight(1).tolist() == [1.0, 1.0, 1.0]
    assert c.weight(0).tolist() == [1.0, 1.0, 1.0]


def test_empty_complex():
    c = build_complex([])
    assert c.rank_max == -1
    assert c.counts() == ()
    with pytest.raises(RankOutOfRange):
        boundary_matrix(c, 1)


def test_hollow_triangle_is_closed():
    c = build_complex([(1, 2), (2, 3), (1, 3), (1,), (2,), (3,)], closure="reject")
    assert c.counts() == (3, 3)


def test_reject_missing_face():
    with pytest.raises(ClosureViolation):
        build_complex([(1, 2, 3)], closure="reject")


def test_duplicate_and_weights_rejected():
    with pytest.raises(DuplicateSimplex):
        build_complex([(1, 2), (2, 1)])
    with pytest.raises(NonPositiveWeight):
        build_complex([(1, 2)], weights=[0.0])
    with pytest.raises(NonPositiveWeight):
        build_complex([(1, 2)], weights=[-1.0])


def test_reference_unsigned_boundaries():
    c = reference()
    b1 = boundary_matrix(c, 1, mode="unsigned").toarray()
    b2 = boundary_matrix(c, 2, mode="unsigned").toarray()
    assert b1.tolist() == [
        [1, 1, 1, 0],
        [1, 0, 0, 1],
        [0, 1, 0, 1],
        [0, 0, 1, 0],
    ]
    assert b2.tolist() == [[1], [1], [0], [1]]


def test_signed_orientation():
    c = build_complex([(0, 1, 2)])
    b1 = boundary_matrix(c, 1).toarray()
    # edge (0,1): deleting vertex 0 leaves (1) with +1, deleting 1 leaves (0) with -1
    assert b1[:, 0].tolist() == [-1, 1, 0]
    b2 = boundary_matrix(c, 2).toarray()
    # faces (1,2), (0,2), (0,1) with signs +, -, +
    assert b2[:, 0].tolist() == [1, -1, 1]


def test_rank_out_of_range():
    c = reference()
    with pytest.raises(RankOutOfRange):
        boundary_matrix(c, 0)
    with pytest.raises(RankOutOfRange):
        boundary_matrix(c, 3)


def test_laplacian_zero_is_graph_laplacian():
    rng = np.random.default_rng(3)
    edges = random_graph(12, 0.4, rng)
    c = clique_lift(edges, 1, vertices=range(12))
    b1 = boundary_matrix(c, 1).toarray()
    A = np.zeros((12, 12))
    for u, v in edges:
        A[u, v] = A[v, u] = 1
    assert np.array_equal(b1 @ b1.T, np.diag(A.sum(1)) - A)


def test_weighted_boundary_formula():
    c = build_complex([(1,), (2,), (1, 2)], weights=[2.0, 2.0, 4.0])
    assert weighted_boundary(c, 1).toarray().ravel().tolist() == [-2.0, 2.0]


def test_weighted_boundary_unit_weights_matches_signed():
    c = build_complex(REFERENCE, weights=[1.0, 1.0])
    assert np.array_equal(weighted_boundary(c, 2).toarray(), boundary_matrix(c, 2).toarray())


def test_weighted_boundary_needs_weights():
    with pytest.raises(MissingWeights):
        weighted_boundary(reference(), 1)


def test_weighted_chain_identity_reference():
    rng = np.random.default_rng(0)
    c = reference()
    w = [rng.uniform(0.1, 5.0, c.count(k)) for k in range(3)]
    cw = SimplicialComplex(c.simplices, tuple(w))
    prod = weighted_boundary(cw, 1).toarray() @ weighted_boundary(cw, 2).toarray()
    assert np.allclose(prod, 0.0, atol=1e-12)


def test_clique_lift_k3():
    tri = [(1, 2), (2, 3), (1, 3)]
    assert clique_lift(tri, 2).counts() == (3, 3, 1)
    assert clique_lift(tri, 1).counts() == (3, 3)


def test_clique_lift_k4_counts():
    k4 = list(itertools.combinations(range(4), 2))
    assert clique_lift(k4, 2).counts() == (4, 6, 4)
    assert clique_lift(k4, 3).counts() == (4, 6, 4, 1)


def test_clique_lift_rank_zero_keeps_vertices():
    c = clique_lift([(0, 5)], 0)
    assert c.counts() == (2,)


def test_permute_swap():
    c = permute_vertices(reference(), {1: 4, 2: 2, 3: 3, 4: 1})
    assert c.rank(2).tolist() == [[2, 3, 4]]
    assert [1, 4] in c.rank(1).tolist()


def test_permute_identity_and_bad_perm():
    c = reference()
    assert permute_vertices(c, {v: v for v in range(1, 5)}) == c
    with pytest.raises(NotABijection):
        permute_vertices(c, {1: 2, 2: 2, 3: 3, 4: 4})
    with pytest.raises(NotABijection):
        permute_vertices(c, {1: 1, 2: 2, 3: 3})


def test_complex_is_immutable():
    c = reference()
    with pytest.raises(ValueError):
        c.rank(1)[0, 0] = 9


graphs = st.integers(min_value=0, max_value=2**32 - 1).flatmap(
    lambda seed: st.tuples(st.just(seed), st.integers(1, 18), st.floats(0.0, 1.0))
)


@settings(max_examples=60, deadline=None)
@given(graphs, st.integers(0, 4))
def test_clique_counts_match_brute_force(g, K):
    seed, n, p = g
    edges = random_graph(n, p, np.random.default_rng(seed))
    c = clique_lift(edges, K, vertices=range(n))
    expected = brute_force_cliques(n, edges, K)
    got = [sorted(map(tuple, c.rank(k).tolist())) for k in range(c.rank_max + 1)]
    assert got == expected
    assert check_closure(c)


@settings(max_examples=60, deadline=None)
@given(graphs)
def test_lift_rank_one_keeps_edges(g):
    seed, n, p = g
    edges = random_graph(n, p, np.random.default_rng(seed))
    c = clique_lift(edges, 1, vertices=range(n))
    got = sorted(map(tuple, c.rank(1).tolist())) if c.rank_max >= 1 else []
    assert got == sorted(edges)


@settings(max_examples=60, deadline=None)
@given(graphs, st.integers(2, 4))
def test_chain_identity(g, K):
    seed, n, p = g
    c = clique_lift(random_graph(n, p, np.random.default_rng(seed)), K, vertices=range(n))
    for k in range(1, c.rank_max):
        prod = boundary_matrix(c, k) @ boundary_matrix(c, k + 1)
        assert prod.count_nonzero() == 0 or not np.any(prod.toarray())


@settings(max_examples=60, deadline=None)
@given(graphs, st.integers(1, 3))
def test_boundary_columns_have_k_plus_one_entries(g, K):
    seed, n, p = g
    c = clique_lift(random_graph(n, p, np.random.default_rng(seed)), K, vertices=range(n))
    for k in range(1, c.rank_max + 1):
        b = boundary_matrix(c, k).toarray()
        assert (np.count_nonzero(b, axis=0) == k + 1).all()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permutation_preserves_counts_and_closure(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 15))
    c = clique_lift(random_graph(n, 0.5, rng), 3, vertices=range(n))
    targets = rng.permutation(100)[:n]
    p = permute_vertices(c, dict(zip(range(n), targets.tolist())))
    assert p.counts() == c.counts()
    assert check_closure(p)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.integers(0, 9), min_size=1, max_size=4, unique=True), max_size=8))
def test_completion_is_closed_and_canonical(simplices):
    uniq = {tuple(sorted(s)) for s in simplices}
    c = build_complex(sorted(uniq))
    assert check_closure(c)
    for k in range(c.rank_max + 1):
        rows = c.rank(k).tolist()
        assert rows == sorted(rows)
        assert all(r == sorted(r) for r in rows)
        assert len({tuple(r) for r in rows}) == len(rows)
