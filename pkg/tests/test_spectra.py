import itertools

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from hodgewatch.complex import SimplicialComplex, build_complex, clique_lift, permute_vertices
from hodgewatch.errors import MissingWeights
from hodgewatch.spectra import (
    blocks_per_rank,
    hodge_laplacian,
    normalize_feature,
    snapshot_features,
    top_singular_values,
)

from .oracles import betti_numbers, dense_laplacian, random_graph, ranks_of


def eig(m):
    return np.sort(np.linalg.eigvalsh(m.toarray() if sp.issparse(m) else m))[::-1]


def test_k3_graph_laplacian_spectrum():
    c = build_complex([(1, 2), (2, 3), (1, 3)])
    assert np.allclose(eig(hodge_laplacian(c, 0)), [3, 3, 0])


def test_triangle_edge_spectra():
    filled = build_complex([(1, 2, 3)])
    hollow = build_complex([(1, 2), (2, 3), (1, 3)])
    assert np.allclose(eig(hodge_laplacian(filled, 1)), [3, 3, 3])
    assert np.allclose(eig(hodge_laplacian(hollow, 1)), [3, 3, 0])
    assert hodge_laplacian(filled, 1).diagonal().sum() == 9
    assert hodge_laplacian(hollow, 1).diagonal().sum() == 6


def test_parts_sum_to_full():
    c = build_complex([(0, 1, 2), (1, 2, 3), (3, 4)])
    for k in range(3):
        down = hodge_laplacian(c, k, "down").toarray()
        up = hodge_laplacian(c, k, "up").toarray()
        assert np.array_equal(down + up, hodge_laplacian(c, k, "full").toarray())


def test_laplacian_empty_rank():
    c = build_complex([(0, 1)])
    assert hodge_laplacian(c, 2).shape == (0, 0)


def test_weighted_laplacian_needs_weights():
    with pytest.raises(MissingWeights):
        hodge_laplacian(build_complex([(0, 1)]), 0, weighted=True)


def test_weighted_laplacian_unit_weights():
    c = build_complex([(0, 1, 2), (2, 3)], weights=[1.0, 1.0])
    for k in range(3):
        a = hodge_laplacian(c, k, weighted=True).toarray()
        b = hodge_laplacian(c, k).toarray()
        assert np.allclose(a, b)


def test_top_values_diagonal():
    m = sp.diags([5.0, 3.0, 1.0])
    for method in ("dense", "lanczos", "randomized", "auto"):
        assert np.allclose(top_singular_values(m, 2, method=method), [5, 3])


def test_top_values_empty():
    assert top_singular_values(sp.csr_matrix((0, 0)), 3).shape == (0,)


def test_top_values_caps_at_dim():
    assert top_singular_values(np.eye(2), 5).tolist() == [1.0, 1.0]


def _random_psd(n, density, seed):
    rng = np.random.default_rng(seed)
    B = sp.random(n, n // 2, density=density, random_state=rng)
    return (B @ B.T).tocsr()


def test_lanczos_sparse_psd_500():
    m = _random_psd(500, 0.02, 7)
    assert np.allclose(top_singular_values(m, 10, method="lanczos", seed=1), eig(m)[:10], rtol=1e-8, atol=0)


def test_randomized_is_ritz_lower_bound():
    # flat spectra are the hard case: values can only be underestimated
    m = _random_psd(500, 0.02, 7)
    ref = eig(m)[:10]
    got = top_singular_values(m, 10, method="randomized", seed=1)
    assert (got <= ref * (1 + 1e-12)).all()
    assert got[0] >= 0.95 * ref[0]


def test_randomized_decaying_spectrum():
    rng = np.random.default_rng(5)
    Q, _ = np.linalg.qr(rng.standard_normal((300, 300)))
    vals = 0.7 ** np.arange(300)
    m = (Q * vals) @ Q.T
    got = top_singular_values(m, 10, method="randomized", seed=2)
    assert np.allclose(got, vals[:10], rtol=1e-8, atol=0)


def test_deterministic_given_seed():
    m = _random_psd(400, 0.02, 3)
    for method in ("lanczos", "randomized"):
        a = top_singular_values(m, 8, method=method, seed=11)
        b = top_singular_values(m, 8, method=method, seed=11)
        assert np.array_equal(a, b)


def test_feature_layout_and_padding():
    f = snapshot_features(build_complex([]), 2, 5)
    assert f.values.tolist() == [0.0] * 15
    f = snapshot_features(build_complex([(0, 1)]), 2, 3, part="both")
    assert len(f.values) == 3 * 2 * 3
    assert blocks_per_rank("up_and_down") == 2


def test_reference_rank_zero_feature():
    c = build_complex([(1, 2, 3), (1, 4)])
    f = snapshot_features(c, 0, 4)
    L0 = dense_laplacian(ranks_of(c), 0)
    assert np.allclose(f.values, eig(L0), atol=1e-12)


def test_total_budget_split():
    c = clique_lift(random_graph(40, 0.3, np.random.default_rng(0)), 2, vertices=range(40))
    f = snapshot_features(c, 2, 300, budget_mode="total")
    assert f.per_block == 100
    assert len(f.values) == 300


def test_normalize_feature():
    u, z = normalize_feature(np.array([3.0, 4.0]))
    assert np.allclose(u, [0.6, 0.8]) and not z
    u, z = normalize_feature(np.zeros(3))
    assert not u.any() and z


@pytest.mark.parametrize(
    "simplices, expected",
    [
        ([(1, 2), (2, 3), (1, 3)], [1, 1]),
        ([(1, 2, 3)], [1, 0, 0]),
        ([(0, 1), (2, 3)], [2, 0]),
        ([s for s in itertools.combinations(range(4), 3)], [1, 0, 1]),
    ],
    ids=["hollow-triangle", "filled-triangle", "two-components", "tetrahedron-shell"],
)
def test_kernel_dimension_is_betti(simplices, expected):
    c = build_complex(simplices)
    assert betti_numbers(ranks_of(c)) == expected
    for k, beta in enumerate(expected):
        sv = top_singular_values(hodge_laplacian(c, k), c.count(k), method="dense")
        assert int((sv < 1e-8 * sv.max()).sum()) == beta


small_complexes = st.tuples(st.integers(0, 2**32 - 1), st.integers(2, 14), st.floats(0.1, 0.9))


@settings(max_examples=40, deadline=None)
@given(small_complexes)
def test_laplacian_matches_dense_oracle(g):
    seed, n, p = g
    c = clique_lift(random_graph(n, p, np.random.default_rng(seed)), 3, vertices=range(n))
    ranks = ranks_of(c)
    for k in range(len(ranks)):
        assert np.allclose(hodge_laplacian(c, k).toarray(), dense_laplacian(ranks, k))


@settings(max_examples=40, deadline=None)
@given(small_complexes, st.sampled_from(["down", "up", "full", "up_and_down"]))
def test_features_nonneg_sorted(g, part):
    seed, n, p = g
    c = clique_lift(random_graph(n, p, np.random.default_rng(seed)), 2, vertices=range(n))
    f = snapshot_features(c, 3, 4, part=part)
    assert len(f.values) == 4 * blocks_per_rank(part) * 4
    assert (f.values >= 0).all()
    for k in range(4):
        for j in range(blocks_per_rank(part)):
            b = f.block(k, j)
            assert (np.diff(b) <= 1e-12).all()


@settings(max_examples=40, deadline=None)
@given(small_complexes)
def test_spectra_permutation_invariant(g):
    seed, n, p = g
    rng = np.random.default_rng(seed)
    c = clique_lift(random_graph(n, p, rng), 2, vertices=range(n))
    perm = dict(zip(range(n), rng.permutation(n).tolist()))
    q = permute_vertices(c, perm)
    for k in range(c.rank_max + 1):
        assert np.allclose(eig(hodge_laplacian(c, k)), eig(hodge_laplacian(q, k)), atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_solver_paths_agree(seed, l):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(30, 60))
    c = clique_lift(random_graph(n, 0.3, rng), 2, vertices=range(n))
    for k in range(c.rank_max + 1):
        m = hodge_laplacian(c, k)
        ref = top_singular_values(m, l, method="dense")
        lz = top_singular_values(m, l, method="lanczos", seed=seed)
        assert np.allclose(lz, ref, rtol=1e-8, atol=1e-8 * max(1.0, ref.max(initial=0)))


@settings(max_examples=25, deadline=None)
@given(small_complexes)
def test_weighted_chain_and_psd(g):
    seed, n, p = g
    rng = np.random.default_rng(seed)
    c = clique_lift(random_graph(n, p, rng), 2, vertices=range(n))
    w = tuple(rng.uniform(0.2, 3.0, c.count(k)) for k in range(c.rank_max + 1))
    cw = SimplicialComplex(c.simplices, w)
    for k in range(cw.rank_max + 1):
        sv = top_singular_values(hodge_laplacian(cw, k, weighted=True), max(1, cw.count(k)), method="dense")
        assert (sv >= 0).all()
