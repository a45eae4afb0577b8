import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from h22sigma import combinatorics as comb
from h22sigma.lattice import Lattice
from h22sigma.linalg import det_minor, factor, inverse_entry
from h22sigma.model import ModelParams, PinningScheme, build_D

# OEIS A001411 / A001412: self-avoiding walks on Z^2 and Z^3
SAW_Z2 = [1, 4, 12, 36, 100, 284, 780, 2172, 5916, 16268, 44100, 120292, 324932]
SAW_Z3 = [1, 6, 30, 150, 726, 3534, 16926, 81390, 387966, 1853886, 8809878, 41934150, 198842742]


def test_saw_examples():
    saws = comb.enumerate_saws(Lattice.chain(5), 0, 3, 10)
    assert [s.sites for s in saws] == [(0, 1, 2, 3)]
    block = Lattice((2, 2))
    saws = comb.enumerate_saws(block, block.index((0, 0)), block.index((1, 1)), 4)
    assert len(saws) == 2 and all(s.length == 2 for s in saws)
    assert comb.enumerate_saws(Lattice.chain(5), 0, 3, 2) == []
    with pytest.raises(ValueError):
        comb.enumerate_saws(Lattice.chain(3), 1, 1, 3)


def test_saw_enumeration_is_deterministic_and_valid():
    lat = Lattice((3, 3))
    a = comb.enumerate_saws(lat, 0, 8, 8)
    assert a == comb.enumerate_saws(lat, 0, 8, 8)
    assert len(a) == 12
    for p in a:
        comb.check_self_avoiding(lat, p.sites)


def test_saw_counts_match_known_series():
    for d, series in ((2, SAW_Z2), (3, SAW_Z3)):
        lat = Lattice((25,) * d)
        counts = comb.saw_counts(lat, lat.n_sites // 2, 12)
        assert counts.tolist() == series
        for n in range(1, 13):
            assert counts[n] <= comb.saw_count_bound(d, n) <= 2 * (2 * d - 1) ** n


def test_saw_counts_agree_with_path_enumeration():
    lat = Lattice((3, 4))
    counts = comb.saw_counts(lat, 5, 7)
    by_len = [0] * 8
    for y in lat.sites():
        if y != 5:
            for p in comb.enumerate_saws(lat, 5, y, 7):
                by_len[p.length] += 1
    assert counts[1:].tolist() == by_len[1:]


def test_path_expansion_2x2():
    a, b, c, d = 3.0, 0.7, -1.2, 2.5
    m = np.array([[a, b], [c, d]])
    assert comb.path_expansion(m, 0, 1) == pytest.approx(-b)
    assert np.linalg.inv(m)[0, 1] * np.linalg.det(m) == pytest.approx(-b)


def test_path_expansion_random_3x3(rng):
    for _ in range(20):
        m = rng.normal(size=(3, 3))
        for x in range(3):
            for y in range(3):
                cof = comb.permutation_cofactor(m.tolist(), x, y)
                assert comb.path_expansion(m, x, y) == pytest.approx(cof, rel=1e-12, abs=1e-14)


def test_path_expansion_on_model_matrix(rng):
    lat = Lattice((2, 3))
    p = ModelParams(0.7, lat, PinningScheme.uniform(0.4))
    t = rng.normal(0, 1, 6)
    d = build_D(p, t)
    det = np.linalg.det(d)
    f = factor(d)
    for x in range(6):
        for y in range(6):
            assert comb.path_expansion(d, x, y) == pytest.approx(inverse_entry(f, x, y) * det, rel=1e-10)


def test_path_expansion_random_suite(rng):
    for _ in range(200):
        n = int(rng.integers(2, 7))
        m = rng.uniform(-1, 1, (n, n)) + np.diag(rng.uniform(n, 2 * n, n))
        x, y = (int(v) for v in rng.integers(0, n, 2))
        exact = comb.permutation_cofactor(m.tolist(), x, y)
        assert comb.path_expansion(m, x, y) == pytest.approx(exact, rel=1e-10)


def test_path_expansion_sparse_support_uses_only_nonzero_steps():
    m = np.diag([2.0, 2.0, 2.0, 2.0])
    m[0, 1], m[1, 2], m[2, 3] = -1.0, -1.0, -1.0
    # upper bidiagonal: only the path 0 -> 1 -> 2 -> 3 exists
    assert comb.path_expansion(m, 0, 3) == pytest.approx(1.0)
    assert comb.path_expansion(m, 3, 0) == 0.0


small_ints = st.integers(-3, 3)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: st.lists(st.lists(small_ints, min_size=n, max_size=n), min_size=n, max_size=n)))
def test_loop_gas_equals_permutation_det_exactly(rows):
    m = [[Fraction(v) for v in row] for row in rows]
    assert comb.loop_gas_det(m) == comb.permutation_det(m)


def test_delete_path_matrix(rng):
    lat = Lattice((2, 3))
    p = ModelParams(0.9, lat, PinningScheme.two_point(0, 0.3, 5, 0.6))
    t = rng.normal(0, 1, 6)
    full = next(g for g in comb.enumerate_saws(lat, 0, 5, 6) if len(g) == 6)
    dt, eps_t, comp = comb.delete_path_matrix(p, t, full.sites)
    assert dt.shape == (0, 0) and np.linalg.det(dt) == 1.0
    gamma = (0, 1, 2)
    _, eps_t, comp = comb.delete_path_matrix(p, np.zeros(6), gamma)
    n_path_nbrs = [sum(1 for k in lat.neighbors(int(i)) if k in gamma) for i in comp]
    assert np.allclose(eps_t, p.eps[comp] + 0.9 * np.array(n_path_nbrs))
    d = build_D(p, t)
    for g in comb.enumerate_saws(lat, 0, 5, 6):
        dt, _, _ = comb.delete_path_matrix(p, t, g.sites)
        assert np.linalg.det(dt) == pytest.approx(det_minor(d, g.sites), rel=1e-10)
    with pytest.raises(ValueError):
        comb.delete_path_matrix(p, t, (0, 2))


def test_boundary_size():
    chain = Lattice.chain(10)
    for gamma in [(0, 1, 2), (3, 4, 5, 6), (9,)]:
        assert comb.boundary_size(chain, gamma) <= 2
    assert comb.boundary_size(chain, range(10)) == 0
    assert comb.boundary_size(Lattice((2, 2)), range(4)) == 0


def test_boundary_size_straight_path_exceeds_printed_bound():
    # a straight n-step path in the bulk of Z^2 touches 2(n+1) side sites and 2 end sites
    big = Lattice((21, 21))
    for n in range(1, 8):
        gamma = [big.index((10, 5 + c)) for c in range(n + 1)]
        assert comb.boundary_size(big, gamma) == 2 * n + 4
        assert comb.boundary_size(big, gamma) > 2 * n + 2


@pytest.mark.parametrize("lat", [Lattice((4, 4)), Lattice((3, 3, 3)), Lattice((5, 5), "periodic")])
def test_boundary_size_general_bound(lat):
    d = lat.d
    for y in range(1, lat.n_sites, 3):
        for g in comb.enumerate_saws(lat, 0, y, 6):
            assert comb.boundary_size(lat, g.sites) <= comb.boundary_bound(d, g.length)


def test_spanning_trees():
    for n in range(1, 7):
        assert len(comb.enumerate_spanning_trees(Lattice.chain(n))) == 1
    trees = comb.enumerate_spanning_trees(Lattice((2, 2)))
    assert len(trees) == 4
    assert len(set(trees)) == 4
    for lat in [Lattice((2, 3)), Lattice((3, 3)), Lattice.chain(6, "periodic"), Lattice((2, 4))]:
        trees = comb.enumerate_spanning_trees(lat)
        assert len(trees) == pytest.approx(comb.kirchhoff_count(lat), rel=1e-9)
        for tr in trees:
            assert len(tr.edges) == lat.n_sites - 1
    with pytest.raises(ValueError):
        comb.enumerate_spanning_trees(Lattice((2, 5)))


def test_matrix_tree_examples(rng):
    p = ModelParams(1.0, Lattice.chain(2), PinningScheme.single(0, 1.0))
    assert comb.matrix_tree_check(p, [0.0, 0.0]) == pytest.approx((1.0, 1.0))
    q = ModelParams(1.0, Lattice((2, 2)), PinningScheme.single(0, 1.0))
    lhs, rhs = comb.matrix_tree_check(q, np.zeros(4))
    assert rhs == pytest.approx(4.0) and lhs == pytest.approx(4.0)
    for lat in [Lattice.chain(5), Lattice((2, 3)), Lattice((3, 3), "periodic")]:
        r = ModelParams(0.6, lat, PinningScheme.single(2, 0.8))
        lhs, rhs = comb.matrix_tree_check(r, rng.normal(0, 1, lat.n_sites))
        assert lhs == pytest.approx(rhs, rel=1e-10)
    with pytest.raises(ValueError):
        comb.matrix_tree_check(ModelParams(1.0, Lattice.chain(2), PinningScheme.uniform(1.0)), [0, 0])


def test_single_pinning_identity(rng):
    p = ModelParams(1.0, Lattice.chain(2), PinningScheme.single(0, 1.0))
    assert comb.single_pinning_identity(p, [0.0, 0.0], 1) == pytest.approx(1.0)
    lat = Lattice((3, 3))
    for _ in range(10):
        q = ModelParams(rng.uniform(0.1, 2), lat, PinningScheme.single(0, rng.uniform(0.1, 2)))
        t = rng.normal(0, 1, 9)
        d = build_D(q, t)
        f = factor(d)
        for x in lat.sites():
            assert comb.single_pinning_identity(q, t, x) == pytest.approx(1.0, abs=1e-10)
            # equivalently D^{-1}_{0x} = e^{t_x} / eps_0
            assert q.eps[0] * math.exp(-t[x]) * inverse_entry(f, 0, x) == pytest.approx(1.0, abs=1e-10)
