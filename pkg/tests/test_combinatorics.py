import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from qpbbm.combinatorics import (
    ExpPoly, TreeNode, diamond_polynomial, diamond_sum, diamond_value, enumerate_tree,
    index_dim, induction_bound_sequence, iter_identity_checks, node_count, optimal_flat, stats,
    tree_eval, tree_expansion,
)
from qpbbm.errors import TreeTooLargeError
from qpbbm.lattice import Truncation, multiplier
from qpbbm.spectral import CoeffField, DecayProfile, make_initial


def test_node_counts():
    assert [node_count(k, 2) for k in range(1, 5)] == [2, 5, 26, 677]
    assert node_count(2, 3) == 9
    assert len(enumerate_tree(3, 2)) == 26
    assert len(enumerate_tree(4, 2)) == 677
    assert len(enumerate_tree(3, 3)) == 1 + 9**3


def test_enumeration_unique_and_well_formed():
    nodes = enumerate_tree(3, 2)
    assert len({n.shape for n in nodes}) == len(nodes)

    def ok(shape, depth):
        if shape == 0:
            return True
        if shape == 1:
            return depth == 1
        return len(shape) == 2 and all(ok(c, depth - 1) for c in shape)

    assert all(ok(n.shape, n.depth) for n in nodes)
    assert TreeNode((0, 1), 2).children == (TreeNode(0, 1), TreeNode(1, 1))


def test_budget():
    with pytest.raises(TreeTooLargeError, match="N_4 = 677"):
        enumerate_tree(4, 2, budget=100)
    with pytest.raises(ValueError):
        node_count(0, 2)


def test_stats_examples():
    s0 = stats(TreeNode(0, 1), 2)
    assert (s0.sigma, s0.ell, s0.D) == (1, 0, 1)
    s = stats(TreeNode((1, 1), 2), 2)
    assert (s.sigma, s.ell, s.D) == (4, 3, 3)
    s3 = stats(TreeNode(1, 1), 3)
    assert s3.sigma == Fraction(3, 2) and s3.ell == 1
    deep = stats(((1, 0), (0, 0)), 2)
    # ell = 1 + (1 + 1 + 0) + (1 + 0 + 0) = 4, D = 4 * (2 * 1 * 1) * (1 * 1 * 1) = 8
    assert (deep.ell, deep.D) == (4, 8)


@pytest.mark.parametrize("k,p", [(1, 2), (2, 2), (3, 2), (4, 2), (1, 3), (2, 3), (3, 3)])
def test_identities(k, p):
    for node, alpha_ok, dim_ok in iter_identity_checks(k, p):
        assert alpha_ok and dim_ok, node
        assert isinstance(stats(node, p).sigma, Fraction)


def test_index_dim_is_structural():
    assert index_dim(0, 2) == 1 and index_dim(1, 3) == 3
    assert index_dim(((1, 0), 0), 2) == 4


def test_diamond_examples():
    assert diamond_sum(1, 2, 0.25) == 1.25
    assert diamond_sum(1, 2, 0.0) == 1.0
    assert diamond_sum(3, 2, 0.25) <= 2
    assert diamond_sum(4, 2, 0.25) <= 2
    assert optimal_flat(2) == Fraction(1, 4) and optimal_flat(3) == Fraction(4, 27)
    for k in (1, 2, 3):
        assert diamond_sum(k, 3, float(optimal_flat(3))) <= 1.5


@pytest.mark.parametrize("k,p", [(1, 2), (2, 2), (3, 2), (4, 2), (2, 3), (3, 3)])
@pytest.mark.parametrize("flat", [0.0, 0.1, 0.25, 0.3, 1.0])
def test_generating_polynomial_matches_enumeration(k, p, flat):
    assert diamond_value(k, p, flat) == pytest.approx(diamond_sum(k, p, flat), rel=1e-13)


def test_diamond_monotone_in_flat():
    grid = np.linspace(0, 0.5, 21)
    vals = [diamond_sum(3, 2, f) for f in grid]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_diamond_limit_is_resolvent():
    # the sums are Picard iterates of y' = y^p, y(0) = 1, so they increase to
    # (1 - (p-1) flat)^(-1/(p-1)); at flat = 0.30, p = 2 the limit is 1/0.7
    assert diamond_value(40, 2, 0.30, max_degree=400) == pytest.approx(1 / 0.7, rel=1e-12)
    vals = [diamond_value(k, 2, 0.30) for k in range(1, 9)]
    assert all(b > a for a, b in zip(vals, vals[1:])) and max(vals) < 2
    assert diamond_value(40, 3, 4 / 27, max_degree=400) == pytest.approx((1 - 8 / 27) ** -0.5, rel=1e-12)
    assert diamond_polynomial(2, 2).tolist() == [1.0, 1.0, 1.0, 1.0 / 3.0]
    np.testing.assert_array_equal(diamond_polynomial(6, 2, max_degree=10), diamond_polynomial(6, 2)[:11])


def test_induction_bound_sequence():
    seq = induction_bound_sequence(0.25, 2, 60)
    assert max(seq) <= 2
    seq = induction_bound_sequence(0.30, 2, 8)
    assert seq[0] == pytest.approx(1.3)
    assert any(v > 2 for v in seq)
    assert min(k for k, v in enumerate(seq, 1) if v > 2) == 5
    assert max(induction_bound_sequence(4 / 27, 3, 60)) <= 1.5


def test_exppoly_algebra():
    f = ExpPoly.exp(0.5j, 2.0)
    g = ExpPoly([1], [-0.25j], [3.0])
    t = np.linspace(0, 1, 7)
    np.testing.assert_allclose((f + g)(t), 2 * np.exp(0.5j * t) + 3 * t * np.exp(-0.25j * t))
    np.testing.assert_allclose((f * g)(t), 6 * t * np.exp(0.25j * t))
    assert len(f + f) == 1
    assert not ExpPoly.zero()


@given(st.integers(0, 3), st.floats(-0.6, 0.6), st.floats(-0.6, 0.6), st.floats(0.01, 1.0))
def test_duhamel_against_quadrature(m, a, lam, t):
    f = ExpPoly([m], [1j * a], [1.0 - 0.5j])
    got = f.duhamel(1j * lam, t_max=1.0)(t)

    def integrand(tau, part):
        v = cmath.exp(1j * lam * (t - tau)) * (1.0 - 0.5j) * tau**m * cmath.exp(1j * a * tau)
        return v.real if part == 0 else v.imag

    ref = quad(integrand, 0, t, args=(0,), epsabs=1e-14)[0] + 1j * quad(integrand, 0, t, args=(1,), epsabs=1e-14)[0]
    assert abs(got - ref) <= 1e-10


def test_duhamel_resonant_case():
    f = ExpPoly([2], [0.3j], [1.0])
    g = f.duhamel(0.3j)
    t = 0.7
    assert g(t) == pytest.approx(t**3 / 3 * cmath.exp(0.3j * t), abs=1e-15)
    near = ExpPoly([0], [0.3j + 1e-13j], [1.0]).duhamel(0.3j)
    assert np.isfinite(near(t))


def two_mode(N):
    return CoeffField.from_mapping(Truncation(1, N), {(1,): 0.5, (-1,): 0.5})


def test_tree_eval_mean_only_data():
    init = CoeffField.delta(Truncation(1, 3), (0,), 0.7)
    for k in (1, 2, 3):
        assert tree_eval(k, (0,), 0.05, init, [1.0], 2) == 0.7
        assert tree_eval(k, (1,), 0.05, init, [1.0], 2) == 0


def test_tree_eval_at_time_zero():
    init = make_initial(DecayProfile.exponential(1, 1), 2, Truncation(1, 3), 4)
    for k in (1, 2, 3):
        for n, v in zip(init.trunc.indices, init.values):
            assert tree_eval(k, n, 0.0, init, [1.0], 2) == pytest.approx(v, abs=1e-14)


def test_tree_eval_first_iterate_closed_form():
    init = two_mode(2)
    t = 0.08
    lam = lambda n: multiplier((n,), [1.0])
    for n in (2, -2):
        a, b = lam(n), 2 * lam(n // 2)
        expected = 0.25 * (lam(n) / 2) * (cmath.exp(b * t) - cmath.exp(a * t)) / (b - a)
        assert tree_eval(1, (n,), t, init, [1.0], 2) == pytest.approx(expected, abs=1e-15)
    # n = 0: lambda(0) kills the correction
    assert tree_eval(1, (0,), t, init, [1.0], 2) == 0
    assert tree_eval(1, (1,), t, init, [1.0], 2) == pytest.approx(0.5 * cmath.exp(lam(1) * t), abs=1e-15)


def test_tree_expansion_is_conjugate_symmetric():
    init = make_initial(DecayProfile.exponential(1, 1), 2, Truncation(1, 3), 9)
    ex = tree_expansion(3, init, [1.0], 2)
    t = np.linspace(0, 1 / 12, 5)
    vals = np.stack([e(t) for e in ex], axis=1)
    neg = init.trunc.negation
    assert np.max(np.abs(vals[:, neg] - np.conj(vals))) <= 1e-13
