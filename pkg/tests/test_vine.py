import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from vinedta.copulas import CopulaFamily, CopulaSpec
from vinedta.margins import MarginKind, MarginSpec
from vinedta.vine import (
    Permutation,
    VineModelSpec,
    empirical_tau,
    enumerate_permutations,
    gauss_legendre_01,
    simulate_vine,
    vine_transform,
)

MARGINS = (MarginSpec(MarginKind.NORMAL_LOGIT, 0.5, 0.5),) * 3
IND = CopulaSpec(CopulaFamily.INDEPENDENCE)


def bvn(theta):
    return CopulaSpec(CopulaFamily.BVN, theta)


# ---------------------------------------------------------------------------
# quadrature grid
# ---------------------------------------------------------------------------

def test_gauss_legendre_single_node():
    grid = gauss_legendre_01(1)
    assert_allclose(grid.nodes, [0.5], rtol=0, atol=0)
    assert_allclose(grid.weights, [1.0], rtol=0, atol=0)


def test_gauss_legendre_two_nodes():
    grid = gauss_legendre_01(2)
    s3 = math.sqrt(3.0)
    assert_allclose(sorted(grid.nodes), [(3 - s3) / 6, (3 + s3) / 6], rtol=1e-15)
    assert_allclose(grid.weights, [0.5, 0.5], rtol=1e-15)


@pytest.mark.parametrize("nq", [1, 2, 5, 15, 25, 40])
def test_gauss_legendre_grid_properties(nq):
    grid = gauss_legendre_01(nq)
    assert grid.nq == nq == len(grid.nodes) == len(grid.weights)
    assert_allclose(np.sum(grid.weights), 1.0, rtol=1e-14)
    # exact for a degree-1 integrand
    assert_allclose(np.sum(grid.weights * grid.nodes), 0.5, rtol=1e-14)
    assert np.all((grid.nodes > 0.0) & (grid.nodes < 1.0))
    # symmetric about the midpoint
    assert_allclose(np.sort(grid.nodes) + np.sort(grid.nodes)[::-1], 1.0, rtol=1e-14)


def test_gauss_legendre_polynomial_exactness():
    # nq-point rule integrates monomials up to degree 2 nq - 1
    grid = gauss_legendre_01(6)
    for k in range(12):
        assert_allclose(np.sum(grid.weights * grid.nodes**k), 1.0 / (k + 1), rtol=1e-13)


# ---------------------------------------------------------------------------
# permutations
# ---------------------------------------------------------------------------

def test_enumerate_permutations():
    perms = enumerate_permutations()
    assert len(perms) == 3
    assert sorted(p.root for p in perms) == [1, 2, 3]
    for p in perms:
        assert set((p.root,) + tuple(p.leaves)) == {1, 2, 3}
        assert p.root not in p.leaves


def test_permutation_labels():
    labels = {p.label() for p in enumerate_permutations()}
    assert labels == {"12,13,23|1", "12,23,13|2", "13,23,12|3"}


def test_permutation_validation():
    with pytest.raises(ValueError):
        Permutation(1, (2, 2))
    with pytest.raises(ValueError):
        Permutation(4, (1, 2))


# ---------------------------------------------------------------------------
# vine transform
# ---------------------------------------------------------------------------

def test_transform_all_independence_passthrough():
    spec = VineModelSpec(Permutation(1, (2, 3)), IND, IND, IND, MARGINS)
    assert vine_transform(0.1, 0.2, 0.3, spec) == (0.1, 0.2, 0.3)


def test_transform_truncated_zero_theta_edge_b():
    spec = VineModelSpec(Permutation(1, (2, 3)), bvn(0.5), bvn(0.0), IND, MARGINS)
    _, _, v3 = vine_transform(0.4, 0.7, 0.3, spec)
    assert_allclose(v3, 0.3, rtol=0, atol=1e-15)


def test_transform_bvn_matches_trivariate_normal_taus():
    # the implied marginal correlation of the conditioned pair follows the
    # partial-correlation identity, and Kendall tau of a normal pair is
    # (2/pi) arcsin(rho)
    t12, t13, t23g1 = 0.6, -0.4, 0.3
    spec = VineModelSpec(Permutation(1, (2, 3)), bvn(t12), bvn(t13), bvn(t23g1), MARGINS)
    rng = np.random.default_rng(915)
    u = rng.uniform(size=(100_000, 3))
    v1, v2, v3 = vine_transform(u[:, 0], u[:, 1], u[:, 2], spec)
    rho23 = t23g1 * math.sqrt((1 - t12**2) * (1 - t13**2)) + t12 * t13
    expected = [2 / math.pi * math.asin(r) for r in (t12, t13, rho23)]
    got = [
        empirical_tau(np.column_stack(p))
        for p in ((v1, v2), (v1, v3), (v2, v3))
    ]
    assert_allclose(got, expected, rtol=0, atol=0.01)


def test_transform_truncation_consistency():
    # a conditional Frank edge on its independence path gives bit-identical
    # output to a truncated spec
    rng = np.random.default_rng(3)
    u = rng.uniform(0.01, 0.99, size=(500, 3))
    trunc = VineModelSpec(Permutation(1, (2, 3)), bvn(0.5), bvn(0.4), IND, MARGINS)
    frank0 = VineModelSpec(
        Permutation(1, (2, 3)), bvn(0.5), bvn(0.4), CopulaSpec(CopulaFamily.FRANK, 5e-6), MARGINS
    )
    a = np.column_stack(vine_transform(u[:, 0], u[:, 1], u[:, 2], trunc))
    b = np.column_stack(vine_transform(u[:, 0], u[:, 1], u[:, 2], frank0))
    assert np.abs(a - b).max() < 1e-6


@pytest.mark.parametrize("perm", enumerate_permutations())
def test_transform_permutation_closure(perm):
    # specified edge taus are recovered empirically in data coordinates for
    # every rooting of the first tree
    tau_a, tau_b = -0.45, 0.35
    spec = VineModelSpec(
        perm,
        CopulaSpec(CopulaFamily.CLAYTON90, 2 * 0.45 / (1 - 0.45)),
        bvn(math.sin(math.pi * tau_b / 2)),
        IND,
        MARGINS,
    )
    u = simulate_vine(60_000, spec, seed=77)
    r = perm.root - 1
    a, b = perm.leaves[0] - 1, perm.leaves[1] - 1
    got_a = empirical_tau(u[:, [r, a]])
    got_b = empirical_tau(u[:, [r, b]])
    assert_allclose(got_a, tau_a, rtol=0, atol=0.015)
    assert_allclose(got_b, tau_b, rtol=0, atol=0.015)


# ---------------------------------------------------------------------------
# vine sampling
# ---------------------------------------------------------------------------

def test_simulate_vine_seed_repeatable():
    spec = VineModelSpec(Permutation(1, (2, 3)), bvn(0.5), bvn(-0.3), IND, MARGINS)
    a = simulate_vine(500, spec, seed=42)
    b = simulate_vine(500, spec, seed=42)
    assert np.array_equal(a, b)
    c = simulate_vine(500, spec, seed=43)
    assert not np.array_equal(a, c)


def test_simulate_vine_streams_disjoint():
    spec = VineModelSpec(Permutation(1, (2, 3)), bvn(0.5), bvn(-0.3), IND, MARGINS)
    a = simulate_vine(500, spec, seed=42, stream=0)
    b = simulate_vine(500, spec, seed=42, stream=1)
    assert not np.array_equal(a, b)


def test_simulate_vine_independence_margins_uniform():
    spec = VineModelSpec(Permutation(1, (2, 3)), IND, IND, IND, MARGINS)
    u = simulate_vine(10_000, spec, seed=5)
    for j in range(3):
        d = stats.kstest(u[:, j], "uniform").statistic
        assert d < 1.63 / math.sqrt(10_000)  # 1% critical value


def test_simulate_vine_clayton90_tau():
    spec = VineModelSpec(
        Permutation(1, (2, 3)),
        CopulaSpec(CopulaFamily.CLAYTON90, 2.0),  # tau = -0.5
        IND,
        IND,
        MARGINS,
    )
    u = simulate_vine(100_000, spec, seed=8)
    assert_allclose(empirical_tau(u[:, :2]), -0.5, rtol=0, atol=0.02)


# ---------------------------------------------------------------------------
# empirical tau
# ---------------------------------------------------------------------------

def test_empirical_tau_degenerate_cases():
    assert empirical_tau([(0.0, 0.0), (1.0, 2.0), (2.0, 5.0)]) == 1.0
    assert empirical_tau([(0.0, 5.0), (1.0, 2.0), (2.0, 0.0)]) == -1.0
    with pytest.raises(ValueError):
        empirical_tau([(0.5, 0.5)])


def test_empirical_tau_ties_counted_as_neither():
    # pairs: one tie in x, one tie in y, one discordant
    assert_allclose(empirical_tau([(1, 1), (1, 2), (2, 1)]), -1.0 / 3.0, rtol=1e-15)


def test_empirical_tau_null_distribution():
    rng = np.random.default_rng(6)
    u = rng.uniform(size=(10_000, 2))
    assert abs(empirical_tau(u)) < 0.03


def test_empirical_tau_matches_reference_without_ties():
    rng = np.random.default_rng(7)
    x = rng.normal(size=400)
    y = 0.6 * x + rng.normal(size=400)
    ours = empirical_tau(np.column_stack([x, y]))
    ref = stats.kendalltau(x, y).statistic  # tau-b equals tau-a when tie-free
    assert_allclose(ours, ref, rtol=1e-12)


# ---------------------------------------------------------------------------
# model spec plumbing
# ---------------------------------------------------------------------------

def test_vine_model_spec_truncated_flag():
    full = VineModelSpec(Permutation(1, (2, 3)), bvn(0.5), bvn(0.4), bvn(0.1), MARGINS)
    trunc = VineModelSpec(Permutation(1, (2, 3)), bvn(0.5), bvn(0.4), IND, MARGINS)
    assert not full.truncated
    assert trunc.truncated


def test_quad_grid_rejects_empty_rule():
    with pytest.raises(ValueError):
        gauss_legendre_01(0)
    with pytest.raises(ValueError):
        gauss_legendre_01(-3)
