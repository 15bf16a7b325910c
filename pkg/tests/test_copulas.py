import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from vinedta.copulas import (
    CopulaFamily,
    CopulaSpec,
    ccdf,
    ccdf_inv,
    density,
    family_from_name,
    tau_interval,
    tau_to_theta,
    theta_to_tau,
)

from oracles import copula_total_mass

PARAMETRIC = [
    CopulaFamily.BVN,
    CopulaFamily.FRANK,
    CopulaFamily.CLAYTON0,
    CopulaFamily.CLAYTON90,
    CopulaFamily.CLAYTON180,
    CopulaFamily.CLAYTON270,
]

# one representative mid-range parameter per family
MID_THETA = {
    CopulaFamily.BVN: 0.6,
    CopulaFamily.FRANK: 5.0,
    CopulaFamily.CLAYTON0: 2.0,
    CopulaFamily.CLAYTON90: 2.0,
    CopulaFamily.CLAYTON180: 2.0,
    CopulaFamily.CLAYTON270: 2.0,
}


def random_theta(family, rng):
    if family == CopulaFamily.BVN:
        return rng.uniform(-0.95, 0.95)
    if family == CopulaFamily.FRANK:
        return rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 25.0)
    return rng.uniform(0.1, 15.0)


# ---------------------------------------------------------------------------
# frozen values
# ---------------------------------------------------------------------------

def test_independence_passthrough():
    spec = CopulaSpec(CopulaFamily.INDEPENDENCE)
    assert ccdf_inv(spec, 0.3, 0.7) == 0.3
    assert ccdf(spec, 0.4, 0.9) == 0.4
    assert density(spec, 0.2, 0.8) == 1.0


def test_bvn_theta_zero_is_independence():
    spec = CopulaSpec(CopulaFamily.BVN, 0.0)
    assert_allclose(ccdf_inv(spec, 0.3, 0.7), 0.3, rtol=0, atol=1e-15)
    assert_allclose(density(spec, 0.25, 0.4), 1.0, rtol=0, atol=1e-14)


@pytest.mark.parametrize("theta", [-0.9, -0.5, 0.3, 0.8])
def test_bvn_ccdf_at_median(theta):
    # ndtri(0.5) = 0 makes the conditional cdf exactly 1/2 for any theta
    assert_allclose(ccdf(CopulaSpec(CopulaFamily.BVN, theta), 0.5, 0.5), 0.5, rtol=0, atol=1e-15)


def test_clayton0_inverse_frozen():
    # independently located by bisection on the conditional cdf
    # u^(-th-1) (u^-th + w^-th - 1)^(-(1+th)/th) = v, accurate to 1e-15
    w = ccdf_inv(CopulaSpec(CopulaFamily.CLAYTON0, 2.0), 0.5, 0.5)
    assert_allclose(w, 0.5463906428428872, rtol=1e-12)


def test_clayton0_round_trip_example():
    spec = CopulaSpec(CopulaFamily.CLAYTON0, 2.0)
    w = ccdf_inv(spec, 0.5, 0.5)
    assert_allclose(ccdf(spec, w, 0.5), 0.5, rtol=0, atol=1e-14)


def test_bvn_density_at_median():
    # 1 / sqrt(1 - 0.6^2) = 1.25 exactly
    assert_allclose(density(CopulaSpec(CopulaFamily.BVN, 0.6), 0.5, 0.5), 1.25, rtol=1e-14)


def test_frank_tiny_theta_density_is_one():
    spec = CopulaSpec(CopulaFamily.FRANK, 1e-9)
    u = np.array([0.1, 0.37, 0.8])
    assert_allclose(density(spec, u, u[::-1]), 1.0, rtol=0, atol=0)


def test_tau_to_theta_frozen():
    assert_allclose(tau_to_theta(CopulaFamily.BVN, 1.0 / 3.0), 0.5, rtol=1e-15)
    assert_allclose(tau_to_theta(CopulaFamily.CLAYTON0, 0.5), 2.0, rtol=1e-15)
    # bracketed root of the Debye-integral relation, cross-checked against
    # an adaptive-quadrature solve frozen at 5.736282707019968
    assert_allclose(tau_to_theta(CopulaFamily.FRANK, 0.5), 5.736282707019968, rtol=1e-10)


def test_theta_to_tau_frozen():
    assert_allclose(theta_to_tau(CopulaFamily.BVN, 1.0), 1.0, rtol=0, atol=1e-15)
    assert_allclose(theta_to_tau(CopulaFamily.CLAYTON90, 2.0), -0.5, rtol=1e-15)
    assert_allclose(theta_to_tau(CopulaFamily.FRANK, 5.736), 0.4999844439439909, rtol=1e-10)


def test_theta_to_tau_independence():
    assert theta_to_tau(CopulaFamily.INDEPENDENCE, 0.0) == 0.0


def test_tau_to_theta_zero_is_degenerate_zero():
    for fam in PARAMETRIC:
        assert tau_to_theta(fam, 0.0) == 0.0


# ---------------------------------------------------------------------------
# round trips and identities
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("family", PARAMETRIC)
def test_ccdf_round_trip(family):
    # Points whose conditional cdf lands within 1e-6 of a boundary are
    # resampled: there the inverse direction divides a one-ulp error in the
    # probability argument by a conditional density that can be far below
    # 1e-7, so no double-precision implementation can round-trip them.
    rng = np.random.default_rng(701 + int(family))
    worst = 0.0
    accepted = 0
    while accepted < 100:
        theta = random_theta(family, rng)
        u, w = rng.uniform(0.01, 0.99, 2)
        spec = CopulaSpec(family, theta)
        v = ccdf(spec, w, u)
        if not 1e-6 < v < 1.0 - 1e-6:
            continue
        accepted += 1
        worst = max(worst, abs(ccdf_inv(spec, v, u) - w))
    assert worst < 1e-9


@pytest.mark.parametrize("family", PARAMETRIC)
def test_tau_theta_round_trip(family):
    lo, hi = tau_interval(family)
    grid = [s * t for t in np.arange(0.05, 1.0, 0.05) for s in (-1.0, 1.0)]
    taus = [t for t in grid if lo < t < hi]
    assert taus, "empty admissible grid would make the test vacuous"
    for tau in taus:
        back = theta_to_tau(family, tau_to_theta(family, tau))
        assert abs(back - tau) < 1e-8


def test_frank_extreme_tau_round_trip():
    # the closed tail expansion takes over near |tau| = 1
    for tau in (0.9994, 0.9996, 0.9999, -0.9999):
        back = theta_to_tau(CopulaFamily.FRANK, tau_to_theta(CopulaFamily.FRANK, tau))
        assert abs(back - tau) < 1e-12


def test_clayton_rotation_identities():
    # 180 is the survival reflection of 0; 270 the survival reflection of 90
    g = np.linspace(0.05, 0.95, 13)
    U, V = np.meshgrid(g, g, indexing="ij")
    for theta in (0.5, 2.0, 8.0):
        c0 = CopulaSpec(CopulaFamily.CLAYTON0, theta)
        c90 = CopulaSpec(CopulaFamily.CLAYTON90, theta)
        c180 = CopulaSpec(CopulaFamily.CLAYTON180, theta)
        c270 = CopulaSpec(CopulaFamily.CLAYTON270, theta)
        d180 = np.abs(ccdf_inv(c180, V, U) - (1.0 - ccdf_inv(c0, 1.0 - V, 1.0 - U)))
        d270 = np.abs(ccdf_inv(c270, V, U) - (1.0 - ccdf_inv(c90, 1.0 - V, 1.0 - U)))
        assert d180.max() < 1e-12
        assert d270.max() < 1e-12


@pytest.mark.parametrize("family", PARAMETRIC)
def test_density_integrates_to_one(family):
    spec = CopulaSpec(family, MID_THETA[family])
    mass = copula_total_mass(lambda u, v: density(spec, u, v))
    assert abs(mass - 1.0) < 1e-6


@pytest.mark.parametrize("family", PARAMETRIC)
def test_ccdf_inv_monotone_in_v(family):
    v = np.linspace(0.02, 0.98, 49)
    for u in (0.1, 0.5, 0.9):
        w = ccdf_inv(CopulaSpec(family, MID_THETA[family]), v, np.full_like(v, u))
        assert np.all(np.diff(w) > 0)


# ---------------------------------------------------------------------------
# domain errors
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.3])
def test_ccdf_inv_rejects_boundary_arguments(bad):
    spec = CopulaSpec(CopulaFamily.CLAYTON0, 2.0)
    with pytest.raises(ValueError):
        ccdf_inv(spec, bad, 0.5)
    with pytest.raises(ValueError):
        ccdf_inv(spec, 0.5, bad)
    with pytest.raises(ValueError):
        ccdf(spec, bad, 0.5)
    with pytest.raises(ValueError):
        density(spec, bad, 0.5)


def test_theta_out_of_range_rejected():
    with pytest.raises(ValueError):
        CopulaSpec(CopulaFamily.BVN, 1.2)
    with pytest.raises(ValueError):
        CopulaSpec(CopulaFamily.CLAYTON0, -0.5)
    with pytest.raises(ValueError):
        theta_to_tau(CopulaFamily.BVN, -1.5)


def test_tau_sign_routing():
    with pytest.raises(ValueError):
        tau_to_theta(CopulaFamily.CLAYTON0, -0.4)
    with pytest.raises(ValueError):
        tau_to_theta(CopulaFamily.CLAYTON90, 0.4)
    with pytest.raises(ValueError):
        tau_to_theta(CopulaFamily.BVN, 1.0)
    with pytest.raises(ValueError):
        tau_to_theta(CopulaFamily.FRANK, -1.0)


def test_tau_interval_table():
    assert tau_interval(CopulaFamily.BVN) == (-1.0, 1.0)
    assert tau_interval(CopulaFamily.FRANK) == (-1.0, 1.0)
    assert tau_interval(CopulaFamily.CLAYTON0) == (0.0, 1.0)
    assert tau_interval(CopulaFamily.CLAYTON90) == (-1.0, 0.0)
    assert tau_interval(CopulaFamily.CLAYTON180) == (0.0, 1.0)
    assert tau_interval(CopulaFamily.CLAYTON270) == (-1.0, 0.0)
    with pytest.raises(ValueError):
        tau_interval(CopulaFamily.INDEPENDENCE)


def test_family_names():
    assert family_from_name("bvn") == CopulaFamily.BVN
    assert family_from_name(" Clayton90 ") == CopulaFamily.CLAYTON90
    with pytest.raises(ValueError):
        family_from_name("gumbel")
