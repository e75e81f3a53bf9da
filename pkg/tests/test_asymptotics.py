import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import zeta

from heatlab.asymptotics import (CertificationError, regime_prefactor, LatticeFamily, RegimeError, RegimeId, c_constant, c_constant_mc,
                                 classify_regime, d_constant, d_constant_mc, decoupling_bound, fit_power_law,
                                 lattice_heat_content, lattice_points, lattice_sum, pair_integral_inside,
                                 pair_integral_outside, pair_integral_outside_mc, regime4_envelope,
                                 single_ball_remainder, sum_integral_sandwich, summability_criterion)
from heatlab.estimators import heat_content_ball, heat_loss_ball
from heatlab.geometry import unit_ball_volume
from heatlab.rng import Stream


def test_summability_examples():
    assert summability_criterion(2, 0.4)
    assert not summability_criterion(2, 0.25)
    assert summability_criterion(3, 0.2)
    with pytest.raises(ValueError):
        summability_criterion(2, 0.0)


@pytest.mark.parametrize("m,alpha,rid,exp", [
    (2, 0.4, RegimeId.R1, -0.25),
    (2, 0.7, RegimeId.R2, 2 / 7),
    (2, 1.5, RegimeId.R3, 0.5),
    (2, 7.0, RegimeId.R3, 0.5),
    (3, 0.4, RegimeId.R2, (1.2 - 1) / 0.8),
    (3, 0.75, RegimeId.R3, 0.5),
    (3, 1.0, RegimeId.R4, 0.5),
    (3, 2.0, RegimeId.R5, 0.5),
])
def test_classify(m, alpha, rid, exp):
    reg = classify_regime(m, alpha)
    assert reg.id is rid
    assert reg.leading_exponent == pytest.approx(exp, rel=1e-14)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_borderlines(m):
    for alpha in (1 / (2 * m), 1 / m, 1 / (m - 1)):
        assert classify_regime(m, alpha).id is RegimeId.BORDERLINE
    with pytest.raises(RegimeError):
        classify_regime(m, 0.5 / (2 * m))


def test_lattice_points_enumeration():
    pts = lattice_points(2, 25)
    assert len({tuple(p) for p in pts}) == 25
    shells = np.abs(pts).max(axis=1)
    assert np.all(np.diff(shells) >= 0)
    assert tuple(pts[0]) == (0, 0)
    assert shells.max() == 2
    # within a shell the order is lexicographic
    s1 = [tuple(p) for p in pts if np.abs(p).max() == 1]
    assert s1 == sorted(s1)


def test_family_geometry():
    fam = LatticeFamily(2, 0.25, 1.5)
    assert fam.delta == 0.5
    assert fam.power_sum(1) == pytest.approx(0.25 * zeta(1.5), rel=1e-14)
    assert fam.perimeter == pytest.approx(2 * math.pi * 0.25 * 2.612375348685488, rel=1e-12)
    assert fam.power_sum(0.5) == math.inf
    u = fam.window(2)
    assert u.n_balls == 25
    with pytest.raises(ValueError):
        LatticeFamily(2, 0.3, 1.0)


@pytest.mark.parametrize("m", [2, 3, 5])
def test_pair_integral_closed_forms(m):
    w = unit_ball_volume(m)
    # beta = 0 gives |B|^2, beta = 2 gives 2 |B| int_B |x|^2 = 2 w^2 m/(m+2)
    assert pair_integral_inside(m, 0.0).value == pytest.approx(w * w, rel=1e-10)
    assert pair_integral_inside(m, 2.0).value == pytest.approx(2 * w * w * m / (m + 2), rel=1e-10)


def test_pair_integral_outside_vs_oracle():
    for m, beta in ((2, -2.5), (3, -3.3)):
        ex = pair_integral_outside(m, beta)
        mc = pair_integral_outside_mc(m, beta, 1_000_000, Stream(11))
        assert abs(ex.value - mc.value) < 3 * mc.error
    with pytest.raises(RegimeError):
        pair_integral_outside(2, -1.0)
    with pytest.raises(RegimeError):
        pair_integral_inside(2, -2.0)


def test_constants_against_oracles_small_budget():
    c = c_constant(2, 0.4, 0.25)
    cm = c_constant_mc(2, 0.4, 0.25, 2_000_000, Stream(1))
    assert abs(c.value - cm.value) < 3 * cm.error
    d = d_constant(2, 0.7, 0.25)
    dm = d_constant_mc(2, 0.7, 0.25, 2_000_000, Stream(2))
    assert abs(d.value - dm.value) < 3 * dm.error


def test_constant_regime_guards_and_scaling():
    with pytest.raises(RegimeError):
        c_constant(2, 0.6, 0.25)
    with pytest.raises(RegimeError):
        d_constant(2, 0.4, 0.25)
    a1, a2 = d_constant(2, 0.7, 0.125).value, d_constant(2, 0.7, 0.25).value
    assert a2 / a1 == pytest.approx(2 ** (1 / 0.7), rel=1e-10)
    # approaching alpha = 1/m the pair integral blows up like m w^2 / (1/alpha - m)
    for da in (1e-3, 1e-4):
        alpha = 0.5 - da
        residue = c_constant(2, alpha, 0.25).value * (1 / alpha - 2) / regime_prefactor(2, alpha, 0.25)
        assert residue == pytest.approx(2 * math.pi ** 2, rel=20 * da)


def test_decoupling_bound_example():
    t, d = 0.05, 0.5
    expected = math.pi ** 2 * math.exp(-d * d / (8 * t)) * (2 * math.sqrt(2) + (0.2 * math.pi) ** -0.5) ** 2 * 121 / 4 ** 4
    assert decoupling_bound(2, d, t, 121 * 0.25 ** 4) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(ValueError):
        decoupling_bound(2, 0.0, t, 1.0)


def test_lattice_sum_matches_direct_sum_for_fast_decay():
    # alpha = 3: terms decay fast, a long direct sum plus a crude tail is an oracle
    fam = LatticeFamily(2, 0.25, 3.0)
    t = 1e-3
    s = lattice_sum(fam, t, "F", 1e-8)
    direct = math.fsum(heat_loss_ball(2, float(fam.radius(i)), t, 1e-14).value for i in range(1, 4001))
    tail = math.pi * 0.25 ** 2 * float(zeta(6, 4001))
    lo, hi = s.ball_sum_bounds
    assert lo - 1e-12 <= direct + 0.5 * tail <= hi + tail
    assert abs(s.estimate.value + s.cross_bound / 2 - direct) < s.estimate.error + tail + s.cross_bound


@pytest.mark.parametrize("alpha,t,q", [(0.4, 1e-3, "H"), (0.7, 1e-3, "F"), (1.5, 1e-4, "F"), (0.45, 2e-3, "H")])
def test_certificate_honesty(alpha, t, q):
    fam = LatticeFamily(2, 0.25, alpha)
    coarse = lattice_sum(fam, t, q, 1e-3)
    fine = lattice_sum(fam, t, q, 1e-4)
    assert abs(coarse.estimate.value - fine.estimate.value) <= 1e-3
    assert coarse.estimate.error <= 1e-3


@pytest.mark.parametrize("alpha,t,q", [(0.4, 1e-3, "H"), (0.7, 1e-4, "F"), (1.5, 1e-4, "F")])
def test_sum_integral_sandwich(alpha, t, q):
    fam = LatticeFamily(2, 0.25, alpha)
    lo, hi = sum_integral_sandwich(fam, t, q)
    blo, bhi = lattice_sum(fam, t, q, 1e-4).ball_sum_bounds
    assert lo <= blo and bhi <= hi


def test_first_regime_diverges_as_t_decreases():
    fam = LatticeFamily(2, 0.25, 0.4)
    vals = [lattice_heat_content(fam, t, 1e-3).value for t in (1e-3, 1e-4, 1e-5)]
    assert vals[0] < vals[1] < vals[2]


def test_large_t_kernel_bound():
    fam = LatticeFamily(2, 0.25, 0.4)
    t = 10.0
    s = lattice_sum(fam, t, "H", 1.0)  # interaction bound is O(1) at this t
    w = math.pi
    assert s.ball_sum_bounds[0] <= (4 * math.pi * t) ** -1 * w * w * fam.power_sum(4) * (1 + 1e-9)


def test_lattice_guards():
    with pytest.raises(RegimeError):
        lattice_sum(LatticeFamily(2, 0.25, 0.45), 1e-3, "F", 1e-3)
    with pytest.raises(RegimeError):
        lattice_sum(LatticeFamily(2, 0.25, 0.2), 1e-3, "H", 1e-3)
    with pytest.raises(CertificationError):
        lattice_sum(LatticeFamily(2, 0.25, 0.7), 1.0, "F", 1e-9)


def test_fit_power_law_synthetic():
    t = np.logspace(-6, -2, 9)
    e, c, se = fit_power_law([(x, 3 * x ** 0.5, 1e-3 * x ** 0.5) for x in t])
    assert e == pytest.approx(0.5, abs=1e-12) and c == pytest.approx(3.0, rel=1e-10) and se < 1e-10
    e, _, _ = fit_power_law([(x, 0.4 * x ** -0.25, 0.0) for x in t])
    assert e == pytest.approx(-0.25, abs=1e-12)
    with pytest.raises(ValueError):
        fit_power_law([(1, 1, 1), (2, -1, 1), (3, 1, 1), (4, 1, 1)])
    with pytest.raises(ValueError):
        fit_power_law([(1, 1, 1), (2, 1, 1), (3, 1, 1)])


@given(st.floats(-1, 1), st.floats(0.1, 10))
def test_fit_recovers_any_power(p, c):
    t = np.logspace(-5, -1, 6)
    e, cc, _ = fit_power_law([(x, c * x ** p, 0.0) for x in t])
    assert e == pytest.approx(p, abs=1e-9)
    assert cc == pytest.approx(c, rel=1e-8)


def test_single_ball_remainder_report():
    rep = single_ball_remainder(2, 1.0, np.logspace(-6, 0, 13))
    assert rep.passed
    ratios = [r["ratio"] for r in rep.rows]
    assert ratios[0] < 1e-3  # LHS is O(t^{3/2}) in the plane


def test_remainder_envelopes_m3():
    rep = regime4_envelope(3, 0.25, [1e-5, 1e-4, 1e-3], eps_rel=1e-3, alpha=2.0)
    assert rep.passed and rep.theorem_id == "ENVELOPE-R5"
    with pytest.raises(ValueError):
        regime4_envelope(2, 0.25, [1e-3])
