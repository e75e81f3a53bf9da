"""Numerical checks of the heat content inequalities.

Every check produces a VerificationReport whose rows hold the two sides of
an inequality and the statistical/quadrature allowance used to compare them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .asymptotics import (LatticeFamily, decoupling_bound, lattice_heat_content, summability_criterion)
from .estimators import Estimate, QuadratureError, ball_profile, jump_tally
from .functionals import functional_values, g_mu_ball
from .geometry import BallUnion, SeparationGap, separation_delta, unit_ball_volume
from .kernel import liyau_constant
from .report import VerificationReport
from .rng import as_stream

THEOREM_NOTE = "for infinite measure the two-sided bound on H is the order-of-magnitude statement"


@dataclass(frozen=True)
class Budget:
    samples: int = 200_000
    tol: float = 1e-10
    k_sigma: float = 3.0
    seed: int | None = None


def _content_and_loss(omega: BallUnion, t: float, budget: Budget, stream):
    """(H, F) estimates: quadrature for a single ball, Monte Carlo otherwise."""
    if omega.n_balls == 1:
        h, f, err = ball_profile(omega.dim, float(omega.radii[0]), t, budget.tol)
        return Estimate(h, err, "deterministic-tol", budget.tol), Estimate(f, err, "deterministic-tol", budget.tol)
    own, other = jump_tally(omega, t, budget.samples, stream)
    n, vol = budget.samples, omega.volume
    p = (own + other) / n
    se = vol * math.sqrt(p * (1 - p) / n)
    return Estimate(vol * p, se, "monte-carlo-se", n), Estimate(vol * (1 - p), se, "monte-carlo-se", n)


def _functionals(omega: BallUnion, t: float, budget: Budget, stream):
    if omega.n_balls == 1:
        gm = g_mu_ball(omega.dim, float(omega.radii[0]), t, budget.tol)
        gn = Estimate(omega.volume - gm.value, gm.error, gm.kind, gm.n_or_tol)
        return gm, gn
    fv = functional_values(omega, t, budget.samples, stream)
    return fv.g_mu, fv.g_nu


def _sandwich(theorem_id, omega, t_grid, budget, which):
    consts = liyau_constant(omega.dim)
    lo_c, hi_c = (consts.K1, consts.K2) if which == "H" else (consts.L1, consts.L2)
    grid = [float(t) for t in t_grid]
    rep = VerificationReport(theorem_id, grid, notes=f"{omega.label}; C={consts.C!r}, lower={lo_c!r}, upper={hi_c!r}")
    if which == "H":
        rep.notes += "; " + THEOREM_NOTE
    base = as_stream(budget.seed)
    k = budget.k_sigma
    for j, t in enumerate(grid):
        s = base.child("t", j)
        try:
            h, f = _content_and_loss(omega, t, budget, s)
            gm, gn = _functionals(omega, t, budget, s)
        except QuadratureError as exc:
            rep.rows.append({"t": t, "lower": None, "mid": None, "upper": None, "sigma": None, "pass": False,
                             "error": str(exc)})
            continue
        mid, g = (h, gm) if which == "H" else (f, gn)
        ratio = mid.value / g.value if g.value > 0 else math.inf
        rep.add(t, lo_c * g.value, mid.value, hi_c * g.value, mid.slack(k) + lo_c * g.slack(k),
                sigma_upper=mid.slack(k) + hi_c * g.slack(k), functional=g.value, functional_err=g.error,
                mid_err=mid.error, ratio=ratio)
        row = rep.rows[-1]
        # upper side uses its own allowance
        row["pass"] = bool(mid.value >= row["lower"] - row["sigma"] and mid.value <= row["upper"] + row["sigma_upper"])
    return rep


def verify_theorem1(omega: BallUnion, t_grid, budget: Budget = Budget()) -> VerificationReport:
    """K1 G_mu(t) <= H(t) <= K2 G_mu(t) on the grid."""
    return _sandwich("T1", omega, t_grid, budget, "H")


def verify_theorem2(omega: BallUnion, t_grid, budget: Budget = Budget()) -> VerificationReport:
    """L1 G_nu(t) <= F(t) <= L2 G_nu(t) on the grid (finite unions have finite measure)."""
    return _sandwich("T2", omega, t_grid, budget, "F")


def verify_decoupling(window: BallUnion, delta: SeparationGap | float | None, t_grid,
                      budget: Budget = Budget()) -> VerificationReport:
    """|H_window - sum_i H_{B_i}| against the decoupling bound.

    The difference is exactly the interaction sum_{i != j} int_{B_i} int_{B_j} p,
    which the Monte Carlo run measures directly as the fraction of jumps that
    land in a different ball; sum_i H_{B_i} is by quadrature.
    """
    if delta is None:
        delta = separation_delta(window)
    d = delta.delta if isinstance(delta, SeparationGap) else float(delta)
    m = window.dim
    grid = [float(t) for t in t_grid]
    s2m = float(np.sum(window.radii ** (2 * m)))
    rep = VerificationReport("T3ii", grid, notes=f"{window.label}; delta={d!r}; {window.n_balls} balls")
    base = as_stream(budget.seed)
    radii, counts = np.unique(window.radii, return_counts=True)
    vol, n, k = window.volume, budget.samples, budget.k_sigma
    for j, t in enumerate(grid):
        parts = [ball_profile(m, float(r), t, budget.tol) for r in radii]
        ball_sum = math.fsum(c * p[0] for c, p in zip(counts, parts))
        ball_err = math.fsum(c * p[2] for c, p in zip(counts, parts))
        own, other = jump_tally(window, t, n, base.child("t", j))
        q = other / n
        cross, cross_se = vol * q, vol * math.sqrt(q * (1 - q) / n)
        p_all = (own + other) / n
        h_raw, h_raw_se = vol * p_all, vol * math.sqrt(p_all * (1 - p_all) / n)
        rhs = decoupling_bound(m, d, t, s2m)
        rep.add(t, None, cross, rhs, k * cross_se + ball_err, H_balls=ball_sum, H_mc=h_raw, H_mc_se=h_raw_se,
                raw_gap=abs(h_raw - ball_sum), raw_pass=bool(abs(h_raw - ball_sum) <= rhs + k * h_raw_se + ball_err))
    return rep


def verify_theorem3i(family: LatticeFamily, t_grid, n_window: int = 500, budget: Budget = Budget(),
                     eps_rel: float = 1e-3) -> VerificationReport:
    """Finiteness criterion sum r_i^(2m) < inf, with the two bounds behind it.

    Rows: the ball-diagonal lower bound on H for each t (certified lattice sum
    when finite), and G_mu(delta^2/4) <= omega_m (4/delta)^m sum r_i^(2m) on a
    truncated lattice.
    """
    m, alpha = family.m, family.alpha
    finite = summability_criterion(m, alpha)
    grid = [float(t) for t in t_grid]
    rep = VerificationReport("T3i", grid, notes=f"m={m} a={family.a!r} alpha={alpha!r}; summable={finite}")
    w = unit_ball_volume(m)
    r1 = float(family.radius(1))
    if not finite:
        # partial sums of the diagonal lower bound grow without limit
        prev = 0.0
        for n in (2 ** k for k in range(4, 16)):
            s = float(np.sum(family.radius(np.arange(1, n + 1)) ** (2 * m)))
            lb = (4 * math.pi * grid[0]) ** (-0.5 * m) * math.exp(-r1 * r1 / grid[0]) * w * w * s
            rep.add(grid[0], prev, lb, None, 0.0, n_balls=n, check="diagonal lower bound increasing")
            prev = lb
        return rep
    s2m = family.power_sum(2 * m)
    for t in grid:
        lb = (4 * math.pi * t) ** (-0.5 * m) * math.exp(-r1 * r1 / t) * w * w * s2m
        # H >= H_{B_1}, so this eps is relative to the value; the interaction
        # bound is added because it cannot be certified below
        eps = eps_rel * ball_profile(m, r1, t, 1e-12)[0] + decoupling_bound(m, family.delta, t, s2m)
        h = lattice_heat_content(family, t, eps)
        rep.add(t, lb, h.value, None, h.error, check="H >= diagonal lower bound")
    omega = family.truncate(n_window)
    d = family.delta
    fv = functional_values(omega, d * d / 4, budget.samples, as_stream(budget.seed).child("eq64"))
    bound = w * (4 / d) ** m * float(np.sum(omega.radii ** (2 * m)))
    rep.add(d * d / 4, None, fv.g_mu.value, bound, fv.g_mu.slack(budget.k_sigma), check="G_mu(delta^2/4) bound",
            n_balls=n_window)
    return rep


def summability_report(m: int, alpha: float) -> dict:
    return {"m": m, "alpha": alpha, "summable": summability_criterion(m, alpha), "threshold": 1.0 / (2 * m)}


# -- sum versus integral ---------------------------------------------------------

def _check_monotone(vals, increasing, name):
    d = np.diff(vals)
    if increasing and np.any(d < 0) or not increasing and np.any(d > 0):
        raise ValueError(f"{name} is not {'increasing' if increasing else 'decreasing'} on [1, N+1]")


def lemma2_gap(f, g, N: int, tol: float = 1e-10, probe: int = 8) -> tuple[float, float, float]:
    """Compare sum_{i<=N} f(i) g(i) with int_1^{N+1} f g for f increasing, g decreasing.

    Returns (lhs, rhs, quadrature error) with lhs = |sum - integral| and
    rhs = sum_{i<=N} f(i+1)(g(i) - g(i+1)) + max(0, f(N+1)g(N+1) - f(1)g(1));
    the last term is the boundary contribution of the finite window and
    vanishes as N -> inf whenever fg is summable.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    xs = np.linspace(1.0, N + 1.0, probe * N + 1)
    fx = np.array([f(x) for x in xs], dtype=float)
    gx = np.array([g(x) for x in xs], dtype=float)
    if np.any(fx < 0) or np.any(gx < 0):
        raise ValueError("f and g must be nonnegative")
    _check_monotone(fx, True, "f")
    _check_monotone(gx, False, "g")
    i = np.arange(1, N + 2, dtype=float)
    fi = np.array([f(x) for x in i])
    gi = np.array([g(x) for x in i])
    total = math.fsum(fi[:-1] * gi[:-1])
    integral, qerr = 0.0, 0.0
    # integer breakpoints keep each panel smooth for piecewise inputs
    for lo in range(1, N + 1, 50):
        hi = min(lo + 50, N + 1)
        v, e = integrate.quad(lambda x: f(x) * g(x), lo, hi, epsabs=tol, epsrel=1e-12, limit=500,
                              points=list(range(lo + 1, hi)) or None)
        integral += v
        qerr += e
    rhs = math.fsum(fi[1:] * (gi[:-1] - gi[1:])) + max(0.0, fi[-1] * gi[-1] - fi[0] * gi[0])
    return abs(total - integral), rhs, qerr


def verify_lemma2(f, g, N: int, tol: float = 1e-10, label: str = "") -> VerificationReport:
    lhs, rhs, qerr = lemma2_gap(f, g, N, tol)
    rep = VerificationReport("L2", [], notes=label)
    rep.add(float(N), None, lhs, rhs, qerr, N=N)
    return rep


def lemma2_lattice_instance(m: int = 2, a: float = 0.25, alpha: float = 0.7, t: float = 1e-4, N: int = 64,
                          tol: float = 1e-10) -> VerificationReport:
    """f(x) = F_{B(0;1)}(a^-2 x^(2 alpha) t), g(x) = a^m x^(-m alpha)."""
    f = lambda x: ball_profile(m, 1.0, t * x ** (2 * alpha) / (a * a), 1e-13)[1]
    g = lambda x: a ** m * x ** (-m * alpha)
    return verify_lemma2(f, g, N, tol, label=f"unit-ball loss profile, m={m} a={a!r} alpha={alpha!r} t={t!r}")


# -- basic facts -------------------------------------------------------------------

def verify_basic_facts(h_grid, f_grid=None, k_sigma: float = 3.0) -> VerificationReport:
    """Monotonicity and log-convexity of H; monotonicity, concavity, subadditivity of F.

    Grids are lists of (t, Estimate) sorted by t.  Convexity-type checks use
    consecutive triples; log-convexity on a triple t1 < t2 < t3 with
    t2 = l t1 + (1-l) t3 reads log H2 <= l log H1 + (1-l) log H3, which
    contains the mid-point form.  Subadditivity is checked as F(t)/t
    nonincreasing (equivalent for F(0) = 0 on the grid) and directly on every
    grid pair whose sum is also a grid point.
    """
    rep = VerificationReport("FACTS", [])
    for name, grid in (("H", h_grid), ("F", f_grid)):
        if grid is None:
            continue
        ts = [float(t) for t, _ in grid]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError(f"{name} grid must be sorted by strictly increasing t")
        rep.t_grid = sorted(set(rep.t_grid) | set(ts))
        v = [e.value for _, e in grid]
        s = [e.slack(k_sigma) for _, e in grid]
        for j in range(len(ts) - 1):
            if name == "H":
                rep.add(ts[j + 1], None, v[j + 1], v[j], s[j] + s[j + 1], check="H decreasing")
            else:
                rep.add(ts[j + 1], v[j], v[j + 1], None, s[j] + s[j + 1], check="F increasing")
        for j in range(1, len(ts) - 1):
            t1, t2, t3 = ts[j - 1], ts[j], ts[j + 1]
            lam = (t3 - t2) / (t3 - t1)
            if name == "H":
                if min(v[j - 1:j + 2]) <= 0:
                    continue
                bound = lam * math.log(v[j - 1]) + (1 - lam) * math.log(v[j + 1])
                slack = s[j] / v[j] + lam * s[j - 1] / v[j - 1] + (1 - lam) * s[j + 1] / v[j + 1]
                rep.add(t2, None, math.log(v[j]), bound, slack, check="H log-convex")
            else:
                chord = lam * v[j - 1] + (1 - lam) * v[j + 1]
                rep.add(t2, chord, v[j], None, s[j] + lam * s[j - 1] + (1 - lam) * s[j + 1], check="F concave")
        if name == "F":
            for j in range(len(ts) - 1):
                rep.add(ts[j + 1], None, v[j + 1] / ts[j + 1], v[j] / ts[j], s[j] / ts[j] + s[j + 1] / ts[j + 1],
                        check="F(t)/t nonincreasing")
            index = {round(t, 12): j for j, t in enumerate(ts)}
            for a in range(len(ts)):
                for b in range(a, len(ts)):
                    c = index.get(round(ts[a] + ts[b], 12))
                    if c is not None:
                        rep.add(ts[c], None, v[c], v[a] + v[b], s[a] + s[b] + s[c], check="F subadditive")
    if not rep.rows:
        rep.notes = "grids too short for any check"
    return rep
