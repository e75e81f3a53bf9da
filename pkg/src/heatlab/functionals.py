"""Local volume fractions mu, nu and their integrals over the union.

    G_mu(t) = int_Omega mu(x; sqrt t) / |B(x; sqrt t)| dx,
    G_nu(t) = int_Omega nu(x; sqrt t) / |B(x; sqrt t)| dx = |Omega| - G_mu(t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .estimators import MONTE_CARLO, DETERMINISTIC, Estimate, quad
from .geometry import BallUnion, lens_volume, uniform_in_balls, unit_ball_volume
from .rng import as_stream, map_chunks


def mu(omega: BallUnion, x, R: float):
    """|B(x;R) n Omega| for one point or an (n, m) array of points."""
    if not R > 0:
        raise ValueError("R must be positive")
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if omega.n_balls <= 8:
        out = np.zeros(len(pts))
        for z, r in zip(omega.centers, omega.radii):
            out += lens_volume(omega.dim, R, r, np.linalg.norm(pts - z, axis=1))
    else:
        reach = R + float(omega.radii.max())
        pairs = cKDTree(pts).sparse_distance_matrix(omega.tree, reach, output_type="ndarray")
        vals = lens_volume(omega.dim, R, omega.radii[pairs["j"]], pairs["v"])
        out = np.bincount(pairs["i"], weights=vals, minlength=len(pts))
    return float(out[0]) if single else out


def nu(omega: BallUnion, x, R: float):
    """|B(x;R) - Omega|."""
    return unit_ball_volume(omega.dim) * R ** omega.dim - mu(omega, x, R)


@dataclass(frozen=True)
class FunctionalValue:
    t: float
    g_mu: Estimate
    g_nu: Estimate


def functional_values(omega: BallUnion, t: float, n: int, stream=None) -> FunctionalValue:
    """Monte Carlo G_mu and G_nu from one set of uniform samples.

    The x samples are the ones ``estimators.jump_tally`` draws for the same
    stream, so sandwich comparisons against H and F are positively correlated.
    """
    if not t > 0 or n < 2:
        raise ValueError("need t > 0 and n >= 2")
    R = math.sqrt(t)
    ball = unit_ball_volume(omega.dim) * R ** omega.dim

    def run(s, size):
        x, _ = uniform_in_balls(omega, size, s.generator())
        frac = mu(omega, x, R) / ball
        return float(frac.sum()), float((frac * frac).sum())

    parts = map_chunks(run, as_stream(stream), n)
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / (n - 1)
    vol = omega.volume
    err = vol * math.sqrt(var / n)
    gm = Estimate(vol * mean, err, MONTE_CARLO, n)
    gn = Estimate(vol * (1.0 - mean), err, MONTE_CARLO, n)
    return FunctionalValue(t, gm, gn)


def g_mu(omega: BallUnion, t: float, n: int, stream=None) -> Estimate:
    return functional_values(omega, t, n, stream).g_mu


def g_nu(omega: BallUnion, t: float, n: int, stream=None) -> Estimate:
    return functional_values(omega, t, n, stream).g_nu


def g_mu_ball(m: int, r: float, t: float, tol: float = 1e-12) -> Estimate:
    """G_mu of a single ball by radial quadrature (mu depends on |x - z| only)."""
    R = math.sqrt(t)
    w = unit_ball_volume(m)
    sphere = m * w
    norm = w * R ** m
    val, err = quad(lambda rho: sphere * rho ** (m - 1) * lens_volume(m, R, r, rho) / norm,
                    0.0, r, tol, points=[abs(r - R)])
    return Estimate(val, err, DETERMINISTIC, tol)
