"""Heat content H and heat loss F of balls and ball unions.

Single balls go through a 1-D radial quadrature: with v = y - x,

    H_B(t) = int p(|v|; t) |B n (B + v)| dv,

so only the lens volume of two equal balls enters.  Unions go through Monte
Carlo: a uniform point of the union takes a Gaussian step of variance 2t per
coordinate and we record whether it lands in its own ball, another ball, or
outside.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import gammaincc, ive

from .geometry import BallUnion, lens_volume, unit_ball_volume, unit_lens, unit_lens_complement, uniform_in_balls
from .rng import as_stream, map_chunks

DETERMINISTIC = "deterministic-tol"
MONTE_CARLO = "monte-carlo-se"

# Gaussian cut-off in the scaled radial variable u = s / sqrt(t); tail mass Q(m/2, U^2/4)
_U_CUT = 40.0


class QuadratureError(RuntimeError):
    def __init__(self, msg, value=float("nan"), achieved=float("inf")):
        super().__init__(f"{msg} (best value {value!r}, achieved error {achieved:.3g})")
        self.value = value
        self.achieved = achieved


@dataclass(frozen=True)
class Estimate:
    value: float
    error: float
    kind: str = DETERMINISTIC
    n_or_tol: float = 0.0

    def slack(self, k: float = 3.0) -> float:
        """Allowance for comparisons: certified bound, or k standard errors."""
        return self.error if self.kind == DETERMINISTIC else k * self.error

    def as_dict(self) -> dict:
        return asdict(self)


def quad(f, a, b, tol, points=None, limit=400):
    """scipy.integrate.quad that refuses to return an error estimate above tol."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        pts = None
        if points is not None:
            pts = sorted(p for p in set(points) if a < p < b) or None
        val, err = integrate.quad(f, a, b, epsabs=tol, epsrel=0.0, points=pts, limit=limit)
    if not err <= tol:
        raise QuadratureError("quadrature did not reach tolerance", val, err)
    return val, err


# -- single balls -------------------------------------------------------------

def _radial_weight(m: int):
    c = m * unit_ball_volume(m) * (4.0 * math.pi) ** (-0.5 * m)
    return lambda u: c * u ** (m - 1) * math.exp(-0.25 * u * u)


@lru_cache(maxsize=200_000)
def unit_ball_profile(m: int, tau: float, tol: float) -> tuple[float, float, float]:
    """(H, F, error) of B(0;1) at time tau, error <= tol.

    In u = s / sqrt(tau) the radial density of the Gaussian step is
    m omega_m (4 pi)^(-m/2) u^(m-1) e^(-u^2/4).  For tau < 1 the loss F is
    integrated directly (no cancellation against |B| at small tau); for
    tau >= 1 the content H is.
    """
    w = unit_ball_volume(m)
    weight = _radial_weight(m)
    rt = math.sqrt(tau)
    edge = 2.0 / rt
    if tau < 1.0:
        upper = min(edge, _U_CUT)
        far = w * float(gammaincc(0.5 * m, 1.0 / tau))
        cut = w * float(gammaincc(0.5 * m, 0.25 * _U_CUT ** 2)) if edge > _U_CUT else 0.0
        val, err = quad(lambda u: weight(u) * unit_lens_complement(m, rt * u), 0.0, upper,
                        0.5 * tol, points=[2.0, 6.0, 12.0, 20.0])
        f = val + far + 0.5 * cut
        err += 0.5 * cut
        return w - f, f, err
    val, err = quad(lambda u: weight(u) * unit_lens(m, rt * u), 0.0, edge, tol)
    return val, w - val, err


def ball_profile(m: int, r: float, t: float, tol: float = 1e-10) -> tuple[float, float, float]:
    """(H, F, error) of B(0;r) at time t via the scaling H_r(t) = r^m H_1(t / r^2)."""
    if not (r > 0 and t > 0 and tol > 0):
        raise ValueError("need r > 0, t > 0, tol > 0")
    scale = r ** m
    h, f, err = unit_ball_profile(m, t / (r * r), tol / scale)
    return scale * h, scale * f, scale * err


def heat_content_ball(m: int, r: float, t: float, tol: float = 1e-10) -> Estimate:
    h, _, err = ball_profile(m, r, t, tol)
    return Estimate(h, err, DETERMINISTIC, tol)


def heat_loss_ball(m: int, r: float, t: float, tol: float = 1e-10) -> Estimate:
    _, f, err = ball_profile(m, r, t, tol)
    return Estimate(f, err, DETERMINISTIC, tol)


# -- Monte Carlo over unions --------------------------------------------------

def jump_tally(omega: BallUnion, t: float, n: int, stream=None) -> tuple[int, int]:
    """Counts of Gaussian jumps (variance 2t) from uniform points of omega.

    Returns (landed in own ball, landed in another ball).  Points are drawn
    from the same per-chunk streams as ``functionals.g_mu`` so that the two
    estimates share their x samples.
    """
    if n < 2 or not t > 0:
        raise ValueError("need n >= 2 and t > 0")
    step = math.sqrt(2.0 * t)

    def run(s, size):
        gen = s.generator()
        x, home = uniform_in_balls(omega, size, gen)
        y = x + step * gen.standard_normal(x.shape)
        own = np.sum((y - omega.centers[home]) ** 2, axis=1) < omega.radii[home] ** 2
        if omega.n_balls == 1:
            return int(own.sum()), 0
        loc = omega.locate(y[~own])
        return int(own.sum()), int(np.count_nonzero(loc >= 0))

    parts = map_chunks(run, as_stream(stream), n)
    return sum(p[0] for p in parts), sum(p[1] for p in parts)


def _binomial(volume, hits, n):
    p = hits / n
    return Estimate(volume * p, volume * math.sqrt(p * (1.0 - p) / n), MONTE_CARLO, n)


def heat_content_mc(omega: BallUnion, t: float, n: int, stream=None) -> Estimate:
    own, other = jump_tally(omega, t, n, stream)
    return _binomial(omega.volume, own + other, n)


def heat_loss_mc(omega: BallUnion, t: float, n: int, stream=None) -> Estimate:
    own, other = jump_tally(omega, t, n, stream)
    return _binomial(omega.volume, n - own - other, n)


def cross_content_mc(omega: BallUnion, t: float, n: int, stream=None) -> Estimate:
    """Monte Carlo estimate of sum_{i != j} int_{B_i} int_{B_j} p."""
    _, other = jump_tally(omega, t, n, stream)
    return _binomial(omega.volume, other, n)


# -- pairs of balls -----------------------------------------------------------

def _angular_mean(m: int, x: float) -> float:
    # (1/|S^{m-1}|) int_{S^{m-1}} e^{x cos(theta)} dsigma, times e^{-x}
    nu = 0.5 * m - 1.0
    if x < 1e-8:
        return math.gamma(nu + 1.0) * math.exp(-x)
    return math.gamma(nu + 1.0) * (0.5 * x) ** (-nu) * float(ive(nu, x))


def cross_term(m: int, ball_i, ball_j, t: float, tol: float = 1e-12) -> Estimate:
    """int_{B_i} dx int_{B_j} dy p(x, y; t) for two balls given as (center, radius).

    With w = (z_j - z_i) - (y - x) the integrand is p(|D - w|) times the lens
    volume at |w|; the angular part of p integrates in closed form to a
    modified Bessel function, leaving a 1-D integral over rho = |w|.
    """
    (zi, ri), (zj, rj) = ball_i, ball_j
    d = float(np.linalg.norm(np.asarray(zj, dtype=float) - np.asarray(zi, dtype=float)))
    reach = ri + rj
    sphere = m * unit_ball_volume(m)
    pref = (4.0 * math.pi * t) ** (-0.5 * m) * sphere

    def integrand(rho):
        x = d * rho / (2.0 * t)
        g = math.exp(-((d - rho) ** 2) / (4.0 * t))
        return pref * rho ** (m - 1) * lens_volume(m, ri, rj, rho) * g * _angular_mean(m, x)

    w = math.sqrt(t)
    pts = [abs(ri - rj)] + [reach - k * w for k in (1, 3, 8)] + [d - k * w for k in (-3, 0, 3)]
    val, err = quad(integrand, 0.0, reach, tol, points=pts)
    return Estimate(val, err, DETERMINISTIC, tol)


def cross_term_mc(m: int, ball_i, ball_j, t: float, n: int, stream=None) -> Estimate:
    """Monte Carlo counterpart of cross_term: |B_i| P(x + sqrt(2t) g in B_j)."""
    (zi, ri), (zj, rj) = ball_i, ball_j
    src = BallUnion.single(m, ri, center=zi)
    zj = np.asarray(zj, dtype=float)
    step = math.sqrt(2.0 * t)

    def run(s, size):
        gen = s.generator()
        x, _ = uniform_in_balls(src, size, gen)
        y = x + step * gen.standard_normal(x.shape)
        return int(np.count_nonzero(np.sum((y - zj) ** 2, axis=1) < rj * rj))

    hits = sum(map_chunks(run, as_stream(stream), n))
    return _binomial(src.volume, hits, n)
