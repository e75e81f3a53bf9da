"""Small-t behaviour of the lattice family Omega = U_i B(z_i; a i^-alpha), z_i in Z^m.

The infinite sums over balls are certified: the first N balls are computed by
quadrature, the tail is sandwiched between two integrals (i -> H_{B(0;r_i)}
and i -> F_{B(0;r_i)} are both decreasing), and the interaction between
different balls is bounded by the decoupling estimate.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma, zeta

from .estimators import DETERMINISTIC, MONTE_CARLO, Estimate, ball_profile, quad, unit_ball_profile
from .geometry import BallUnion, unit_ball_volume, unit_lens, unit_lens_complement
from .kernel import single_ball_remainder_constant
from .report import VerificationReport
from .rng import as_stream, map_chunks


class RegimeError(ValueError):
    pass


class CertificationError(RuntimeError):
    def __init__(self, msg, achieved=float("inf")):
        super().__init__(f"{msg} (achievable error {achieved:.3g})")
        self.achieved = achieved


# -- the lattice family -------------------------------------------------------

def lattice_points(m: int, n: int) -> np.ndarray:
    """First n points of Z^m ordered by sup-norm shell, then lexicographically."""
    k = 0
    while (2 * k + 1) ** m < n:
        k += 1
    axes = np.arange(-k, k + 1)
    pts = np.array(np.meshgrid(*[axes] * m, indexing="ij")).reshape(m, -1).T
    shell = np.abs(pts).max(axis=1)
    order = np.lexsort(tuple(pts[:, j] for j in range(m - 1, -1, -1)) + (shell,))
    return pts[order[:n]]


@dataclass(frozen=True)
class LatticeFamily:
    m: int
    a: float
    alpha: float

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("m must be >= 2")
        if not 0 < self.a <= 0.25:
            raise ValueError("a must lie in (0, 1/4]")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")

    def radius(self, i):
        return self.a * np.asarray(i, dtype=float) ** (-self.alpha)

    @property
    def delta(self) -> float:
        return 1.0 - 2.0 * self.a

    def truncate(self, n: int, label: str = "") -> BallUnion:
        """The first n balls as a finite union."""
        return BallUnion(self.m, lattice_points(self.m, n), self.radius(np.arange(1, n + 1)),
                         label=label or f"lattice m={self.m} a={self.a:g} alpha={self.alpha:g} N={n}",
                         lattice_spacing=1.0)

    def window(self, half_width: int) -> BallUnion:
        """All balls with |z|_inf <= half_width."""
        return self.truncate((2 * half_width + 1) ** self.m)

    def power_sum(self, p: float) -> float:
        """sum_i r_i^p (infinite when alpha p <= 1)."""
        s = self.alpha * p
        return math.inf if s <= 1 else self.a ** p * float(zeta(s, 1))

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.m) * self.power_sum(self.m)

    @property
    def perimeter(self) -> float:
        return self.m * unit_ball_volume(self.m) * self.power_sum(self.m - 1)


def summability_criterion(m: int, alpha: float) -> bool:
    """sum_i (a i^-alpha)^(2m) < infinity, i.e. alpha > 1/(2m)."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return 2 * m * alpha > 1


def decoupling_bound(m: int, delta: float, t: float, sum_r2m: float) -> float:
    """omega_m^2 e^(-delta^2/8t) (sqrt2/delta + (4 pi t)^(-1/2))^m sum r_i^(2m)."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    w = unit_ball_volume(m)
    return w * w * math.exp(-delta * delta / (8.0 * t)) * (math.sqrt(2.0) / delta + (4.0 * math.pi * t) ** -0.5) ** m * sum_r2m


# -- regimes --------------------------------------------------------------------

class RegimeId(str, enum.Enum):
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"
    R4 = "R4"
    R5 = "R5"
    BORDERLINE = "BORDERLINE"


@dataclass(frozen=True)
class Regime:
    id: RegimeId
    leading_exponent: float
    leading_constant_kind: str
    quantity: str
    note: str = ""


def regime_exponent(m: int, alpha: float) -> float:
    return (m * alpha - 1.0) / (2.0 * alpha)


def classify_regime(m: int, alpha: float) -> Regime:
    if m < 2:
        raise ValueError("m must be >= 2")
    if alpha < 1.0 / (2 * m) and not math.isclose(alpha, 1.0 / (2 * m), rel_tol=1e-12):
        raise RegimeError(f"alpha={alpha:g} <= 1/(2m): heat content is infinite for every t")
    edges = [1.0 / (2 * m), 1.0 / m, 1.0 / (m - 1)]
    for e in edges:
        if math.isclose(alpha, e, rel_tol=1e-12):
            return Regime(RegimeId.BORDERLINE, math.nan, "none", "none",
                          f"alpha = {e:g} is a borderline exponent with logarithmic corrections; not analysed")
    ex = regime_exponent(m, alpha)
    if alpha < 1.0 / m:
        return Regime(RegimeId.R1, ex, "c_alpha_m", "H", "infinite measure")
    if alpha < 1.0 / (m - 1):
        return Regime(RegimeId.R2, ex, "d_alpha_m", "F", "finite measure, infinite perimeter")
    if m == 2 or alpha < 1.0 / (m - 2) and not math.isclose(alpha, 1.0 / (m - 2), rel_tol=1e-12):
        return Regime(RegimeId.R3, 0.5, "perimeter", "F", f"remainder O(t^{ex:.4g})")
    if math.isclose(alpha, 1.0 / (m - 2), rel_tol=1e-12):
        return Regime(RegimeId.R4, 0.5, "perimeter", "F", "remainder O(t log 1/t)")
    return Regime(RegimeId.R5, 0.5, "perimeter", "F", "remainder O(t)")


# -- c_{alpha,m} and d_{alpha,m} ------------------------------------------------

def regime_prefactor(m: int, alpha: float, a: float) -> float:
    """2^(m-1-1/alpha) pi^(-m/2) alpha^-1 Gamma((2 m alpha - 1)/(2 alpha)) a^(1/alpha)."""
    return (2.0 ** (m - 1 - 1 / alpha) * math.pi ** (-0.5 * m) / alpha
            * float(gamma((2 * m * alpha - 1) / (2 * alpha))) * a ** (1 / alpha))


def _beta(m, alpha):
    return (1.0 - 2.0 * m * alpha) / alpha


def pair_integral_inside(m: int, beta: float, tol: float = 1e-11) -> Estimate:
    """int_B int_B |x-y|^beta = int_0^2 m omega_m s^(m-1+beta) lens(s) ds, needs m + beta > 0.

    s = u^(1/p) with p = m + beta absorbs the endpoint singularity exactly.
    """
    p = m + beta
    if not p > 0:
        raise RegimeError("pair integral over B x B diverges for m + beta <= 0")
    c = m * unit_ball_volume(m) / p
    val, err = quad(lambda u: c * unit_lens(m, u ** (1.0 / p)), 0.0, 2.0 ** p, tol)
    return Estimate(val, err, DETERMINISTIC, tol)


def pair_integral_outside(m: int, beta: float, tol: float = 1e-11) -> Estimate:
    """int_B int_{R^m - B} |x-y|^beta, needs -1 < m + beta < 0.

    On [0, 2] the substitution s = u^(1/q), q = m + beta + 1, flattens the
    s^(m+beta) singularity; beyond s = 2 the lens vanishes and the power law
    is integrated exactly.
    """
    p = m + beta
    if not -1 < p < 0:
        raise RegimeError("pair integral over B x B^c needs -1 < m + beta < 0")
    q = p + 1.0
    w = unit_ball_volume(m)
    c = m * w / q

    def f(u):
        s = u ** (1.0 / q)
        return c * unit_lens_complement(m, s) / s

    val, err = quad(f, 0.0, 2.0 ** q, tol)
    tail = m * w * w * 2.0 ** p / (-p)
    return Estimate(val + tail, err, DETERMINISTIC, tol)


def c_constant(m: int, alpha: float, a: float, tol: float = 1e-10) -> Estimate:
    if not 1.0 / (2 * m) < alpha < 1.0 / m:
        raise RegimeError(f"c_alpha_m needs 1/(2m) < alpha < 1/m, got {alpha:g}")
    pre = regime_prefactor(m, alpha, a)
    inner = pair_integral_inside(m, _beta(m, alpha), tol / pre)
    return Estimate(pre * inner.value, pre * inner.error, DETERMINISTIC, tol)


def d_constant(m: int, alpha: float, a: float, tol: float = 1e-10) -> Estimate:
    if not 1.0 / m < alpha < 1.0 / (m - 1):
        raise RegimeError(f"d_alpha_m needs 1/m < alpha < 1/(m-1), got {alpha:g}")
    pre = regime_prefactor(m, alpha, a)
    inner = pair_integral_outside(m, _beta(m, alpha), tol / pre)
    return Estimate(pre * inner.value, pre * inner.error, DETERMINISTIC, tol)


# Monte Carlo oracles: they use only point-in-ball tests, never the lens formula.

def _directions(gen, n, m):
    d = gen.standard_normal((n, m))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def pair_integral_inside_mc(m: int, beta: float, n: int, stream=None) -> Estimate:
    """x uniform in B, |v| with density ~ s^(m-1+beta) on [0,2], v isotropic; count x + v in B."""
    p = m + beta
    w = unit_ball_volume(m)
    norm = w * m * w * 2.0 ** p / p

    def run(s, size):
        gen = s.generator()
        x = _directions(gen, size, m) * gen.random(size)[:, None] ** (1.0 / m)
        rad = 2.0 * gen.random(size) ** (1.0 / p)
        y = x + rad[:, None] * _directions(gen, size, m)
        return int(np.count_nonzero(np.sum(y * y, axis=1) < 1.0))

    hits = sum(map_chunks(run, as_stream(stream), n))
    ph = hits / n
    return Estimate(norm * ph, norm * math.sqrt(ph * (1 - ph) / n), MONTE_CARLO, n)


def pair_integral_outside_mc(m: int, beta: float, n: int, stream=None) -> Estimate:
    """Importance-sampled estimate of int_B int_{B^c} |x-y|^beta.

    eps = 1 - |x| has density lam eps^(lam-1); given eps, |y - x| is Pareto
    on (eps, inf) with index kap (steps shorter than eps cannot leave B).
    With lam = m + beta + 1 and kap = -(m + beta) the weights have finite
    variance.
    """
    p = m + beta
    lam, kap = p + 1.0, -p
    sphere = m * unit_ball_volume(m)

    def run(s, size):
        gen = s.generator()
        eps = gen.random(size) ** (1.0 / lam)
        x = _directions(gen, size, m) * (1.0 - eps)[:, None]
        step = eps * (1.0 - gen.random(size)) ** (-1.0 / kap)
        y = x + step[:, None] * _directions(gen, size, m)
        out = np.sum(y * y, axis=1) >= 1.0
        wgt = (sphere * sphere * (1.0 - eps) ** (m - 1) * step ** (m - 1 + beta)
               / (lam * eps ** (lam - 1) * kap * eps ** kap * step ** (-kap - 1)))
        wgt = np.where(out, wgt, 0.0)
        return float(wgt.sum()), float((wgt * wgt).sum())

    parts = map_chunks(run, as_stream(stream), n)
    s1, s2 = sum(q[0] for q in parts), sum(q[1] for q in parts)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / (n - 1)
    return Estimate(mean, math.sqrt(var / n), MONTE_CARLO, n)


def c_constant_mc(m, alpha, a, n, stream=None) -> Estimate:
    pre = regime_prefactor(m, alpha, a)
    e = pair_integral_inside_mc(m, _beta(m, alpha), n, stream)
    return Estimate(pre * e.value, pre * e.error, MONTE_CARLO, n)


def d_constant_mc(m, alpha, a, n, stream=None) -> Estimate:
    pre = regime_prefactor(m, alpha, a)
    e = pair_integral_outside_mc(m, _beta(m, alpha), n, stream)
    return Estimate(pre * e.value, pre * e.error, MONTE_CARLO, n)


# -- certified lattice sums -------------------------------------------------------

def _leading_power(family: LatticeFamily, quantity: str) -> int:
    return 2 * family.m if quantity == "H" else family.m


def ball_term(family: LatticeFamily, r: float, t: float, quantity: str, tol: float) -> tuple[float, float]:
    """(value, error) of H_{B(0;r)}(t) or F_{B(0;r)}(t)."""
    h, f, err = ball_profile(family.m, r, t, tol)
    return (h if quantity == "H" else f), err


def _scaled_term(family, r, t, quantity, tol):
    # q(r) / r^p with p the small-r power: H_r ~ r^(2m), F_r ~ r^m; tol is on the scaled value
    m = family.m
    tau = t / (r * r)
    if quantity == "H":
        # floor keeps the request above roundoff of h ~ omega^2 (4 pi tau)^(-m/2)
        w = unit_ball_volume(m)
        mag = min(w, w * w * (4 * math.pi * tau) ** (-0.5 * m))
        h, _, err = unit_ball_profile(m, tau, max(tol * r ** m, 1e-14 * mag))
        return h / r ** m, err / r ** m
    w = unit_ball_volume(m)
    _, f, err = unit_ball_profile(m, tau, max(tol, 1e-14 * w))
    return f, err


def tail_integral(family: LatticeFamily, t: float, x0: float, quantity: str, tol: float = 1e-12) -> Estimate:
    """int_{x0}^inf q(a x^-alpha) dx for q = H_{B(0;.)}(t) or F_{B(0;.)}(t).

    With r = a x^-alpha and v = r^e, e = p - 1/alpha (p the small-r power of
    q), the integral becomes a^(1/alpha) / (alpha e) int_0^{r0^e} q(r)/r^p dv
    whose integrand is bounded and smooth at v = 0.
    """
    p = _leading_power(family, quantity)
    alpha, a = family.alpha, family.a
    e = p - 1.0 / alpha
    if not e > 0:
        raise RegimeError(f"sum of {quantity}_B over the lattice diverges for alpha={alpha:g}")
    r0 = a * x0 ** (-alpha)
    vmax = r0 ** e
    k = a ** (1.0 / alpha) / (alpha * e)
    inner_tol = tol / (4.0 * k * vmax)
    inner_err = [0.0]

    def g(v):
        if v <= 0.0:
            return _small_r_limit(family, t, quantity)
        val, err = _scaled_term(family, v ** (1.0 / e), t, quantity, inner_tol)
        inner_err[0] = max(inner_err[0], err)
        return val

    val, err = quad(g, 0.0, vmax, 0.5 * tol / k)
    return Estimate(k * val, k * (err + vmax * inner_err[0]), DETERMINISTIC, tol)


def _small_r_limit(family, t, quantity):
    w = unit_ball_volume(family.m)
    return w * w * (4 * math.pi * t) ** (-0.5 * family.m) if quantity == "H" else w


@dataclass(frozen=True)
class LatticeSum:
    """Certified sum over the lattice family of H or F of its balls, plus interactions."""

    quantity: str
    t: float
    estimate: Estimate
    n_terms: int
    partial: float
    tail_lo: float
    tail_hi: float
    cross_bound: float

    @property
    def ball_sum_bounds(self) -> tuple[float, float]:
        """Certified bounds on sum_i q(r_i) alone, interactions excluded."""
        return self.partial + self.tail_lo, self.partial + self.tail_hi


def lattice_sum(family: LatticeFamily, t: float, quantity: str, eps: float, max_terms: int = 1 << 20) -> LatticeSum:
    """H_Omega(t) (quantity "H") or F_Omega(t) (quantity "F") with certified error <= eps."""
    m, alpha = family.m, family.alpha
    if quantity not in ("H", "F"):
        raise ValueError("quantity must be 'H' or 'F'")
    if not eps > 0 or not t > 0:
        raise ValueError("need eps > 0 and t > 0")
    if quantity == "H" and not summability_criterion(m, alpha):
        raise RegimeError("heat content is infinite: alpha <= 1/(2m)")
    if quantity == "F" and not alpha * m > 1:
        raise RegimeError("heat loss needs finite measure: alpha > 1/m")
    cross = decoupling_bound(m, family.delta, t, family.power_sum(2 * m))
    budget = eps - 0.5 * cross
    if budget <= 0:
        raise CertificationError(f"decoupling bound alone exceeds eps={eps:g} at t={t:g}", 0.5 * cross)
    # smallest N (power of two) whose tail sandwich width q(N) fits a quarter of the budget
    n = 16
    while ball_term(family, float(family.radius(n)), t, quantity, 1e-3 * budget)[0] > 0.25 * budget:
        n *= 2
        if n > max_terms:
            raise CertificationError(f"more than {max_terms} terms needed for eps={eps:g}")
    per_ball = 0.25 * budget / n
    terms, errs = [], 0.0
    for r in family.radius(np.arange(1, n + 1)):
        v, e = ball_term(family, float(r), t, quantity, per_ball)
        terms.append(v)
        errs += e
    partial = math.fsum(terms)
    lo = tail_integral(family, t, n + 1, quantity, 0.125 * budget)
    gap = tail_integral_between(family, t, n, n + 1, quantity, 0.125 * budget)
    tail_lo, tail_hi = lo.value, lo.value + gap.value
    quad_err = errs + lo.error + gap.error
    value = partial + 0.5 * (tail_lo + tail_hi)
    value += 0.5 * cross if quantity == "H" else -0.5 * cross
    error = 0.5 * (tail_hi - tail_lo) + 0.5 * cross + quad_err
    if error > eps:
        raise CertificationError(f"achieved error above eps={eps:g}", error)
    return LatticeSum(quantity, t, Estimate(value, error, DETERMINISTIC, eps), n, partial,
                      tail_lo - quad_err, tail_hi + quad_err, cross)


def tail_integral_between(family, t, x0, x1, quantity, tol) -> Estimate:
    """int_{x0}^{x1} q(a x^-alpha) dx, a short smooth integral."""
    vals_err = [0.0]

    def f(x):
        v, e = ball_term(family, float(family.radius(x)), t, quantity, 0.1 * tol / (x1 - x0))
        vals_err[0] = max(vals_err[0], e)
        return v

    val, err = quad(f, x0, x1, 0.5 * tol)
    return Estimate(val, err + (x1 - x0) * vals_err[0], DETERMINISTIC, tol)


def lattice_heat_content(family: LatticeFamily, t: float, eps: float, max_terms: int = 1 << 20) -> Estimate:
    return lattice_sum(family, t, "H", eps, max_terms).estimate


def lattice_heat_loss(family: LatticeFamily, t: float, eps: float, max_terms: int = 1 << 20) -> Estimate:
    return lattice_sum(family, t, "F", eps, max_terms).estimate


def sum_integral_sandwich(family: LatticeFamily, t: float, quantity: str, tol: float = 1e-10) -> tuple[float, float]:
    """(int_1^inf q, int_0^inf q): bounds on sum_{i>=1} q(r_i) for decreasing i -> q(r_i).

    The upper integral is finite only when q(a x^-alpha) is integrable at
    x = 0 (alpha < 1/m for H, alpha < 1/(m-1) for F); otherwise inf.
    """
    lower = tail_integral(family, t, 1.0, quantity, tol).value
    m, alpha = family.m, family.alpha
    finite = alpha * m < 1 if quantity == "H" else alpha * (m - 1) < 1
    if not finite:
        return lower, math.inf
    head = tail_integral_between(family, t, 0.0, 1.0, quantity, tol).value
    return lower, lower + head


# -- remainders, fits, envelopes ---------------------------------------------------

def single_ball_remainder(m: int, r: float, t_grid, tol: float = 1e-13) -> VerificationReport:
    """|H_B - |B| + pi^(-1/2) Per(B) t^(1/2)| <= c_m r^(m-2) t on every grid point."""
    cm = single_ball_remainder_constant(m)
    per = m * unit_ball_volume(m) * r ** (m - 1)
    rep = VerificationReport("REMAINDER", [float(t) for t in t_grid],
                             notes=f"c_m = {cm!r}; lhs = |F - Per sqrt(t/pi)| by quadrature")
    for t in rep.t_grid:
        _, f, err = ball_profile(m, r, t, tol)
        lhs = abs(per * math.sqrt(t / math.pi) - f)
        rep.add(t, None, lhs, cm * r ** (m - 2) * t, err, ratio=lhs / (cm * r ** (m - 2) * t))
    return rep


def fit_power_law(points) -> tuple[float, float, float]:
    """Weighted least squares of log value on log t.

    points: iterable of (t, value, error).  Weights are (value/error)^2, the
    inverse variance of log value; zero errors fall back to equal weights.
    Returns (exponent, constant, exponent standard error).
    """
    pts = [tuple(map(float, p)) for p in points]
    if len(pts) < 4:
        raise ValueError("need at least 4 points")
    t, v, e = (np.array(c) for c in zip(*pts))
    if np.any(v <= 0) or np.any(t <= 0):
        raise ValueError("times and values must be positive")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t must be strictly increasing")
    w = (v / e) ** 2 if np.all(e > 0) else np.ones_like(v)
    X = np.column_stack([np.ones_like(t), np.log(t)])
    y = np.log(v)
    XtW = X.T * w
    cov = np.linalg.inv(XtW @ X)
    coef = cov @ (XtW @ y)
    resid = y - X @ coef
    s2 = float(w @ (resid * resid)) / (len(t) - 2)
    return float(coef[1]), float(math.exp(coef[0])), float(math.sqrt(cov[1, 1] * s2))


def perimeter_remainder(family: LatticeFamily, t_grid, eps_rel: float = 1e-3) -> list[dict]:
    """R(t) = |F_Omega(t) - pi^(-1/2) Per(Omega) t^(1/2)| with its certified error."""
    per = family.perimeter
    if not math.isfinite(per):
        raise RegimeError("perimeter is infinite for this alpha")
    rows = []
    for t in t_grid:
        t = float(t)
        s = lattice_sum(family, t, "F", eps_rel * t)
        f = s.estimate
        rows.append({"t": t, "F": f.value, "F_err": f.error,
                     "R": abs(f.value - per * math.sqrt(t / math.pi)), "R_err": f.error})
    return rows


def regime4_envelope(m: int, a: float, t_grid, eps_rel: float = 1e-3, alpha: float | None = None,
                     slack: float = 2.0) -> VerificationReport:
    """Perimeter-law remainder against its predicted order.

    For alpha = 1/(m-2) the order is t log(1/t) with no explicit constant:
    the constant is fitted at the largest grid t and every point must lie
    under ``slack`` times that envelope (a qualitative check).  For
    alpha > 1/(m-2) the bound c_m sum r_i^(m-2) t is explicit and checked
    as is.
    """
    if m < 3:
        raise ValueError("needs m >= 3")
    alpha = 1.0 / (m - 2) if alpha is None else alpha
    fam = LatticeFamily(m, a, alpha)
    reg = classify_regime(m, alpha)
    grid = sorted(float(t) for t in t_grid)
    rows = perimeter_remainder(fam, grid, eps_rel)
    rep = VerificationReport(f"ENVELOPE-{reg.id.value}", grid)
    if reg.id is RegimeId.R4:
        tm = rows[-1]
        c_fit = tm["R"] / (tm["t"] * math.log(1 / tm["t"]))
        rep.notes = f"qualitative: R(t) <= {slack:g} * C_fit t log(1/t), C_fit = {c_fit!r} fitted at t = {tm['t']!r}"
        for row in rows:
            env = slack * c_fit * row["t"] * math.log(1 / row["t"])
            rep.add(row["t"], None, row["R"], env, row["R_err"],
                    ratio_tlog=row["R"] / (row["t"] * math.log(1 / row["t"])), ratio_t=row["R"] / row["t"])
    elif reg.id is RegimeId.R5:
        k = single_ball_remainder_constant(m) * fam.power_sum(m - 2)
        rep.notes = f"R(t)/t <= c_m sum r_i^(m-2) = {k!r}"
        for row in rows:
            rep.add(row["t"], None, row["R"], k * row["t"], row["R_err"], ratio_t=row["R"] / row["t"])
    else:
        raise RegimeError(f"envelope check applies to R4/R5, got {reg.id.value}")
    return rep
