"""heatlab command line: constants, single-ball and lattice sweeps, functionals, verification, fits.

Exit status: 0 success, 1 a verification report failed, 2 usage error,
3 numeric failure (tolerance or certificate not reached).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import rng
from .asymptotics import (CertificationError, LatticeFamily, RegimeError, classify_regime, decoupling_bound,
                          fit_power_law, lattice_sum, regime4_envelope, single_ball_remainder)
from .estimators import Estimate, QuadratureError, ball_profile
from .functionals import functional_values
from .geometry import BallUnion, NonPositiveGap, separation_delta
from .kernel import liyau_constant, single_ball_remainder_constant
from .report import _clean
from .theorems import (Budget, lemma2_lattice_instance, verify_basic_facts, verify_decoupling, verify_theorem1,
                       verify_theorem2, verify_theorem3i)

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    m: int = 2
    r: float = 1.0
    a: float = 0.25
    alpha: float | None = None
    t: list = field(default_factory=list)
    tol: float = 1e-10
    eps: float = 1e-3
    samples: int = 200_000
    seed: int = 0
    out: str | None = None
    format: str = "csv"
    stamp: bool = False


def parse_grid(spec: str) -> list[float]:
    """``logspace:lo:hi:n``, ``linspace:lo:hi:n`` or a comma list; returns a sorted positive grid."""
    try:
        if spec.startswith(("logspace:", "linspace:")):
            kind, lo, hi, n = spec.split(":")
            lo, hi, n = float(lo), float(hi), int(n)
            if n < 1 or lo <= 0 or hi < lo:
                raise UsageError(f"bad grid bounds in {spec!r}")
            if kind == "logspace":
                grid = np.logspace(math.log10(lo), math.log10(hi), n)
                grid[0], grid[-1] = lo, hi if n > 1 else lo
            else:
                grid = np.linspace(lo, hi, n)
            vals = [float(x) for x in grid]
        else:
            vals = [float(x) for x in spec.split(",") if x.strip()]
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"cannot parse t-grid {spec!r}") from exc
    if not vals or any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise UsageError(f"t-grid {spec!r} must contain positive finite times")
    return sorted(set(vals))


def fmt(x) -> str:
    """Shortest round-trip scientific notation."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return np.format_float_scientific(float(x), unique=True, trim="-") if math.isfinite(x) else repr(float(x))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj, stamp: bool) -> str:
    obj = _clean(obj)
    if stamp:
        obj = dict(obj, generated_at=datetime.now(timezone.utc).isoformat())
    return json.dumps(obj, indent=2) + "\n"


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------------

def cmd_constants(cfg: RunConfig) -> int:
    c = liyau_constant(cfg.m)
    payload = {"m": cfg.m, "C": c.C, "K1": c.K1, "K2": c.K2, "L1": c.L1, "L2": c.L2,
               "c_m": single_ball_remainder_constant(cfg.m)}
    _emit(cfg, _json_text(payload, cfg.stamp))
    return EXIT_OK


def cmd_ball(cfg: RunConfig) -> int:
    rows = []
    for t in cfg.t:
        h, f, err = ball_profile(cfg.m, cfg.r, t, cfg.tol)
        rows.append((t, h, err, f, err))
    header = ["t", "H", "H_err", "F", "F_err"]
    if cfg.format == "json":
        _emit(cfg, _json_text({"m": cfg.m, "r": cfg.r, "rows": [dict(zip(header, r)) for r in rows]}, cfg.stamp))
    else:
        _emit(cfg, _csv_text(header, rows))
    return EXIT_OK


def _lattice_rows(cfg: RunConfig, quantity: str | None):
    fam = LatticeFamily(cfg.m, cfg.a, cfg.alpha)
    reg = classify_regime(cfg.m, cfg.alpha)
    if quantity is None:
        quantity = "H" if reg.quantity == "H" else "F"
    rows = []
    for t in cfg.t:
        # eps is relative: the first pass sizes the absolute budget
        rough = lattice_sum(fam, t, quantity, _rough_eps(fam, t, quantity))
        s = lattice_sum(fam, t, quantity, cfg.eps * abs(rough.estimate.value))
        rows.append((t, s.estimate.value, s.estimate.error, reg.id.value, reg.leading_exponent))
    return quantity, rows


def _rough_eps(fam, t, quantity):
    cross = decoupling_bound(fam.m, fam.delta, t, fam.power_sum(2 * fam.m))
    scale = ball_profile(fam.m, fam.a, t, 1e-6)[0 if quantity == "H" else 1]
    return max(cross, 0.1 * scale)


def cmd_lattice(cfg: RunConfig, quantity: str | None) -> int:
    if cfg.alpha is None:
        raise UsageError("lattice needs --alpha")
    quantity, rows = _lattice_rows(cfg, quantity)
    header = ["t", "value", "err", "regime", "predicted_exponent"]
    if cfg.format == "json":
        _emit(cfg, _json_text({"m": cfg.m, "a": cfg.a, "alpha": cfg.alpha, "quantity": quantity,
                               "rows": [dict(zip(header, r)) for r in rows]}, cfg.stamp))
    else:
        _emit(cfg, _csv_text(header, rows))
    return EXIT_OK


def _union(cfg: RunConfig, n_balls: int | None, window: int | None) -> BallUnion:
    if cfg.alpha is None and window is None and n_balls is None:
        return BallUnion.single(cfg.m, cfg.r, label=f"ball m={cfg.m} r={cfg.r:g}")
    fam = LatticeFamily(cfg.m, cfg.a, cfg.alpha or 0.0)
    if window is not None:
        return fam.window(window)
    return fam.truncate(n_balls or 500)


def cmd_functionals(cfg: RunConfig, n_balls, window) -> int:
    omega = _union(cfg, n_balls, window)
    base = rng.Stream(cfg.seed)
    rows = []
    for j, t in enumerate(cfg.t):
        fv = functional_values(omega, t, cfg.samples, base.child("t", j))
        rows.append((t, fv.g_mu.value, fv.g_mu.error, fv.g_nu.value, fv.g_nu.error))
    header = ["t", "g_mu", "g_mu_err", "g_nu", "g_nu_err"]
    if cfg.format == "json":
        _emit(cfg, _json_text({"label": omega.label, "rows": [dict(zip(header, r)) for r in rows]}, cfg.stamp))
    else:
        _emit(cfg, _csv_text(header, rows))
    return EXIT_OK


def cmd_verify(cfg: RunConfig, theorem: str, n_balls, window, N: int) -> int:
    budget = Budget(samples=cfg.samples, tol=cfg.tol, seed=cfg.seed)
    if theorem in ("T1", "T2"):
        omega = _union(cfg, n_balls, window)
        rep = (verify_theorem1 if theorem == "T1" else verify_theorem2)(omega, cfg.t, budget)
    elif theorem == "T3ii":
        omega = _union(cfg, n_balls, window if window is not None else 5)
        try:
            gap = separation_delta(omega, 1.0)
        except NonPositiveGap as exc:
            raise UsageError(str(exc)) from exc
        rep = verify_decoupling(omega, gap, cfg.t, budget)
    elif theorem == "T3i":
        if cfg.alpha is None:
            raise UsageError("T3i needs --alpha")
        rep = verify_theorem3i(LatticeFamily(cfg.m, cfg.a, cfg.alpha), cfg.t, n_balls or 500, budget)
    elif theorem == "L2":
        rep = lemma2_lattice_instance(cfg.m, cfg.a, cfg.alpha or 0.7, cfg.t[0], N, cfg.tol)
    elif theorem == "FACTS":
        grid_h, grid_f = [], []
        for t in cfg.t:
            h, f, err = ball_profile(cfg.m, cfg.r, t, cfg.tol)
            grid_h.append((t, Estimate(h, err)))
            grid_f.append((t, Estimate(f, err)))
        rep = verify_basic_facts(grid_h, grid_f)
    elif theorem == "REMAINDER":
        rep = single_ball_remainder(cfg.m, cfg.r, cfg.t)
    elif theorem == "ENVELOPE":
        rep = regime4_envelope(cfg.m, cfg.a, cfg.t, cfg.eps, alpha=cfg.alpha)
    else:  # argparse restricts the choices
        raise UsageError(f"unknown theorem {theorem}")
    _emit(cfg, _json_text(rep.as_dict(), cfg.stamp))
    print(rep.summary(), file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAILED


def cmd_fit(cfg: RunConfig, source: str) -> int:
    with (sys.stdin if source == "-" else open(source, newline="")) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise UsageError("empty input")
    vcol = "value" if "value" in rows[0] else next((k for k in ("H", "F", "g_mu") if k in rows[0]), None)
    if vcol is None or "t" not in rows[0]:
        raise UsageError("input needs a t column and one of value, H, F, g_mu")
    ecol = {"value": "err", "H": "H_err", "F": "F_err", "g_mu": "g_mu_err"}[vcol]
    pts = [(float(r["t"]), float(r[vcol]), float(r.get(ecol) or 0.0)) for r in rows]
    pts = [p for p in sorted(pts) if cfg.t[0] <= p[0] <= cfg.t[-1]] if cfg.t else sorted(pts)
    slope, const, se = fit_power_law(pts)
    payload = {"column": vcol, "n_points": len(pts), "exponent": slope, "constant": const, "exponent_stderr": se}
    if "predicted_exponent" in rows[0]:
        payload["predicted_exponent"] = float(rows[0]["predicted_exponent"])
    _emit(cfg, _json_text(payload, cfg.stamp))
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--m", type=int, default=2, help="dimension (default 2)")
    common.add_argument("--seed", type=int, default=rng.default_seed(),
                        help="64-bit seed (default $HEATLAB_SEED or 0)")
    common.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=["csv", "json"], default=None, help="output format")
    common.add_argument("--stamp", action="store_true", help="add a generation timestamp (JSON only)")

    timed = argparse.ArgumentParser(add_help=False)
    timed.add_argument("--t", dest="t", default="logspace:1e-4:1:9",
                       help="time grid: logspace:lo:hi:n, linspace:lo:hi:n or a comma list")
    timed.add_argument("--tol", type=float, default=1e-10, help="absolute quadrature tolerance")

    shape = argparse.ArgumentParser(add_help=False)
    shape.add_argument("--r", type=float, default=1.0, help="ball radius for single-ball runs")
    shape.add_argument("--a", type=float, default=0.25, help="lattice radius scale a in (0, 1/4]")
    shape.add_argument("--alpha", type=float, default=None, help="lattice radius exponent; r_i = a i^-alpha")
    shape.add_argument("--n-balls", type=int, default=None, help="truncate the lattice to the first N balls")
    shape.add_argument("--window", type=int, default=None,
                       help="use all balls with |z|_inf <= W (a (2W+1)^m window)")
    shape.add_argument("--samples", type=int, default=200_000, help="Monte Carlo samples per t")

    p = argparse.ArgumentParser(prog="heatlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("constants", parents=[common], help="Li-Yau and sandwich constants as JSON")
    sub.add_parser("ball", parents=[common, timed, shape], help="H and F of one ball by quadrature")
    lat = sub.add_parser("lattice", parents=[common, timed, shape], help="certified lattice sums")
    lat.add_argument("--eps", type=float, default=1e-3, help="relative certified error per point")
    lat.add_argument("--quantity", choices=["H", "F"], default=None,
                     help="default: H in the first regime, F otherwise")
    sub.add_parser("functionals", parents=[common, timed, shape], help="Monte Carlo G_mu and G_nu")
    ver = sub.add_parser("verify", parents=[common, timed, shape], help="run one verification report")
    ver.add_argument("--theorem", required=True,
                     choices=["T1", "T2", "T3i", "T3ii", "L2", "FACTS", "REMAINDER", "ENVELOPE"])
    ver.add_argument("--eps", type=float, default=1e-3, help="relative lattice error (ENVELOPE)")
    ver.add_argument("--N", type=int, default=64, help="number of terms for L2")
    fit = sub.add_parser("fit", parents=[common], help="power-law fit of a CSV sweep")
    fit.add_argument("input", help="CSV with t and value columns ('-' for stdin)")
    fit.add_argument("--t", dest="t", default=None, help="restrict to this t range (lo,hi or a grid spec)")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    default_fmt = "json" if ns.command in ("constants", "verify", "fit") else "csv"
    try:
        grid = parse_grid(ns.t) if getattr(ns, "t", None) else []
        cfg = RunConfig(command=ns.command, m=ns.m, r=getattr(ns, "r", 1.0), a=getattr(ns, "a", 0.25),
                        alpha=getattr(ns, "alpha", None), t=grid, tol=getattr(ns, "tol", 1e-10),
                        eps=getattr(ns, "eps", 1e-3), samples=getattr(ns, "samples", 200_000),
                        seed=ns.seed, out=ns.out, format=ns.format or default_fmt, stamp=ns.stamp)
        if cfg.m < 2:
            raise UsageError("--m must be >= 2")
        if not 0 <= cfg.seed < 2 ** 64:
            raise UsageError("--seed must be a 64-bit unsigned value")
        rng.set_workers(ns.threads)
        if ns.command == "constants":
            return cmd_constants(cfg)
        if ns.command == "ball":
            return cmd_ball(cfg)
        if ns.command == "lattice":
            return cmd_lattice(cfg, ns.quantity)
        if ns.command == "functionals":
            return cmd_functionals(cfg, ns.n_balls, ns.window)
        if ns.command == "verify":
            return cmd_verify(cfg, ns.theorem, ns.n_balls, ns.window, ns.N)
        return cmd_fit(cfg, ns.input)
    except (UsageError, RegimeError, NonPositiveGap, FileNotFoundError) as exc:
        print(f"heatlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"heatlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, CertificationError, FloatingPointError) as exc:
        print(f"heatlab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    finally:
        rng.set_workers(1)


def main() -> None:
    sys.exit(run())
