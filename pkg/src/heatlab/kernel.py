"""Euclidean heat kernel and the explicit Li-Yau / doubling constant for R^m."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import mpmath
import numpy as np

from .geometry import unit_ball_volume


def heat_kernel(m: int, d, t):
    """(4 pi t)^(-m/2) exp(-d^2 / 4t)."""
    d = np.asarray(d, dtype=float)
    t = np.asarray(t, dtype=float)
    v = (4.0 * np.pi * t) ** (-0.5 * m) * np.exp(-d * d / (4.0 * t))
    return float(v) if v.ndim == 0 else v


def liyau_lower(C: float, m: int, d, t):
    """Lower Li-Yau envelope exp(-C d^2/t) / (C |B(sqrt t)|) in R^m."""
    d, t = np.asarray(d, dtype=float), np.asarray(t, dtype=float)
    return np.exp(-C * d * d / t) / (C * unit_ball_volume(m) * t ** (0.5 * m))


def liyau_upper(C: float, m: int, d, t):
    """Upper Li-Yau envelope C exp(-d^2/(C t)) / |B(sqrt t)| in R^m."""
    d, t = np.asarray(d, dtype=float), np.asarray(t, dtype=float)
    return C * np.exp(-d * d / (C * t)) / (unit_ball_volume(m) * t ** (0.5 * m))


@dataclass(frozen=True)
class LiYauConstants:
    dim: int
    C: float
    K1: float
    K2: float
    L1: float
    L2: float

    def as_dict(self) -> dict:
        return asdict(self)


def sandwich_constants(C: float, dps: int = 50) -> tuple[float, float, float, float]:
    """K1, K2, L1, L2 for a given Li-Yau constant C, evaluated in extended precision."""
    with mpmath.workdps(dps):
        c = mpmath.mpf(C)
        p = mpmath.log(c) / mpmath.log(2)
        k1 = c ** -2 * mpmath.exp(-c)
        k2 = 2 * c ** (mpmath.mpf(15) / 4) * (c * mpmath.log(2 * c ** (mpmath.mpf(7) / 2 + p))) ** (3 * p / 4)
        l2 = 4 * c ** (mpmath.mpf(15) / 4) * (c * mpmath.log(2 * c ** (7 + p))) ** (1 + 3 * p / 4)
        return float(k1), float(k2), float(k1), float(l2)


def liyau_constant(m: int) -> LiYauConstants:
    """C_m = max(2^m, 4, (4 pi)^(m/2) / omega_m) and the derived sandwich constants.

    In R^m the lower Li-Yau bound reduces to C >= (4 pi)^(m/2)/omega_m and
    C >= 1/4, the upper one to C >= 4, and doubling to C >= 2^m.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    C = max(2.0 ** m, 4.0, (4.0 * math.pi) ** (0.5 * m) / unit_ball_volume(m))
    return LiYauConstants(m, C, *sandwich_constants(C))


def doubling_ratio_bound(C: float, r1: float, r2: float) -> float:
    """C (r2/r1)^(log C / log 2), the doubling bound on |B(r2)|/|B(r1)|."""
    if not r2 >= r1 > 0:
        raise ValueError("need r2 >= r1 > 0")
    return C * (r2 / r1) ** (math.log(C) / math.log(2.0))


def single_ball_remainder_constant(m: int) -> float:
    """c_m = 2^(m+2) m^3 omega_m."""
    return 2.0 ** (m + 2) * m ** 3 * unit_ball_volume(m)
