"""Euclidean geometry of balls and finite disjoint unions of balls."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import betainc, betaincc, gammaln

from .rng import Stream, as_stream


class NonPositiveGap(ValueError):
    pass


class OverlapError(ValueError):
    pass


def unit_ball_volume(m: int) -> float:
    return math.exp(0.5 * m * math.log(math.pi) - gammaln(0.5 * m + 1.0))


def ball_volume(m: int, r):
    """omega_m r^m."""
    v = unit_ball_volume(m) * np.asarray(r, dtype=float) ** m
    return float(v) if v.ndim == 0 else v


def ball_perimeter(m: int, r):
    """Surface measure m omega_m r^(m-1) of the sphere of radius r."""
    v = m * unit_ball_volume(m) * np.asarray(r, dtype=float) ** (m - 1)
    return float(v) if v.ndim == 0 else v


def unit_lens(m: int, s: float) -> float:
    """|B(0;1) n B(s e1;1)| for scalar s, the kernel of every radial integral."""
    if s <= 0.0:
        return unit_ball_volume(m)
    if s >= 2.0:
        return 0.0
    if s < 1.0:
        # I_{1-y}(b, a) = 1 - I_y(a, b); keeps the O(s) deficit that 1 - s^2/4 would round away
        return unit_ball_volume(m) * float(betaincc(0.5, 0.5 * (m + 1), 0.25 * s * s))
    x = (2.0 - s) * (2.0 + s) * 0.25
    return unit_ball_volume(m) * float(betainc(0.5 * (m + 1), 0.5, x))


def unit_lens_complement(m: int, s: float) -> float:
    """omega_m - unit_lens(m, s), evaluated without cancellation at small s."""
    if s <= 0.0:
        return 0.0
    if s >= 2.0:
        return unit_ball_volume(m)
    return unit_ball_volume(m) * float(betainc(0.5, 0.5 * (m + 1), 0.25 * s * s))


def lens_volume(m: int, r1, r2, s):
    """Volume of B(0;r1) n B(s e1;r2).

    Each ball contributes a hyperspherical cap cut off by the radical plane;
    a cap of height parameter x = 1 - h^2/r^2 has volume
    omega_m r^m I_x((m+1)/2, 1/2) / 2.  The factor x is assembled from
    products of (r1 + r2 - s), (s + r2 - r1), (s + r1 - r2) so that nothing
    cancels as the balls approach tangency.  Broadcasts over array inputs.
    """
    r1, r2, s = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r1, r2, s)))
    w = unit_ball_volume(m)
    out = np.zeros(r1.shape)
    rmin = np.minimum(r1, r2)
    inside = s <= np.abs(r1 - r2)
    out[inside] = w * rmin[inside] ** m
    mid = ~inside & (s < r1 + r2)
    if np.any(mid):
        a, b, d = r1[mid], r2[mid], s[mid]
        g = a + b - d
        # radii difference first: d + b - a would cancel when d << a
        p = d + (b - a)
        q = d + (a - b)
        c = 0.5 * (m + 1)
        # p/d and q/d lie in (0, 2] here; dividing first avoids underflow of d^2
        core = g * (a + b + d) * (p / d) * (q / d) * 0.25
        # |a - b| < d here, so (a - b) / d is finite even for subnormal d
        e = (a - b) / d
        ha = 0.5 * d / a + 0.5 * e * ((a + b) / a)
        hb = 0.5 * d / b - 0.5 * e * ((a + b) / b)
        out[mid] = _cap(m, a, ha, core / (a * a), c) + _cap(m, b, hb, core / (b * b), c)
    return out if out.ndim else float(out)


def _cap(m, r, h, x, c):
    # h = signed plane distance / r, x = 1 - h^2; near-full caps (small |h|)
    # go through I_x(c, 1/2) = 1 - I_{h^2}(1/2, c) to keep relative accuracy
    y = h * h
    small = y < 0.5
    full = np.where(small, betaincc(0.5, c, np.where(small, y, 0.0)),
                    betainc(c, 0.5, np.clip(x, 0.0, 1.0)))
    half = 0.5 * full
    frac = np.where(h >= 0, half, 1.0 - half)
    return unit_ball_volume(m) * r ** m * frac


@dataclass(frozen=True)
class SeparationGap:
    delta: float


@dataclass(eq=False)
class BallUnion:
    """Finite union of pairwise disjoint open balls in R^m."""

    dim: int
    centers: np.ndarray
    radii: np.ndarray
    label: str = ""
    lattice_spacing: float | None = None
    _grid: object = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        self.radii = np.atleast_1d(np.asarray(self.radii, dtype=float))
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.centers.shape != (len(self.radii), self.dim):
            raise ValueError(f"centers shape {self.centers.shape} does not match {len(self.radii)} balls in R^{self.dim}")
        if len(self.radii) == 0 or np.any(~(self.radii > 0)):
            raise ValueError("radii must be positive and at least one ball is required")
        self._check_disjoint()

    @classmethod
    def single(cls, m: int, r: float, center=None, label: str = "") -> "BallUnion":
        c = np.zeros(m) if center is None else center
        return cls(m, [c], [r], label=label or f"B(0;{r:g})")

    def _check_disjoint(self):
        if len(self.radii) < 2:
            return
        tree = cKDTree(self.centers)
        pairs = tree.query_pairs(2.0 * float(self.radii.max()), output_type="ndarray")
        if len(pairs) == 0:
            return
        i, j = pairs[:, 0], pairs[:, 1]
        dist = np.linalg.norm(self.centers[i] - self.centers[j], axis=1)
        bad = dist < self.radii[i] + self.radii[j]
        if np.any(bad):
            k = int(np.argmax(bad))
            raise OverlapError(f"balls {i[k]} and {j[k]} overlap")

    @property
    def n_balls(self) -> int:
        return len(self.radii)

    @cached_property
    def volume(self) -> float:
        return float(unit_ball_volume(self.dim) * np.sum(self.radii ** self.dim))

    @cached_property
    def perimeter(self) -> float:
        return float(self.dim * unit_ball_volume(self.dim) * np.sum(self.radii ** (self.dim - 1)))

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.centers)

    # -- membership -------------------------------------------------------

    def locate(self, points) -> np.ndarray:
        """Index of the ball containing each point, -1 outside the union."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise ValueError(f"points have dimension {pts.shape[1]}, union lives in R^{self.dim}")
        if self.n_balls <= 8:
            out = np.full(len(pts), -1, dtype=np.int64)
            for k in range(self.n_balls):
                d2 = np.sum((pts - self.centers[k]) ** 2, axis=1)
                out[d2 < self.radii[k] ** 2] = k
            return out
        return self._spatial_grid.locate(pts)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        hit = self.locate(x) >= 0
        return bool(hit[0]) if x.ndim == 1 else hit

    @property
    def _spatial_grid(self) -> "_Grid":
        if self._grid is None:
            self._grid = _Grid(self.centers, self.radii)
        return self._grid


class _Grid:
    """Spatial hash with cell size max r: a containing center is always in a neighbouring cell."""

    def __init__(self, centers, radii):
        self.centers, self.radii = centers, radii
        m = centers.shape[1]
        self.h = float(radii.max())
        cells = np.floor(centers / self.h).astype(np.int64)
        self.lo = cells.min(axis=0) - 1
        self.shape = tuple(int(v) for v in cells.max(axis=0) - self.lo + 2)
        if math.prod(float(v) for v in self.shape) > 2.0 ** 62:
            raise ValueError("ball union too spread out for the spatial grid")
        keys = np.ravel_multi_index(tuple((cells - self.lo).T), self.shape)
        order = np.argsort(keys, kind="stable")
        self.keys, counts = np.unique(keys[order], return_counts=True)
        width = int(counts.max())
        self.table = np.full((len(self.keys), width), -1, dtype=np.int64)
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        for slot in range(width):
            has = counts > slot
            self.table[has, slot] = order[starts[has] + slot]
        self.offsets = np.array(np.meshgrid(*[[-1, 0, 1]] * m, indexing="ij")).reshape(m, -1).T

    def locate(self, pts):
        out = np.full(len(pts), -1, dtype=np.int64)
        base = np.floor(pts / self.h).astype(np.int64) - self.lo
        hi = np.array(self.shape)
        for off in self.offsets:
            c = base + off
            ok = np.all((c >= 0) & (c < hi), axis=1)
            if not np.any(ok):
                continue
            idx = np.flatnonzero(ok)
            key = np.ravel_multi_index(tuple(c[idx].T), self.shape)
            pos = np.searchsorted(self.keys, key)
            pos = np.minimum(pos, len(self.keys) - 1)
            found = self.keys[pos] == key
            idx, pos = idx[found], pos[found]
            for slot in range(self.table.shape[1]):
                b = self.table[pos, slot]
                valid = b >= 0
                if not np.any(valid):
                    break
                i, bb = idx[valid], b[valid]
                d2 = np.sum((pts[i] - self.centers[bb]) ** 2, axis=1)
                hit = d2 < self.radii[bb] ** 2
                out[i[hit]] = bb[hit]
        return out


# -- sampling -------------------------------------------------------------

def uniform_in_balls(omega: BallUnion, n: int, gen: np.random.Generator):
    """Draw n uniform points of the union together with the index of their ball.

    Ball k is picked with probability r_k^m / sum r^m; inside the ball a point
    is a Gaussian direction scaled by radius U^(1/m) (polar method).
    """
    m = omega.dim
    w = omega.radii ** m
    if omega.n_balls == 1:
        home = np.zeros(n, dtype=np.int64)
    else:
        cdf = np.cumsum(w)
        home = np.searchsorted(cdf, gen.random(n) * cdf[-1], side="right")
        home = np.minimum(home, omega.n_balls - 1)
    d = gen.standard_normal((n, m))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    rad = omega.radii[home] * gen.random(n) ** (1.0 / m)
    return omega.centers[home] + d * rad[:, None], home


def sample_uniform(omega: BallUnion, n: int, stream=None, return_index: bool = False):
    """n i.i.d. uniform points on the union; deterministic given the stream."""
    if n < 1:
        raise ValueError("n must be >= 1")
    from .rng import chunk_sizes
    s = as_stream(stream)
    pts, idx = [], []
    for k, size in enumerate(chunk_sizes(n)):
        p, h = uniform_in_balls(omega, size, s.child(k).generator())
        pts.append(p)
        idx.append(h)
    pts, idx = np.concatenate(pts), np.concatenate(idx)
    return (pts, idx) if return_index else pts


def separation_delta(omega: BallUnion, lattice_spacing: float | None = None) -> SeparationGap:
    """Gap between the balls: spacing - 2 max r on a lattice, else min |z_i - z_j| - r_i - r_j."""
    spacing = lattice_spacing if lattice_spacing is not None else omega.lattice_spacing
    if spacing is not None:
        delta = float(spacing - 2.0 * omega.radii.max())
        if delta <= 0:
            raise NonPositiveGap(f"lattice gap {delta:g} <= 0 (max radius {omega.radii.max():g})")
        return SeparationGap(delta)
    if omega.n_balls == 1:
        return SeparationGap(math.inf)
    tree = omega.tree
    rmax = float(omega.radii.max())
    # nearest neighbours bound the search radius for the generic gap
    dnn, _ = tree.query(omega.centers, k=2)
    reach = float(dnn[:, 1].max()) + 2 * rmax
    pairs = tree.query_pairs(reach, output_type="ndarray")
    i, j = pairs[:, 0], pairs[:, 1]
    gaps = np.linalg.norm(omega.centers[i] - omega.centers[j], axis=1) - omega.radii[i] - omega.radii[j]
    return SeparationGap(float(gaps.min()))
