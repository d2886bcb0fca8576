"""Bounded functions sampled on a uniform truncated box in R^d (d = 1 or 2).

A GridFunction carries dense node values, a clamp extension policy (constant
continuation by the nearest box point), and a trusted radius: the distance
from the box center within which values are certified unpolluted by the
truncation.  Diagnostics mirror the continuum quantities

    var f   = sup f - inf f,
    |f|_Lip = sup |f(x)-f(y)| / |x-y|,
    winv(eps) = sup{ delta : |f(x)-f(y)| <= eps whenever |x-y| <= delta },

computed from node values only: the Lipschitz number is an adjacent-difference
estimate (exact as h -> 0 for smooth f) and winv is resolved to a multiple of
the spacing by an expanding ring scan, an under-approximation by at most 2h.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

import numpy as np


class Extension(str, Enum):
    CLAMP = "clamp"


@dataclass(frozen=True)
class GridDomain:
    """A uniform grid on a box, with identical spacing on every axis."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    spacing: float
    point_counts: tuple[int, ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("only dimensions 1 and 2 are supported")
        if self.spacing <= 0:
            raise ValueError("spacing must be > 0")
        for lo, up, n in zip(self.lower, self.upper, self.point_counts):
            if not up > lo:
                raise ValueError("upper must exceed lower componentwise")
            if n < 3:
                raise ValueError("need at least 3 points per axis")
            if abs((up - lo) / self.spacing - (n - 1)) > 1e-12 * max(1.0, n):
                raise ValueError("(upper-lower)/h must match point_counts-1")

    @classmethod
    def from_box(cls, lower, upper, h: float) -> "GridDomain":
        """Build a domain from box corners and a requested spacing.

        Point counts are snapped to integers; the spacing is adjusted (by at
        most half a cell over the whole box) so the corners stay exact.
        """
        lower = tuple(float(x) for x in np.atleast_1d(lower))
        upper = tuple(float(x) for x in np.atleast_1d(upper))
        if h <= 0:
            raise ValueError("spacing must be > 0")
        if len(lower) != len(upper):
            raise ValueError("lower and upper must have the same dimension")
        spans = [up - lo for lo, up in zip(lower, upper)]
        counts = tuple(int(round(s / h)) + 1 for s in spans)
        if any(n < 3 for n in counts):
            raise ValueError("box too small for requested spacing")
        snapped = spans[0] / (counts[0] - 1)
        for s, n in zip(spans, counts):
            if abs(s / (n - 1) - snapped) > 1e-9 * snapped:
                raise ValueError("axes must share one uniform spacing")
        return cls(lower, upper, snapped, counts)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def half_width(self) -> float:
        return min(up - lo for lo, up in zip(self.lower, self.upper)) / 2.0

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lower) + np.asarray(self.upper)) / 2.0

    @property
    def diameter(self) -> float:
        spans = np.asarray(self.upper) - np.asarray(self.lower)
        return float(np.sqrt(np.sum(spans * spans)))

    def axis_nodes(self, axis: int) -> np.ndarray:
        return self.lower[axis] + self.spacing * np.arange(self.point_counts[axis])

    def points(self) -> np.ndarray:
        """All nodes as an (N, dim) array in C order of the value array."""
        axes = [self.axis_nodes(k) for k in range(self.dim)]
        if self.dim == 1:
            return axes[0][:, None]
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        return np.stack([xx.ravel(), yy.ravel()], axis=-1)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Node values on a GridDomain with clamp extension outside the box."""

    domain: GridDomain
    values: np.ndarray
    trusted_radius: float
    extension: Extension = Extension.CLAMP

    def __post_init__(self):
        if tuple(self.values.shape) != self.domain.point_counts:
            raise ValueError("values shape must match the domain point counts")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")
        if self.trusted_radius > self.domain.half_width + 1e-12:
            raise ValueError("trusted_radius cannot exceed half the box width")

    def with_values(self, values: np.ndarray, trusted_radius: float | None = None) -> "GridFunction":
        tr = self.trusted_radius if trusted_radius is None else max(0.0, trusted_radius)
        return replace(self, values=values, trusted_radius=tr)

    def shrink_trusted(self, reach: float) -> float:
        return max(0.0, self.trusted_radius - reach)

    def trusted_mask(self) -> np.ndarray:
        """Boolean array marking nodes within trusted_radius of the box center."""
        tol = 1e-9 * self.domain.spacing
        masks = []
        for k in range(self.domain.dim):
            ax = np.abs(self.domain.axis_nodes(k) - self.domain.center[k])
            masks.append(ax <= self.trusted_radius + tol)
        if self.domain.dim == 1:
            return masks[0]
        return masks[0][:, None] & masks[1][None, :]

    def trusted_values(self) -> np.ndarray:
        return self.values[self.trusted_mask()]


def sample(domain: GridDomain, formula: Callable, trusted_radius: float | None = None) -> GridFunction:
    """Sample a scalar field on the grid nodes.

    ``formula`` takes an (N, dim) array of points and returns N values (a
    scalar-in/scalar-out callable is accepted and mapped over nodes).
    """
    pts = domain.points()
    try:
        vals = np.asarray(formula(pts), dtype=float)
        if vals.shape != (pts.shape[0],):
            raise TypeError
    except Exception:  # scalar-in/scalar-out callables: map over nodes
        vals = np.asarray([formula(p) for p in pts], dtype=float)
    if vals.shape != (pts.shape[0],):
        raise ValueError("formula must return one value per node")
    if not np.all(np.isfinite(vals)):
        raise ValueError("formula produced a non-finite value on the box")
    tr = domain.half_width if trusted_radius is None else trusted_radius
    return GridFunction(domain, vals.reshape(domain.point_counts), tr)


def values_at(f: GridFunction, points) -> np.ndarray:
    """Multilinear interpolation with clamp extension, vectorized over rows.

    Inside the box this is linear (d=1) or bilinear (d=2) interpolation
    between nodes; outside it returns the value at the componentwise-nearest
    box point.  As a map of f it is 1-Lipschitz in sup norm.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] if f.domain.dim == 1 else pts[None, :]
    d = f.domain.dim
    h = f.domain.spacing
    idx0 = []
    frac = []
    for k in range(d):
        u = (pts[:, k] - f.domain.lower[k]) / h
        i0 = np.clip(np.floor(u).astype(np.int64), 0, f.domain.point_counts[k] - 2)
        w = np.clip(u - i0, 0.0, 1.0)  # clipping realizes the clamp extension
        idx0.append(i0)
        frac.append(w)
    if d == 1:
        v = f.values
        i = idx0[0]
        w = frac[0]
        return (1.0 - w) * v[i] + w * v[i + 1]
    i, j = idx0
    wx, wy = frac
    v = f.values
    return ((1.0 - wx) * (1.0 - wy) * v[i, j]
            + wx * (1.0 - wy) * v[i + 1, j]
            + (1.0 - wx) * wy * v[i, j + 1]
            + wx * wy * v[i + 1, j + 1])


def value_at(f: GridFunction, x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(values_at(f, x[None, :])[0])


def variation(f: GridFunction) -> float:
    """var f = max - min over grid values."""
    return float(np.max(f.values) - np.min(f.values))


def lipschitz_estimate(f: GridFunction) -> float:
    """Max adjacent-node difference quotient per axis (lower bound on |f|_Lip)."""
    best = 0.0
    for axis in range(f.domain.dim):
        d = np.diff(f.values, axis=axis)
        if d.size:
            best = max(best, float(np.max(np.abs(d))) / f.domain.spacing)
    return best


def curvature_estimate(f: GridFunction) -> float:
    """Max second-difference quotient per axis (estimates sup |f''| for smooth f)."""
    best = 0.0
    h2 = f.domain.spacing ** 2
    for axis in range(f.domain.dim):
        d2 = np.diff(f.values, n=2, axis=axis)
        if d2.size:
            best = max(best, float(np.max(np.abs(d2))) / h2)
    return best


def _ring_offsets(dim: int, k: int) -> list[tuple[int, ...]]:
    """Integer offsets with (k-1)^2 < i^2 + j^2 <= k^2, one per unordered pair."""
    if dim == 1:
        return [(k,)]
    out = []
    lo2, hi2 = (k - 1) * (k - 1), k * k
    for i in range(0, k + 1):
        for j in range(-k, k + 1):
            if i == 0 and j <= 0:
                continue  # (0, j) and (0, -j) are the same pair
            n2 = i * i + j * j
            if lo2 < n2 <= hi2:
                out.append((i, j))
    return out


def _offset_max_diff(values: np.ndarray, off: tuple[int, ...]) -> float:
    """Max |f(x + off*h) - f(x)| over node pairs for one integer offset."""
    if len(off) == 1:
        (i,) = off
        return float(np.max(np.abs(values[i:] - values[:-i]))) if i else 0.0
    i, j = off
    n0, n1 = values.shape
    a = values[i:, :] if i else values
    b = values[: n0 - i, :] if i else values
    if j >= 0:
        a, b = a[:, j:], b[:, : n1 - j]
    else:
        a, b = a[:, : n1 + j], b[:, -j:]
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)))


def inverse_modulus(f: GridFunction, eps: float) -> float:
    """Largest grid-resolvable delta with |f(x)-f(y)| <= eps for |x-y| <= delta.

    Expanding ring scan over integer offsets: ring k certifies delta = k*h.
    The result is a multiple of h (capped at half the box diameter), hence an
    under-approximation of the continuum winv(eps) by at most 2h -- the safe
    direction for the convergence guarantee, which shrinks with delta.
    """
    if eps <= 0:
        raise ValueError("inverse_modulus requires eps > 0")
    h = f.domain.spacing
    cap = 0.5 * f.domain.diameter
    k_max = int(np.floor(cap / h + 1e-9))
    for k in range(1, k_max + 1):
        for off in _ring_offsets(f.domain.dim, k):
            if _offset_max_diff(f.values, off) > eps:
                return (k - 1) * h
    return cap


@dataclass(frozen=True)
class Diagnostics:
    """var f, the Lipschitz estimate, and winv as an on-demand map."""

    varf: float
    lip_estimate: float
    inv_modulus: Callable[[float], float] = field(repr=False)


def diagnostics(f: GridFunction) -> Diagnostics:
    return Diagnostics(variation(f), lipschitz_estimate(f), lambda eps: inverse_modulus(f, eps))
