"""The Hopf-Lax operator (Phi_t f)(x) = sup_a ( f(x+a) - t c(a/t) ) on a grid.

Offsets a range over grid multiples with |a| bounded by the cost's search
radius, which is exact for bounded f: beyond it every candidate is dominated
by a = 0.  Two paths compute the same sup:

  * apply_bruteforce -- scans all offsets in lexicographic order (the
    reference; O(N * M) work for M offsets per node),
  * apply_fast       -- divide-and-conquer over the monotone argmax structure
    of A[i, j] = f[j] - c_t((j - i) h), valid for convex radial costs
    (O(N log N) per axis; quadratic in d = 1, 2 and power costs in d = 1).

Both paths evaluate candidates with identical float expressions and break
ties toward the lexicographically smallest offset.  In d = 1 the fast path
therefore reproduces the brute-force output bit for bit; in d = 2 the two
axis passes split the cost into two subtractions, so values agree only up to
float associativity (~1e-13 relative).
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from . import cost as costmod
from .cost import CostFunction, CostKind
from .errors import FastPathUnavailableError
from .gridfn import GridFunction, variation


@dataclass(frozen=True)
class HopfLaxStep:
    """One Hopf-Lax application: cost, time scale, and argmax search bound."""

    cost: CostFunction
    t: float
    radius: float

    def __post_init__(self):
        if self.t <= 0:
            raise ValueError("step time must be > 0")
        if self.radius < 0 or not np.isfinite(self.radius):
            raise ValueError("search radius must be finite and >= 0")

    @classmethod
    def for_input(cls, cost: CostFunction, t: float, f: GridFunction) -> "HopfLaxStep":
        """Bound the argmax search by the variation of the input iterate."""
        return cls(cost, t, costmod.search_radius(cost, t, variation(f)))

    def stepped_cost(self) -> CostFunction:
        return costmod.rescale(self.cost, self.t)

    def max_lag(self, h: float) -> int:
        return int(np.floor(self.radius / h + 1e-9))


def supports_fast(kind: CostKind, dim: int) -> bool:
    if kind is CostKind.DIRAC:
        return True
    if kind is CostKind.QUADRATIC:
        return dim in (1, 2)
    if kind is CostKind.POWER:
        return dim == 1
    return False


def _axis_table(c_t: CostFunction, h: float, m: int) -> np.ndarray:
    """Cost of the 1-d offsets (-m..m) * h, indexed by lag + m."""
    lags = np.arange(-m, m + 1)
    return costmod.eval_radial(c_t, np.abs(lags) * h)


def _bruteforce_1d(vals: np.ndarray, table: np.ndarray, m: int):
    n = vals.shape[0]
    base = np.arange(n)
    best = vals[np.clip(base - m, 0, n - 1)] - table[0]
    arg = np.full(n, -m, dtype=np.int64)
    for k in range(-m + 1, m + 1):
        cand = vals[np.clip(base + k, 0, n - 1)] - table[k + m]
        better = cand > best
        best = np.where(better, cand, best)
        arg = np.where(better, k, arg)
    return best, arg[:, None]


def _ball_lags(radius: float, h: float, m: int) -> list[tuple[int, int]]:
    out = []
    r2 = (radius / h) ** 2 + 1e-9
    for k1 in range(-m, m + 1):
        for k2 in range(-m, m + 1):
            if k1 * k1 + k2 * k2 <= r2:
                out.append((k1, k2))
    return out


def _bruteforce_2d(vals: np.ndarray, c_t: CostFunction, h: float, radius: float, m: int):
    n0, n1 = vals.shape
    pairs = _ball_lags(radius, h, m)
    rows = {k: np.clip(np.arange(n0) + k, 0, n0 - 1) for k in range(-m, m + 1)}
    cols = {k: np.clip(np.arange(n1) + k, 0, n1 - 1) for k in range(-m, m + 1)}
    best = None
    arg = np.zeros((n0, n1, 2), dtype=np.int64)
    for k1, k2 in pairs:  # lexicographic order: first maximizer wins ties
        c = float(costmod.eval_radial(c_t, np.hypot(k1, k2) * h))
        cand = vals[rows[k1][:, None], cols[k2][None, :]] - c
        if best is None:
            best = cand
            arg[:, :, 0] = k1
            arg[:, :, 1] = k2
            continue
        better = cand > best
        best = np.where(better, cand, best)
        arg[:, :, 0] = np.where(better, k1, arg[:, :, 0])
        arg[:, :, 1] = np.where(better, k2, arg[:, :, 1])
    return best, arg


@numba.njit(cache=True)
def _dnc_scan(vals, table, m, out, arg):  # pragma: no cover - jitted
    n = vals.shape[0]
    stack = np.empty((64, 4), np.int64)  # depth <= 2 log2(n) + 2
    stack[0, 0] = 0
    stack[0, 1] = n - 1
    stack[0, 2] = 0
    stack[0, 3] = n - 1
    top = 1
    while top > 0:
        top -= 1
        rlo = stack[top, 0]
        rhi = stack[top, 1]
        jlo = stack[top, 2]
        jhi = stack[top, 3]
        mid = (rlo + rhi) // 2
        a = max(jlo, mid - m)
        b = min(jhi, mid + m)
        best = vals[a] - table[a - mid + m]
        jstar = a
        for j in range(a + 1, b + 1):
            cand = vals[j] - table[j - mid + m]
            if cand > best:
                best = cand
                jstar = j
        out[mid] = best
        arg[mid] = jstar - mid
        if mid + 1 <= rhi:
            stack[top, 0] = mid + 1
            stack[top, 1] = rhi
            stack[top, 2] = jstar
            stack[top, 3] = jhi
            top += 1
        if rlo <= mid - 1:
            stack[top, 0] = rlo
            stack[top, 1] = mid - 1
            stack[top, 2] = jlo
            stack[top, 3] = jstar
            top += 1


def _monotone_argmax_1d(vals: np.ndarray, table: np.ndarray, m: int):
    """Row maxima of A[i, j] = vals[j] - table[j - i + m] over |j - i| <= m.

    The cost table is convex in the lag, so A is inverse-Monge and the
    leftmost argmax per row is nondecreasing in the row; divide and conquer
    on rows then needs only O(N log N) entry evaluations.  The jitted scan
    evaluates entries with the same float expression and the same strict
    comparison as the brute-force path, so results match it bit for bit.
    """
    n = vals.shape[0]
    out = np.empty(n)
    arg = np.empty(n, dtype=np.int64)
    _dnc_scan(np.ascontiguousarray(vals), np.ascontiguousarray(table), m, out, arg)
    return out, arg


def _fast_1d(vals: np.ndarray, table: np.ndarray, m: int):
    out, arg = _monotone_argmax_1d(vals, table, m)
    return out, arg[:, None]


def _fast_2d_quadratic(vals: np.ndarray, c_t: CostFunction, h: float, m: int):
    """Axis-separated passes: the quadratic cost splits across coordinates.

    Searches the bounding box of the ball; exterior corners are strictly
    dominated, so values match the ball-restricted brute force.
    """
    table = _axis_table(c_t, h, m)
    n0, n1 = vals.shape
    g = np.empty_like(vals)
    arg2 = np.empty((n0, n1), dtype=np.int64)
    for i in range(n0):
        g[i], arg2[i] = _monotone_argmax_1d(vals[i], table, m)
    out = np.empty_like(vals)
    arg1 = np.empty((n0, n1), dtype=np.int64)
    for j in range(n1):
        out[:, j], arg1[:, j] = _monotone_argmax_1d(g[:, j], table, m)
    rows = np.arange(n0)[:, None] + arg1
    arg = np.stack([arg1, arg2[rows, np.arange(n1)[None, :]]], axis=-1)
    return out, arg


def apply_bruteforce(f: GridFunction, step: HopfLaxStep):
    """Reference Hopf-Lax application; returns (Phi_t f, argmax offsets).

    Output >= f pointwise (a = 0 is admissible and free); the trusted radius
    shrinks by the search radius; argmax offsets are integer lags (last axis
    indexes the dimension), deterministic via lexicographic tie-breaking.
    """
    c_t = step.stepped_cost()
    h = f.domain.spacing
    m = step.max_lag(h)
    if f.domain.dim == 1:
        out, arg = _bruteforce_1d(f.values, _axis_table(c_t, h, m), m)
    else:
        out, arg = _bruteforce_2d(f.values, c_t, h, step.radius, m)
    g = f.with_values(out, f.shrink_trusted(step.radius))
    return g, arg


def apply_fast(f: GridFunction, step: HopfLaxStep) -> GridFunction:
    """Fast path; matches apply_bruteforce bitwise in d=1, to ~1e-13 in d=2."""
    g, _ = _apply_fast_with_argmax(f, step)
    return g


def _apply_fast_with_argmax(f: GridFunction, step: HopfLaxStep):
    kind = step.cost.kind
    dim = f.domain.dim
    if not supports_fast(kind, dim):
        raise FastPathUnavailableError(
            f"fast path unavailable for cost kind '{kind.value}' in dimension {dim}"
        )
    c_t = step.stepped_cost()
    h = f.domain.spacing
    m = step.max_lag(h)
    if dim == 1:
        out, arg = _fast_1d(f.values, _axis_table(c_t, h, m), m)
    elif kind is CostKind.DIRAC:
        out, arg = f.values, np.zeros(f.values.shape + (2,), dtype=np.int64)
    else:
        out, arg = _fast_2d_quadratic(f.values, c_t, h, m)
    g = f.with_values(out, f.shrink_trusted(step.radius))
    return g, arg


def apply(f: GridFunction, step: HopfLaxStep, method: str = "auto"):
    """Dispatch to the fast path when the cost kind supports it.

    Returns (Phi_t f, argmax offsets); ``method`` is one of "auto", "fast",
    "bruteforce".
    """
    if method not in ("auto", "fast", "bruteforce"):
        raise ValueError(f"unknown method '{method}'")
    if method == "bruteforce":
        return apply_bruteforce(f, step)
    if method == "fast" or supports_fast(step.cost.kind, f.domain.dim):
        return _apply_fast_with_argmax(f, step)
    return apply_bruteforce(f, step)
