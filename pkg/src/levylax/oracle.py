"""Independent ground-truth providers for the iteration schemes.

Three oracles, none of which share code paths with the schemes they check:

  * hopf_cole      -- for standard Brownian noise and quadratic cost a^2/2 in
                      d = 1, the exact value is V_t f(x) = log E[exp f(x+B_t)]
                      (the logarithmic transform linearizes the flow);
                      computed by aligned composite quadrature with
                      node-doubling error control,
  * ot_value       -- exact optimal transport between finitely supported
                      measures via an LP transportation solve,
  * simulate_policy -- Monte Carlo evaluation of one admissible
                      piecewise-constant feedback control, a statistical
                      lower bound for the control value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from . import cost as costmod
from .cost import CostFunction
from .errors import EnumerationBudgetError
from .gridfn import GridDomain, GridFunction, values_at, variation
from .levykernel import DiscreteKernel, KernelModel
from .scheme import IterationReport, i_step

_OT_MAX_SUPPORT = 12
_QUAD_WIDTH_SIGMAS = 8.0


def hopf_cole(f: GridFunction, t: float, quad_tol: float = 1e-6) -> GridFunction:
    """Exact value for the Brownian/quadratic benchmark via the log transform.

    Valid for d = 1, kernel = standard Brownian motion, cost c(a) = a^2/2:
    V_t f(x) = log E[exp(f(x + B_t))].  The Gaussian expectation is taken over
    a width of 8 sqrt(t) with quadrature nodes aligned to the value grid
    (kinks of the interpolant sit on quadrature nodes); nodes are doubled
    until successive values agree within ``quad_tol``.
    """
    if f.domain.dim != 1:
        raise ValueError("hopf_cole oracle is restricted to d = 1")
    if t <= 0:
        raise ValueError("hopf_cole requires t > 0")
    h = f.domain.spacing
    width = _QUAD_WIDTH_SIGMAS * np.sqrt(t)
    prev = None
    step = h / 2.0
    for _ in range(10):
        cur = _log_gauss_quadrature(f, t, width, step)
        if prev is not None and float(np.max(np.abs(cur - prev))) <= quad_tol:
            return f.with_values(cur, f.shrink_trusted(width))
        prev = cur
        step /= 2.0
    raise RuntimeError(f"quadrature did not reach tolerance {quad_tol:g}")


def _log_gauss_quadrature(f: GridFunction, t: float, width: float, step: float) -> np.ndarray:
    """log sum_j w_j exp f(x_i + z_j) on a z-lattice refining the value grid.

    With step = h / r the points x_i + z_j live on one refined lattice, so f
    is interpolated once there and the quadrature becomes a sliding window.
    """
    h = f.domain.spacing
    r = max(1, int(round(h / step)))
    step = h / r
    half = int(np.ceil(width / step))
    z = step * np.arange(-half, half + 1)
    w = step * stats.norm.pdf(z, scale=np.sqrt(t))
    w[0] *= 0.5
    w[-1] *= 0.5
    w /= np.sum(w)  # renormalized trapezoid: constants are reproduced exactly
    n = f.domain.point_counts[0]
    lattice = f.domain.lower[0] + step * (np.arange((n - 1) * r + 2 * half + 1) - half)
    refined = values_at(f, lattice[:, None])
    fmax = float(np.max(f.values))
    windows = np.lib.stride_tricks.sliding_window_view(np.exp(refined - fmax), z.shape[0])[::r]
    out = np.empty(n)
    chunk = max(1, int(4e6) // z.shape[0])  # matmul materializes the strided view
    for lo in range(0, n, chunk):
        out[lo:lo + chunk] = windows[lo:lo + chunk] @ w
    return np.log(out) + fmax


@dataclass(frozen=True, eq=False)
class DiscreteMeasureOT:
    """A finitely supported probability measure for the exact OT verifier."""

    support: np.ndarray  # (m, d)
    weights: np.ndarray  # (m,)

    def __post_init__(self):
        if self.support.ndim != 2 or self.support.shape[0] != self.weights.shape[0]:
            raise ValueError("support must be (m, d) with one weight per atom")
        if np.any(self.weights < 0) or abs(float(np.sum(self.weights)) - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")

    @classmethod
    def from_kernel(cls, kernel: DiscreteKernel, center=None) -> "DiscreteMeasureOT":
        pts = kernel.physical_offsets.astype(float)
        if center is not None:
            pts = pts + np.atleast_1d(np.asarray(center, dtype=float))[None, :]
        return cls(pts, kernel.weights.copy())

    def shifted(self, offsets: np.ndarray) -> "DiscreteMeasureOT":
        """Image under the offset map: atom j moves by offsets[j]."""
        return DiscreteMeasureOT(self.support + offsets, self.weights.copy())


@dataclass(frozen=True, eq=False)
class Coupling:
    """A transport plan between two discrete measures."""

    matrix: np.ndarray  # (m, k), entries >= 0

    def check_marginals(self, mu: DiscreteMeasureOT, nu: DiscreteMeasureOT, tol: float = 1e-9):
        if np.any(self.matrix < -tol):
            raise ValueError("coupling entries must be nonnegative")
        if np.max(np.abs(self.matrix.sum(axis=1) - mu.weights)) > tol:
            raise ValueError("first marginal mismatch")
        if np.max(np.abs(self.matrix.sum(axis=0) - nu.weights)) > tol:
            raise ValueError("second marginal mismatch")


def ot_coupling(c_t: CostFunction, mu: DiscreteMeasureOT, nu: DiscreteMeasureOT):
    """Exact OT value and an optimal coupling, inf over plans of int c_t(z-y).

    Small transportation LP (supports of at most 12 atoms each); infinite
    cost cells are excluded, and an infeasible pattern yields value +inf.
    """
    m, k = mu.weights.shape[0], nu.weights.shape[0]
    if m > _OT_MAX_SUPPORT or k > _OT_MAX_SUPPORT:
        raise ValueError(f"supports must have at most {_OT_MAX_SUPPORT} atoms")
    diffs = nu.support[None, :, :] - mu.support[:, None, :]
    costs = costmod.eval(c_t, diffs)
    finite = np.isfinite(costs)
    if not np.any(finite):
        return np.inf, None
    rows, cols = np.nonzero(finite)
    nvar = rows.shape[0]
    a_eq = np.zeros((m + k, nvar))
    a_eq[rows, np.arange(nvar)] = 1.0
    a_eq[m + cols, np.arange(nvar)] = 1.0
    b_eq = np.concatenate([mu.weights, nu.weights])
    res = optimize.linprog(costs[finite], A_eq=a_eq, b_eq=b_eq,
                           bounds=(0, None), method="highs")
    if not res.success:
        return np.inf, None
    plan = np.zeros((m, k))
    plan[rows, cols] = res.x
    return max(float(res.fun), 0.0), Coupling(plan)


def ot_value(c_t: CostFunction, mu: DiscreteMeasureOT, nu: DiscreteMeasureOT) -> float:
    value, _ = ot_coupling(c_t, mu, nu)
    return value


def _candidate_lags(dim: int, radius: float, h: float) -> np.ndarray:
    m = int(np.floor(radius / h + 1e-9))
    if dim == 1:
        return np.arange(-m, m + 1)[:, None]
    r2 = (radius / h) ** 2 + 1e-9
    out = [(i, j) for i in range(-m, m + 1) for j in range(-m, m + 1)
           if i * i + j * j <= r2]
    return np.asarray(out, dtype=np.int64)


def verify_ot_representation(f: GridFunction, x, kernel: DiscreteKernel,
                             cost: CostFunction, t: float,
                             budget: int = 2_000_000):
    """Check the dual description (I f)(x) = sup_nu ( nu f(x) - OT_{c_t}(mu_t, nu) ).

    The left side is one upper step evaluated at x.  The right side
    enumerates candidate measures as images of the kernel under offset maps
    (each atom moves independently to a grid offset within the search
    radius), which attain the supremum via the comonotone coupling; the map
    value sum_j w_j (f(x + y_j + a_j) - c_t(a_j)) is maximized over the full
    product space of maps.
    """
    if kernel.weights.size > 6:
        raise ValueError("OT verification enumerates kernels of at most 6 atoms")
    lhs = float(values_at(i_step(f, cost, t, kernel),
                          np.atleast_1d(np.asarray(x, float))[None, :])[0])
    h = f.domain.spacing
    radius = costmod.search_radius(cost, t, variation(f))
    lags = _candidate_lags(f.domain.dim, radius, h)
    natoms = kernel.weights.size
    if lags.shape[0] ** natoms > budget:
        raise EnumerationBudgetError(
            f"{lags.shape[0]}^{natoms} offset maps exceed the budget {budget}")
    c_t = costmod.rescale(cost, t)
    move_cost = costmod.eval(c_t, lags * h)
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    acc = None
    for j in range(natoms):
        pts = xv[None, :] + kernel.physical_offsets[j][None, :] + lags * h
        contrib = kernel.weights[j] * (values_at(f, pts) - move_cost)
        acc = contrib if acc is None else (acc[..., None] + contrib)
    rhs = float(np.max(acc))
    return lhs, rhs


@dataclass(frozen=True, eq=False)
class PolicyField:
    """Per-step feedback offsets extracted from a recorded lower iteration.

    ``fields`` hold one physical offset per node (last axis is the dimension)
    in simulation order: the first field is the argmax of the outermost
    (last-applied) Hopf-Lax step, matching the dynamic-programming recursion.
    """

    fields: tuple[np.ndarray, ...]
    dt: float
    cost: CostFunction
    domain: GridDomain

    @classmethod
    def from_iteration(cls, report: IterationReport, domain: GridDomain) -> "PolicyField":
        if report.policy_offsets is None:
            raise ValueError("iteration was run without record_policy")
        h = domain.spacing
        fields = tuple(arg.astype(float) * h for arg in reversed(report.policy_offsets))
        return cls(fields, report.config.dt, report.config.cost, domain)


@dataclass(frozen=True)
class SimulationResult:
    mean: float
    std_error: float
    excursion_fraction: float


def simulate_policy(policy: PolicyField, model: KernelModel, f: GridFunction,
                    x0, paths: int, seed) -> SimulationResult:
    """Monte Carlo value of one piecewise-constant feedback control.

    Per path and step: read the offset a at the nearest node, pay the
    rescaled running cost c_dt(a), then move by a plus an exact model
    increment; terminally collect f.  States outside the box are clamped
    (consistent with the grid extension) and counted as excursions.  The
    result estimates E[f(Y_t^{x,alpha}) - int c(alpha)] for this admissible
    control, hence a lower bound on the value function up to 3 standard
    errors.
    """
    if paths < 1:
        raise ValueError("need at least one path")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    dom = policy.domain
    d = dom.dim
    lower = np.asarray(dom.lower)
    upper = np.asarray(dom.upper)
    c_step = costmod.rescale(policy.cost, policy.dt)
    x = np.tile(np.atleast_1d(np.asarray(x0, dtype=float)), (paths, 1))
    reward = np.zeros(paths)
    exited = np.zeros(paths, dtype=bool)
    for field in policy.fields:
        exited |= np.any((x < lower) | (x > upper), axis=1)
        idx = tuple(
            np.clip(np.rint((x[:, k] - lower[k]) / dom.spacing).astype(np.int64),
                    0, dom.point_counts[k] - 1)
            for k in range(d)
        )
        a = field[idx]
        reward -= costmod.eval(c_step, a)
        x = x + a + model.sample(policy.dt, rng, paths)
    exited |= np.any((x < lower) | (x > upper), axis=1)
    reward += values_at(f, x)
    mean = float(np.mean(reward))
    se = float(np.std(reward, ddof=1) / np.sqrt(paths)) if paths > 1 else 0.0
    return SimulationResult(mean, se, float(np.mean(exited)))
