"""Convex running costs, their time rescalings, and radial convex conjugates.

A cost is a radially symmetric convex function c: R^d -> [0, inf] with
c(0) = 0 and superlinear growth (or an indicator, which is infinite beyond a
radius).  The supported kinds all have closed-form conjugates

    conj(b) = sup_{r >= 0} (b r - c_radial(r)),   b >= 0,

and every kind is stable under the rescaling c_t(a) = t c(a/t), so rescaled
costs stay inside the family and satisfy conj_t(b) = t conj(b) exactly.

Extended reals are represented by IEEE +inf; sup-expressions downstream rely
on the convention that (-inf) dominates, i.e. finite - inf = -inf.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np


class CostKind(str, Enum):
    POWER = "power"          # c(a) = kappa |a|^p, p > 1
    QUADRATIC = "quadratic"  # c(a) = kappa |a|^2
    BALL = "ball"            # 0 on |a| <= R, +inf outside
    DIRAC = "dirac"          # 0 at a = 0, +inf elsewhere


@dataclass(frozen=True)
class CostFunction:
    """A convex running cost c together with its time scale.

    ``timescale`` tau means the object represents c_tau(a) = tau c(a/tau)
    for the base parameters; tau = 1 is the unscaled cost.  Keeping the time
    scale out of the base parameters makes conj_t = t * conj exact.
    """

    kind: CostKind
    kappa: float = 1.0     # coefficient, power/quadratic kinds
    exponent: float = 2.0  # p, power kind only
    radius: float = 1.0    # R, ball kind only
    timescale: float = 1.0

    def __post_init__(self):
        if self.timescale <= 0:
            raise ValueError("timescale must be > 0")
        if self.kind in (CostKind.POWER, CostKind.QUADRATIC) and self.kappa <= 0:
            raise ValueError("kappa must be > 0")
        if self.kind is CostKind.POWER and self.exponent <= 1:
            raise ValueError("power cost needs exponent p > 1")
        if self.kind is CostKind.BALL and self.radius <= 0:
            raise ValueError("ball indicator needs radius > 0")


def power_cost(exponent: float, kappa: float = 1.0) -> CostFunction:
    return CostFunction(CostKind.POWER, kappa=kappa, exponent=exponent)


def quadratic_cost(kappa: float = 0.5) -> CostFunction:
    return CostFunction(CostKind.QUADRATIC, kappa=kappa)


def ball_indicator(radius: float) -> CostFunction:
    return CostFunction(CostKind.BALL, radius=radius)


def dirac_indicator() -> CostFunction:
    return CostFunction(CostKind.DIRAC)


def _radii(a) -> np.ndarray:
    """Euclidean norms along the last axis; scalars count as 1-d vectors."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 0:
        return np.abs(arr)
    return np.sqrt(np.sum(arr * arr, axis=-1))


def eval_radial(c: CostFunction, r) -> np.ndarray:
    """Evaluate c at radius r >= 0 (vectorized, extended-real valued)."""
    r = np.asarray(r, dtype=float)
    tau = c.timescale
    if c.kind is CostKind.QUADRATIC:
        return c.kappa * r * r / tau
    if c.kind is CostKind.POWER:
        return tau * c.kappa * (r / tau) ** c.exponent
    if c.kind is CostKind.BALL:
        return np.where(r <= tau * c.radius, 0.0, np.inf)
    return np.where(r == 0.0, 0.0, np.inf)  # dirac


def eval(c: CostFunction, a) -> np.ndarray:
    """c(a) for a vector (or batch of vectors along the last axis).

    Always finite-or-+inf; eval(c, 0) == 0 exactly for every kind.
    """
    return eval_radial(c, _radii(a))


def conjugate(c: CostFunction, b: float) -> float:
    """Radial convex conjugate conj(b) = sup_{r>=0} (b r - c(r)), closed form.

    Nondecreasing and convex in b with conj(0) = 0; the time scale enters
    linearly, conj_t(b) = t conj(b).
    """
    if b < 0:
        raise ValueError("conjugate requires b >= 0")
    tau = c.timescale
    if c.kind is CostKind.QUADRATIC:
        return tau * b * b / (4.0 * c.kappa)
    if c.kind is CostKind.POWER:
        # maximizer r* = (b/(kappa p))^(1/(p-1)), value (1 - 1/p) b r*
        p = c.exponent
        rstar = (b / (c.kappa * p)) ** (1.0 / (p - 1.0))
        return tau * (1.0 - 1.0 / p) * b * rstar
    if c.kind is CostKind.BALL:
        return tau * b * c.radius
    return 0.0  # dirac: sup over {0} of -c(0)


def rescale(c: CostFunction, t: float) -> CostFunction:
    """The rescaled cost c_t(a) = t c(a/t); rescalings compose multiplicatively."""
    if t <= 0:
        raise ValueError("rescale requires t > 0")
    return replace(c, timescale=c.timescale * t)


def search_radius(c: CostFunction, t: float, varf: float) -> float:
    """Smallest rho with c_t(a) > varf for every |a| > rho.

    Any maximizer of f(x+a) - c_t(a) for bounded f satisfies c_t(a) <= var f
    (the offset a = 0 is admissible and costs nothing), so rho bounds the
    effective argmax domain of the Hopf-Lax operator.
    """
    if t <= 0:
        raise ValueError("search_radius requires t > 0")
    if varf < 0:
        raise ValueError("search_radius requires varf >= 0")
    tau = c.timescale * t
    if c.kind is CostKind.QUADRATIC:
        return float(np.sqrt(varf * tau / c.kappa))
    if c.kind is CostKind.POWER:
        return float(tau * (varf / (tau * c.kappa)) ** (1.0 / c.exponent))
    if c.kind is CostKind.BALL:
        return tau * c.radius
    return 0.0  # dirac: only a = 0 is feasible


def lipschitz_radius(c: CostFunction, t: float, lip: float) -> float:
    """Smallest rho with c_t(a) >= lip * |a| for every |a| >= rho.

    For lip-Lipschitz f, offsets beyond rho are dominated by a = 0 in the
    Hopf-Lax sup, so rho bounds both maximizers and boundary influence.
    Unlike the variation bound, this radius accumulates to lip * t / slope
    over a split [0, t], independent of the number of steps.
    """
    if t <= 0:
        raise ValueError("lipschitz_radius requires t > 0")
    if lip < 0:
        raise ValueError("lipschitz_radius requires lip >= 0")
    tau = c.timescale * t
    if c.kind is CostKind.QUADRATIC:
        return tau * lip / c.kappa
    if c.kind is CostKind.POWER:
        return float(tau * (lip / c.kappa) ** (1.0 / (c.exponent - 1.0)))
    if c.kind is CostKind.BALL:
        return tau * c.radius
    return 0.0
