"""The verification suite behind `levylax verify`.

Each check compares scheme output against an independent route (closed-form
oracle, enumeration, exact OT, or a structural inequality) at the tolerance
2 tol(h) = 2 C h lip.  Checks that need the flagship configuration
(d = 1, standard Brownian kernel, quadratic cost a^2/2) report "skip" when
the config is different; any "fail" makes the suite fail.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cost as costmod
from . import hopflax, oracle, scheme
from .config import RunConfig
from .cost import CostKind, quadratic_cost
from .errors import GridTooCoarseError
from .gridfn import GridFunction, variation
from .levykernel import DiscreteKernel, GaussianModel
from .scheme import SandwichReport, SchemeConfig


@dataclass
class CheckResult:
    name: str
    status: str  # "pass" | "fail" | "skip"
    detail: dict = field(default_factory=dict)


def is_brownian_quadratic(cfg: RunConfig) -> bool:
    """True for the only configuration with a continuum-exact oracle."""
    return (cfg.domain.dim == 1
            and isinstance(cfg.kernel, GaussianModel)
            and cfg.kernel.drift == (0.0,)
            and cfg.kernel.sigma2 == (1.0,)
            and cfg.cost.kind is CostKind.QUADRATIC
            and cfg.cost.kappa == 0.5
            and cfg.cost.timescale == 1.0)


def _scheme_config(cfg: RunConfig, n: int, order: str = "J") -> SchemeConfig:
    return SchemeConfig(cfg.t, n, order, cfg.cost, cfg.kernel,
                        tol_constant=cfg.numerics.tol_constant)


class VerificationContext:
    """Shared state: the working datum, tolerance, and cached sandwich runs."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        f0 = cfg.initial
        self.work = f0.with_values(-f0.values) if cfg.infimal else f0
        self.tol = scheme.tol_h(self.work, cfg.numerics.tol_constant)
        self._runs: dict[int, SandwichReport] = {}
        self.oracle_curve: GridFunction | None = None
        self.oracle_skip_reason = "oracle needs d=1, standard Brownian kernel, quadratic cost 1/2"
        if is_brownian_quadratic(cfg):
            try:
                self.oracle_curve = oracle.hopf_cole(self.work, cfg.t, cfg.numerics.quad_tol)
            except RuntimeError as exc:
                self.oracle_skip_reason = str(exc)

    def run(self, n: int) -> SandwichReport:
        if n not in self._runs:
            self._runs[n] = scheme.run_sandwich(self.work, _scheme_config(self.cfg, n))
        return self._runs[n]


def check_sandwich(ctx: VerificationContext) -> CheckResult:
    """J^n - 2 tol <= oracle value <= I^n + 2 tol at every trusted node."""
    if ctx.oracle_curve is None:
        return CheckResult("sandwich_vs_hopf_cole", "skip", {"reason": ctx.oracle_skip_reason})
    detail = {}
    ok = True
    for n in ctx.cfg.n_list:
        run = ctx.run(n)
        mask = run.trusted_mask & ctx.oracle_curve.trusted_mask()
        vv = ctx.oracle_curve.values[mask]
        lo = float(np.min(vv - (run.j.final.values[mask] - 2 * ctx.tol)))
        hi = float(np.min((run.i.final.values[mask] + 2 * ctx.tol) - vv))
        detail[f"n={n}"] = {"lower_margin": lo, "upper_margin": hi, "nodes": int(mask.sum())}
        ok &= lo >= 0 and hi >= 0
    return CheckResult("sandwich_vs_hopf_cole", "pass" if ok else "fail", detail)


def check_gap_rate(ctx: VerificationContext) -> CheckResult:
    """measured gap <= 1.05 (t/n) conj(lip) + 2 tol, nonincreasing on doubling."""
    detail = {}
    ok = True
    ns = ctx.cfg.n_list
    for n in ns:
        run = ctx.run(n)
        limit = 1.05 * run.j.gap_bound + 2 * ctx.tol
        detail[f"n={n}"] = {"measured_gap": run.measured_gap, "limit": limit}
        ok &= run.measured_gap <= limit
    chain = [n for n in ns if n == ns[0] or n // 2 in ns]
    if len(chain) > 1:
        gaps = [ctx.run(n).measured_gap for n in chain]
        detail["doubling_gaps"] = gaps
        ok &= gaps[-1] <= gaps[0]
    return CheckResult("gap_rate", "pass" if ok else "fail", detail)


def check_key_estimate(ctx: VerificationContext) -> CheckResult:
    """sup(I^n - J^n) <= sup(Phi_{t/n} f - f) + 2 tol for every n."""
    detail = {}
    ok = True
    for n in ctx.cfg.n_list:
        lhs = ctx.run(n).measured_gap
        step = hopflax.HopfLaxStep.for_input(ctx.cfg.cost, ctx.cfg.t / n, ctx.work)
        phif, _ = hopflax.apply(ctx.work, step)
        mask = phif.trusted_mask()
        rhs = float(np.max(phif.values[mask] - ctx.work.values[mask]))
        detail[f"n={n}"] = {"lhs": lhs, "rhs": rhs}
        ok &= lhs <= rhs + 2 * ctx.tol
    return CheckResult("key_estimate", "pass" if ok else "fail", detail)


def check_doubling(ctx: VerificationContext) -> CheckResult:
    """Pointwise J_n <= J_2n + 2 tol and I_2n <= I_n + 2 tol on shared nodes."""
    pairs = [(n, 2 * n) for n in ctx.cfg.n_list if 2 * n in ctx.cfg.n_list]
    if not pairs:
        return CheckResult("doubling_chains", "skip", {"reason": "n_list holds no doubling pair"})
    detail = {}
    ok = True
    for n, n2 in pairs:
        a, b = ctx.run(n), ctx.run(n2)
        mask = a.trusted_mask & b.trusted_mask
        j_violation = float(np.max(a.j.final.values[mask] - b.j.final.values[mask]))
        i_violation = float(np.max(b.i.final.values[mask] - a.i.final.values[mask]))
        detail[f"{n}->{n2}"] = {"j_violation": j_violation, "i_violation": i_violation}
        ok &= j_violation <= 2 * ctx.tol and i_violation <= 2 * ctx.tol
    return CheckResult("doubling_chains", "pass" if ok else "fail", detail)


def check_ot_representation(ctx: VerificationContext) -> CheckResult:
    """Dual OT description of the upper step on small-support kernels."""
    f = ctx.work
    h = f.domain.spacing
    # shrink the step until enumerating three atoms over the search ball fits
    t_step = ctx.cfg.t / max(ctx.cfg.n_list)
    for _ in range(40):
        radius = costmod.search_radius(ctx.cfg.cost, t_step, variation(f))
        if len(oracle._candidate_lags(f.domain.dim, radius, h)) ** 3 <= 1_000_000:
            break
        t_step /= 2.0
    lag = max(1, int(round(0.5 * radius / h)))
    dim = f.domain.dim
    zeros = (0,) * dim
    unit = (1,) + (0,) * (dim - 1)

    def lattice(pairs):
        offs = np.array([[p * u for u in unit] if dim > 1 else [p] for p, _ in pairs],
                        dtype=np.int64)
        w = np.array([w for _, w in pairs])
        return DiscreteKernel(offs.reshape(len(pairs), dim), w / w.sum(), h)

    kernels = {
        "single_atom": lattice([(0, 1.0)]),
        "two_atom": lattice([(0, 0.5), (lag, 0.5)]),
        "three_atom": lattice([(-lag, 0.25), (0, 0.5), (lag, 0.25)]),
    }
    x = f.domain.center
    detail = {}
    ok = True
    for name, kern in kernels.items():
        lhs, rhs = oracle.verify_ot_representation(f, x, kern, ctx.cfg.cost, t_step)
        detail[name] = {"lhs": lhs, "rhs": rhs, "diff": abs(lhs - rhs)}
        ok &= abs(lhs - rhs) <= ctx.tol

    c_half = quadratic_cost(0.5)
    d0 = oracle.DiscreteMeasureOT(np.zeros((1, dim)), np.ones(1))
    dz = oracle.DiscreteMeasureOT(np.full((1, dim), 1.5) * np.asarray(unit), np.ones(1))
    pair = oracle.DiscreteMeasureOT(np.array([zeros, unit], dtype=float), np.array([0.5, 0.5]))
    shifted = oracle.DiscreteMeasureOT(pair.support + np.asarray(unit, dtype=float),
                                       pair.weights)
    sanity = {
        "delta_to_delta": (oracle.ot_value(c_half, d0, dz), float(costmod.eval(c_half, dz.support[0]))),
        "identical": (oracle.ot_value(c_half, pair, pair), 0.0),
        "two_atom_shift": (oracle.ot_value(c_half, pair, shifted), 0.5),
    }
    for name, (got, want) in sanity.items():
        detail[name] = {"got": got, "want": want}
        ok &= abs(got - want) <= 1e-9
    return CheckResult("ot_representation", "pass" if ok else "fail", detail)


def check_guarantee(ctx: VerificationContext) -> CheckResult:
    """The step count from the modulus formula brings the gap below eps."""
    if ctx.cfg.eps is None:
        return CheckResult("guarantee", "skip", {"reason": "no eps configured"})
    eps = ctx.cfg.eps
    try:
        n_star = scheme.guarantee_n(ctx.work, eps, _scheme_config(ctx.cfg, 1))
    except GridTooCoarseError as exc:
        return CheckResult("guarantee", "fail", {"error": str(exc)})
    run = ctx.run(n_star)
    ok = run.measured_gap <= eps + 2 * ctx.tol
    return CheckResult("guarantee", "pass" if ok else "fail",
                       {"eps": eps, "guarantee_n": n_star, "measured_gap": run.measured_gap})


def check_infimal_symmetry(ctx: VerificationContext) -> CheckResult:
    """The negation wrapper reproduces -I(-f) bit for bit."""
    cfg = _scheme_config(ctx.cfg, ctx.cfg.n_list[0], "I")
    f = ctx.cfg.initial
    wrapped = scheme.infimal(lambda g: scheme.iterate(g, cfg).final, f)
    manual = scheme.iterate(f.with_values(-f.values), cfg).final
    ok = np.array_equal(wrapped.values, -manual.values)
    return CheckResult("infimal_symmetry", "pass" if ok else "fail",
                       {"bitwise": bool(ok), "n": cfg.n})


_CHECKS = (
    ("sandwich_vs_hopf_cole", check_sandwich),
    ("gap_rate", check_gap_rate),
    ("key_estimate", check_key_estimate),
    ("doubling_chains", check_doubling),
    ("ot_representation", check_ot_representation),
    ("guarantee", check_guarantee),
    ("infimal_symmetry", check_infimal_symmetry),
)


def run_verification(cfg: RunConfig):
    """All checks plus the shared context (for figure rendering).

    A check that raises is reported as failed rather than aborting the suite.
    """
    ctx = VerificationContext(cfg)
    results = []
    for name, check in _CHECKS:
        try:
            results.append(check(ctx))
        except Exception as exc:  # noqa: BLE001 - a broken check must not kill the run
            results.append(CheckResult(name, "fail", {"error": f"{type(exc).__name__}: {exc}"}))
    return results, ctx
