"""Batch experiment runner: `levylax iterate|verify|guarantee <config.json>`.

Exit codes: 0 success, 1 property/guarantee failure, 2 config error,
3 domain too small.  Outputs (CSV, JSON, PNG figures) land in the config's
output directory; identical config and seed reproduce the CSV/JSON files
bitwise.  The --threads flag is recorded for provenance only: all numerics
are deterministic and independent of worker counts.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import figures, oracle, report, scheme
from .config import RunConfig, load_run_config, override
from .errors import ConfigError, DomainTooSmallError, GridTooCoarseError
from .gridfn import GridFunction, value_at
from .scheme import SchemeConfig
from .verify import is_brownian_quadratic, run_verification

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_DOMAIN = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levylax",
        description="Sandwich approximations of drift-controlled Levy value functions.")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "iterate": "run the I/J iterations over the configured step counts",
        "verify": "run the verification suite and report pass/fail per check",
        "guarantee": "compute the step count for a target gap eps and verify it",
    }
    for name, help_text in specs.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("config", type=Path, help="path to the JSON run config")
        cmd.add_argument("--eps", type=float, default=None, help="target uniform gap")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--threads", type=int, default=None,
                         help="advisory worker cap; outputs do not depend on it")
        cmd.add_argument("--out", type=Path, default=None, help="override the output directory")
        cmd.add_argument("--infimal", action="store_true",
                         help="run the infimal operators (negation wrapper)")
        cmd.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    return parser


def _scheme_config(cfg: RunConfig, n: int, order: str, record_policy: bool = False) -> SchemeConfig:
    return SchemeConfig(cfg.t, n, order, cfg.cost, cfg.kernel,
                        record_policy=record_policy,
                        tol_constant=cfg.numerics.tol_constant)


def _emit(f: GridFunction, infimal: bool) -> GridFunction:
    """Outputs of the infimal operators are the negated internal iterates."""
    return f.with_values(-f.values) if infimal else f


def _oracle_summary(cfg: RunConfig, work: GridFunction, j_report, i_report) -> dict | None:
    if not is_brownian_quadratic(cfg):
        return None
    hc = oracle.hopf_cole(work, cfg.t, cfg.numerics.quad_tol)
    x0 = cfg.domain.center
    sign = -1.0 if cfg.infimal else 1.0
    block = {"hopf_cole_value": sign * value_at(hc, x0)}
    if not cfg.infimal and j_report is not None and j_report.policy_offsets is not None:
        policy = oracle.PolicyField.from_iteration(j_report, cfg.domain)
        res = oracle.simulate_policy(policy, cfg.kernel, work, x0,
                                     cfg.numerics.mc_paths, cfg.seed)
        block.update(mc_mean=res.mean, mc_std_error=res.std_error,
                     excursion_fraction=res.excursion_fraction)
    return block


def cmd_iterate(cfg: RunConfig) -> int:
    out = cfg.output_dir
    f0 = cfg.initial
    work = f0.with_values(-f0.values) if cfg.infimal else f0
    tol = scheme.tol_h(work, cfg.numerics.tol_constant)
    rows = []
    last_j = last_i = None
    oracle_j = None
    for n in cfg.n_list:
        row = {"n": n, "sup_j": None, "inf_i": None, "measured_gap": None, "gap_bound": None}
        step_rows = []
        rep_j = rep_i = None
        if cfg.order in ("J", "both"):
            rep_j = scheme.iterate(work, _scheme_config(cfg, n, "J", cfg.record_policy))
            step_rows += [("J", r) for r in rep_j.steps]
        if cfg.order in ("I", "both"):
            rep_i = scheme.iterate(work, _scheme_config(cfg, n, "I"))
            step_rows += [("I", r) for r in rep_i.steps]
        main_rep = rep_j if rep_j is not None else rep_i
        row["gap_bound"] = main_rep.gap_bound
        if rep_j is not None:
            emitted = _emit(rep_j.final, cfg.infimal)
            report.write_gridfunction_csv(emitted, out / f"iterate_n{n}.csv")
            row["sup_j"] = float(np.max(emitted.trusted_values()))
            last_j = emitted
            if cfg.record_policy and rep_j.policy_offsets is not None:
                for k, arg in enumerate(rep_j.policy_offsets, start=1):
                    report.write_policy_csv(arg.astype(float) * cfg.domain.spacing,
                                            cfg.domain, out / f"policy_n{n}_step{k}.csv")
        if rep_i is not None:
            emitted = _emit(rep_i.final, cfg.infimal)
            name = f"iterate_n{n}.csv" if rep_j is None else f"iterate_I_n{n}.csv"
            report.write_gridfunction_csv(emitted, out / name)
            row["inf_i"] = float(np.min(emitted.trusted_values()))
            last_i = emitted
        if rep_j is not None and rep_i is not None:
            mask = rep_j.final.trusted_mask() & rep_i.final.trusted_mask()
            row["measured_gap"] = float(np.max(rep_i.final.values[mask] - rep_j.final.values[mask]))
        if cfg.infimal:  # step diagnostics describe the emitted (negated) iterates
            step_rows = [(o, scheme.StepRow(r.step, -r.inf, -r.sup, r.lip,
                                            r.trusted_radius, r.gap_bound))
                         for o, r in step_rows]
        report.write_steps_csv(step_rows, out / f"steps_n{n}.csv")
        rows.append(row)
        if n == max(cfg.n_list) and cfg.order in ("J", "both"):
            oracle_j = rep_j
    report.write_convergence_csv(rows, out / "convergence.csv")

    summary = {
        "t": cfg.t,
        "order": cfg.order,
        "seed": cfg.seed,
        "h": cfg.domain.spacing,
        "infimal": cfg.infimal,
        "tol_h": tol,
        "threads": cfg.threads,
        "runs": rows,
    }
    if cfg.eps is not None:
        summary["eps"] = cfg.eps
        try:
            summary["guarantee_n"] = scheme.guarantee_n(work, cfg.eps, _scheme_config(cfg, 1, "J"))
        except GridTooCoarseError as exc:
            summary["guarantee_n"] = None
            summary["guarantee_error"] = str(exc)
    needs_policy = cfg.order in ("J", "both") and not cfg.infimal and is_brownian_quadratic(cfg)
    if needs_policy and (oracle_j is None or oracle_j.policy_offsets is None):
        oracle_j = scheme.iterate(work, _scheme_config(cfg, max(cfg.n_list), "J", True))
    oracle_block = _oracle_summary(cfg, work, oracle_j, None)
    if oracle_block is not None:
        summary["oracle"] = oracle_block
    report.write_json(summary, out / "summary.json")

    if cfg.figures:
        hc = None
        if is_brownian_quadratic(cfg) and cfg.domain.dim == 1:
            hc = _emit(oracle.hopf_cole(work, cfg.t, cfg.numerics.quad_tol), cfg.infimal)
        figures.save_iterates_figure(out / "iterates.png", f0, last_j, last_i, hc,
                                     title=f"iterates at n = {max(cfg.n_list)}")
        if cfg.order == "both" and len(cfg.n_list) > 1:
            figures.save_convergence_figure(out / "convergence.png", rows, cfg.eps)
    print(f"wrote {len(cfg.n_list)} iterate runs to {out}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    results, ctx = run_verification(cfg)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {r.status.upper()}")
    all_pass = all(r.status != "fail" for r in results)
    report.write_json(
        {"all_pass": all_pass, "infimal": cfg.infimal,
         "checks": [{"name": r.name, "status": r.status, "detail": r.detail} for r in results]},
        cfg.output_dir / "verify.json")
    if cfg.figures and ctx.oracle_curve is not None:
        run = ctx.run(max(cfg.n_list))
        figures.save_sandwich_figure(
            cfg.output_dir / "verify_sandwich.png",
            _emit(run.j.final, cfg.infimal), _emit(run.i.final, cfg.infimal),
            _emit(ctx.oracle_curve, cfg.infimal), ctx.tol,
            title="reversed enclosure" if cfg.infimal else "two-sided enclosure")
    print("all checks passed" if all_pass else "FAILED: "
          + ", ".join(r.name for r in results if r.status == "fail"))
    return EXIT_OK if all_pass else EXIT_CHECK_FAILED


def cmd_guarantee(cfg: RunConfig) -> int:
    if cfg.eps is None:
        raise ConfigError("eps", "guarantee mode needs eps (config key or --eps)")
    f0 = cfg.initial
    work = f0.with_values(-f0.values) if cfg.infimal else f0
    tol = scheme.tol_h(work, cfg.numerics.tol_constant)
    try:
        n_star = scheme.guarantee_n(work, cfg.eps, _scheme_config(cfg, 1, "J"))
    except GridTooCoarseError as exc:
        print(f"guarantee failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    run = scheme.run_sandwich(work, _scheme_config(cfg, n_star, "J"))
    threshold = cfg.eps + 2 * tol
    ok = run.measured_gap <= threshold
    print(f"guarantee_n = {n_star}")
    print(f"measured_gap = {run.measured_gap:.6g} (allowed {threshold:.6g})")
    report.write_json(
        {"eps": cfg.eps, "guarantee_n": n_star, "measured_gap": run.measured_gap,
         "threshold": threshold, "passed": ok, "infimal": cfg.infimal},
        cfg.output_dir / "summary.json")
    if cfg.figures:
        figures.save_convergence_figure(
            cfg.output_dir / "guarantee_gap.png",
            [{"n": n_star, "measured_gap": run.measured_gap, "gap_bound": run.j.gap_bound}],
            cfg.eps, title=f"gap at the guaranteed n = {n_star}")
    print("guarantee holds" if ok else "guarantee VIOLATED")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_run_config(args.config)
        cfg = override(cfg, eps=args.eps, seed=args.seed,
                       output_dir=args.out, threads=args.threads)
        if args.infimal:
            cfg = override(cfg, infimal=True)
        if args.no_figures:
            cfg = override(cfg, figures=False)
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        handler = {"iterate": cmd_iterate, "verify": cmd_verify, "guarantee": cmd_guarantee}
        return handler[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainTooSmallError as exc:
        print(f"domain too small: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
