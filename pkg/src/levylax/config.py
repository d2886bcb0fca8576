"""Run-config parsing: JSON schema, initial-datum catalog, object builders.

A run config is a single JSON file; unknown keys are rejected nowhere (we
read what we need) but missing or invalid entries raise ConfigError naming
the offending field.  All numerics (tolerance constant, tail mass, Monte
Carlo paths, quadrature tolerance) are overridable under "numerics".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .cost import CostFunction, ball_indicator, dirac_indicator, power_cost, quadratic_cost
from .errors import ConfigError
from .gridfn import GridDomain, GridFunction, sample
from .levykernel import (CompoundPoissonModel, DiracModel, GaussianModel,
                         KernelModel, SumModel)


def _cos_field(p: np.ndarray) -> np.ndarray:
    return np.sum(np.cos(p), axis=1)


def _ramp_clamp_field(p: np.ndarray) -> np.ndarray:
    return np.clip(p[:, 0], -1.0, 1.0)


def _bump_field(p: np.ndarray) -> np.ndarray:
    r2 = np.sum(p * p, axis=1)
    out = np.zeros(p.shape[0])
    inside = r2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


CATALOG = {
    "cos": _cos_field,
    "ramp-clamp": _ramp_clamp_field,
    "bump": _bump_field,
}


@dataclass(frozen=True)
class Numerics:
    tol_constant: float = 4.0
    tail_mass_tol: float = 1e-10
    mc_paths: int = 100_000
    quad_tol: float = 1e-6


@dataclass(frozen=True)
class RunConfig:
    domain: GridDomain
    cost: CostFunction
    kernel: KernelModel
    initial: GridFunction
    initial_name: str
    t: float
    n_list: tuple[int, ...]
    order: str
    eps: float | None
    seed: int
    output_dir: Path
    record_policy: bool
    infimal: bool
    figures: bool
    numerics: Numerics
    threads: int | None = None


def _require(block: dict, key: str, field: str):
    if key not in block:
        raise ConfigError(field, "missing")
    return block[key]


def _positive(value, field: str) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(field, f"not a number: {value!r}") from None
    if not x > 0 or not np.isfinite(x):
        raise ConfigError(field, f"must be a positive finite number, got {value!r}")
    return x


def build_domain(block) -> GridDomain:
    if not isinstance(block, dict):
        raise ConfigError("domain", "must be an object with lower/upper/h")
    lower = _require(block, "lower", "domain.lower")
    upper = _require(block, "upper", "domain.upper")
    h = _positive(_require(block, "h", "domain.h"), "domain.h")
    try:
        return GridDomain.from_box(lower, upper, h)
    except (ValueError, TypeError) as exc:
        raise ConfigError("domain", str(exc)) from None


def build_cost(block) -> CostFunction:
    if not isinstance(block, dict):
        raise ConfigError("cost", "must be an object with a 'kind'")
    kind = _require(block, "kind", "cost.kind")
    try:
        if kind == "quadratic":
            return quadratic_cost(_positive(block.get("kappa", 0.5), "cost.kappa"))
        if kind == "power":
            return power_cost(_positive(_require(block, "exponent", "cost.exponent"), "cost.exponent"),
                              _positive(block.get("kappa", 1.0), "cost.kappa"))
        if kind == "ball":
            return ball_indicator(_positive(_require(block, "radius", "cost.radius"), "cost.radius"))
        if kind == "dirac":
            return dirac_indicator()
    except ValueError as exc:
        raise ConfigError("cost", str(exc)) from None
    raise ConfigError("cost.kind", f"unknown kind {kind!r}")


def build_kernel(block) -> KernelModel:
    if not isinstance(block, dict):
        raise ConfigError("kernel", "must be an object with a 'kind'")
    kind = _require(block, "kind", "kernel.kind")
    try:
        if kind == "dirac":
            return DiracModel(tuple(float(x) for x in _require(block, "shift", "kernel.shift")))
        if kind == "gaussian":
            return GaussianModel(
                tuple(float(x) for x in _require(block, "drift", "kernel.drift")),
                tuple(float(x) for x in _require(block, "sigma2", "kernel.sigma2")),
            )
        if kind == "compound_poisson":
            return CompoundPoissonModel(
                _positive(_require(block, "rate", "kernel.rate"), "kernel.rate"),
                tuple(tuple(float(x) for x in o)
                      for o in _require(block, "jump_offsets", "kernel.jump_offsets")),
                tuple(float(p) for p in _require(block, "jump_probs", "kernel.jump_probs")),
            )
        if kind == "sum":
            comps = _require(block, "components", "kernel.components")
            return SumModel(tuple(build_kernel(c) for c in comps))
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError("kernel", str(exc)) from None
    raise ConfigError("kernel.kind", f"unknown kind {kind!r}")


def build_initial(block, domain: GridDomain, base_dir: Path):
    """Build the initial datum from a catalog name, constant, or CSV file."""
    if not isinstance(block, dict):
        raise ConfigError("initial", "must be an object with a 'name'")
    name = _require(block, "name", "initial.name")
    if name in CATALOG:
        return sample(domain, CATALOG[name]), name
    if name == "constant":
        value = float(block.get("value", 0.0))
        return sample(domain, lambda p: np.full(p.shape[0], value)), name
    if name == "custom":
        from .report import read_gridfunction_csv
        path = base_dir / _require(block, "csv", "initial.csv")
        if not path.exists():
            raise ConfigError("initial.csv", f"file not found: {path}")
        f = read_gridfunction_csv(path)
        if f.domain.point_counts != domain.point_counts:
            raise ConfigError("initial.csv", "CSV grid does not match the domain block")
        return f, name
    raise ConfigError("initial.name",
                      f"unknown formula {name!r}; catalog: {sorted(CATALOG)} + constant, custom")


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a JSON object")

    domain = build_domain(_require(raw, "domain", "domain"))
    cost = build_cost(_require(raw, "cost", "cost"))
    kernel = build_kernel(_require(raw, "kernel", "kernel"))
    if kernel.dim != domain.dim:
        raise ConfigError("kernel", f"kernel dimension {kernel.dim} != domain dimension {domain.dim}")
    initial, name = build_initial(_require(raw, "initial", "initial"), domain, path.parent)
    t = _positive(_require(raw, "t", "t"), "t")

    n_list = _require(raw, "n_list", "n_list")
    if (not isinstance(n_list, list) or not n_list
            or any(not isinstance(n, int) or n < 1 for n in n_list)
            or any(b <= a for a, b in zip(n_list, n_list[1:]))):
        raise ConfigError("n_list", "must be a nonempty strictly increasing list of positive integers")

    order = raw.get("order", "both")
    if order not in ("I", "J", "both"):
        raise ConfigError("order", f"must be 'I', 'J', or 'both', got {order!r}")

    eps = raw.get("eps")
    if eps is not None:
        eps = _positive(eps, "eps")

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed", "must be an integer")

    num_block = raw.get("numerics", {})
    if not isinstance(num_block, dict):
        raise ConfigError("numerics", "must be an object")
    numerics = Numerics(
        tol_constant=_positive(num_block.get("tol_constant", 4.0), "numerics.tol_constant"),
        tail_mass_tol=_positive(num_block.get("tail_mass_tol", 1e-10), "numerics.tail_mass_tol"),
        mc_paths=int(num_block.get("mc_paths", 100_000)),
        quad_tol=_positive(num_block.get("quad_tol", 1e-6), "numerics.quad_tol"),
    )

    out_dir = Path(raw.get("output_dir", "levylax_out"))
    if not out_dir.is_absolute():
        out_dir = path.parent / out_dir

    return RunConfig(
        domain=domain, cost=cost, kernel=kernel, initial=initial, initial_name=name,
        t=t, n_list=tuple(n_list), order=order, eps=eps, seed=seed,
        output_dir=out_dir, record_policy=bool(raw.get("record_policy", False)),
        infimal=bool(raw.get("infimal", False)), figures=bool(raw.get("figures", True)),
        numerics=numerics,
    )


def override(cfg: RunConfig, **kwargs) -> RunConfig:
    return replace(cfg, **{k: v for k, v in kwargs.items() if v is not None})
