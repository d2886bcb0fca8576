"""Shared fixtures: the flagship benchmark and small aligned grids."""

from types import SimpleNamespace

import numpy as np
import pytest

from levylax import gridfn, levykernel, oracle, scheme
from levylax.cost import quadratic_cost

BENCH_LOWER = -4 * np.pi
BENCH_UPPER = 4 * np.pi
BENCH_H = 0.01
BENCH_T = 1.0
BENCH_NS = (1, 2, 4, 8, 16)


def cos_field(p):
    return np.sum(np.cos(p), axis=1)


@pytest.fixture(scope="session")
def benchmark():
    """cos / standard Brownian / quadratic-(1/2) runs for n in 1..16.

    Computed once: these runs back most scheme properties and half the
    acceptance criteria.
    """
    dom = gridfn.GridDomain.from_box([BENCH_LOWER], [BENCH_UPPER], BENCH_H)
    f = gridfn.sample(dom, cos_field)
    cost = quadratic_cost(0.5)
    model = levykernel.GaussianModel((0.0,), (1.0,))
    runs = {}
    for n in BENCH_NS:
        cfg = scheme.SchemeConfig(BENCH_T, n, "J", cost, model)
        runs[n] = scheme.run_sandwich(f, cfg)
    return SimpleNamespace(
        dom=dom, f=f, cost=cost, model=model, t=BENCH_T,
        tol=scheme.tol_h(f), runs=runs,
        value=oracle.hopf_cole(f, BENCH_T),
    )


@pytest.fixture(scope="session")
def aligned_pi_grid():
    """Grid on [-4pi, 4pi] whose nodes include the multiples of pi/250."""
    dom = gridfn.GridDomain.from_box([-4 * np.pi], [4 * np.pi], np.pi / 250)
    return dom


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
