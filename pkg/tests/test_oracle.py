from math import comb, exp, factorial, log

import numpy as np
import pytest

from levylax import cost, gridfn, levykernel as lk, scheme
from levylax.cost import ball_indicator, quadratic_cost, rescale
from levylax.errors import EnumerationBudgetError
from levylax.gridfn import GridDomain, GridFunction, value_at
from levylax.levykernel import DiracModel, DiscreteKernel, GaussianModel
from levylax.oracle import (Coupling, DiscreteMeasureOT, PolicyField,
                            hopf_cole, ot_coupling, ot_value, simulate_policy,
                            verify_ot_representation)

QUAD = quadratic_cost(0.5)


def series_log_expcos() -> float:
    """Independent oracle for log E[exp(cos Z)], Z ~ N(0,1), via moments.

    cos^k z = 2^-k sum_j C(k,j) cos((k-2j) z) and E cos(m Z) = e^{-m^2/2}.
    """
    def moment(k):
        return 2.0 ** -k * sum(comb(k, j) * exp(-((k - 2 * j) ** 2) / 2.0)
                               for j in range(k + 1))
    return log(sum(moment(k) / factorial(k) for k in range(40)))


class TestHopfCole:
    def test_constant_is_fixed_point(self):
        dom = GridDomain.from_box([-8.0], [8.0], 0.05)
        f = gridfn.sample(dom, lambda p: np.full(p.shape[0], 0.7))
        out = hopf_cole(f, 1.0)
        np.testing.assert_allclose(out.values, 0.7, rtol=0, atol=1e-12)

    def test_cos_spot_value_vs_series(self, benchmark):
        got = value_at(benchmark.value, [0.0])
        assert got == pytest.approx(series_log_expcos(), abs=5e-4)
        assert got == pytest.approx(0.688, abs=2e-3)

    def test_monotone_in_f(self, rng):
        dom = GridDomain.from_box([-8.0], [8.0], 0.05)
        base = rng.uniform(-1, 1, dom.point_counts)
        fa = GridFunction(dom, base, dom.half_width)
        fb = GridFunction(dom, base + rng.uniform(0, 0.5, dom.point_counts), dom.half_width)
        va, vb = hopf_cole(fa, 0.5), hopf_cole(fb, 0.5)
        assert np.all(va.values <= vb.values + 1e-12)

    def test_dynamic_programming_composition(self):
        # composition error = 2 quadrature tolerances + the h^2/8 |V''|
        # interpolation bias of re-sampling the intermediate value
        dom = GridDomain.from_box([-16.0], [16.0], 0.05)
        f = gridfn.sample(dom, lambda p: np.cos(p[:, 0]))
        direct = hopf_cole(f, 1.0, quad_tol=1e-7)
        nested = hopf_cole(hopf_cole(f, 0.6, quad_tol=1e-7), 0.4, quad_tol=1e-7)
        mask = direct.trusted_mask() & nested.trusted_mask()
        interp_bias = dom.spacing ** 2 / 8.0
        assert np.max(np.abs(direct.values[mask] - nested.values[mask])) <= \
            2e-7 + interp_bias

    def test_rejects_2d(self):
        dom = GridDomain.from_box([0, 0], [1, 1], 0.25)
        f = gridfn.sample(dom, lambda p: np.zeros(p.shape[0]))
        with pytest.raises(ValueError):
            hopf_cole(f, 1.0)


class TestOptimalTransport:
    def test_delta_to_delta(self):
        mu = DiscreteMeasureOT(np.array([[0.0]]), np.array([1.0]))
        nu = DiscreteMeasureOT(np.array([[1.5]]), np.array([1.0]))
        assert ot_value(QUAD, mu, nu) == pytest.approx(float(cost.eval(QUAD, [1.5])))

    def test_identical_measures_cost_zero(self):
        mu = DiscreteMeasureOT(np.array([[0.0], [2.0]]), np.array([0.3, 0.7]))
        assert ot_value(QUAD, mu, mu) == pytest.approx(0.0, abs=1e-11)

    def test_two_atom_shift(self):
        mu = DiscreteMeasureOT(np.array([[0.0], [1.0]]), np.array([0.5, 0.5]))
        nu = DiscreteMeasureOT(np.array([[1.0], [2.0]]), np.array([0.5, 0.5]))
        value, plan = ot_coupling(QUAD, mu, nu)
        assert value == pytest.approx(0.5, abs=1e-10)
        plan.check_marginals(mu, nu)

    def test_infeasible_under_indicator(self):
        mu = DiscreteMeasureOT(np.array([[0.0]]), np.array([1.0]))
        nu = DiscreteMeasureOT(np.array([[2.0]]), np.array([1.0]))
        assert ot_value(ball_indicator(0.5), mu, nu) == np.inf

    def test_comonotone_map_bound(self, rng):
        # transporting along an offset map costs at most the weighted move cost
        c_t = rescale(QUAD, 0.25)
        for _ in range(10):
            m = rng.integers(2, 6)
            mu = DiscreteMeasureOT(rng.normal(size=(m, 1)),
                                   np.full(m, 1.0 / m))
            offsets = rng.normal(scale=0.5, size=(m, 1))
            nu = mu.shifted(offsets)
            direct = float(np.sum(mu.weights * cost.eval(c_t, offsets)))
            assert ot_value(c_t, mu, nu) <= direct + 1e-9

    def test_reflection_symmetry(self):
        mu = DiscreteMeasureOT(np.array([[0.0], [1.0]]), np.array([0.4, 0.6]))
        nu = DiscreteMeasureOT(np.array([[0.5], [2.0]]), np.array([0.5, 0.5]))
        mirrored = ot_value(QUAD, DiscreteMeasureOT(-mu.support, mu.weights),
                            DiscreteMeasureOT(-nu.support, nu.weights))
        assert ot_value(QUAD, mu, nu) == pytest.approx(mirrored, abs=1e-10)

    def test_support_size_limit(self):
        big = DiscreteMeasureOT(np.arange(13, dtype=float)[:, None], np.full(13, 1 / 13))
        with pytest.raises(ValueError):
            ot_value(QUAD, big, big)

    def test_coupling_marginal_validation(self):
        mu = DiscreteMeasureOT(np.array([[0.0], [1.0]]), np.array([0.5, 0.5]))
        bad = Coupling(np.array([[0.5, 0.0], [0.5, 0.0]]))
        with pytest.raises(ValueError):
            bad.check_marginals(mu, mu)


class TestOTRepresentation:
    def grid(self):
        dom = GridDomain.from_box([-4 * np.pi], [4 * np.pi], np.pi / 50)
        return gridfn.sample(dom, lambda p: np.cos(p[:, 0]))

    def test_single_atom_reduces_to_hopflax(self):
        f = self.grid()
        h = f.domain.spacing
        kern = DiscreteKernel(np.zeros((1, 1), dtype=np.int64), np.ones(1), h)
        lhs, rhs = verify_ot_representation(f, [0.0], kern, QUAD, 0.25)
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_two_atom_enumeration(self):
        f = self.grid()
        h = f.domain.spacing
        kern = DiscreteKernel(np.array([[0], [8]], dtype=np.int64),
                              np.array([0.5, 0.5]), h)
        lhs, rhs = verify_ot_representation(f, [0.0], kern, QUAD, 0.25)
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_identity_cost_reduces_to_kernel_average(self):
        from levylax.cost import dirac_indicator
        f = self.grid()
        h = f.domain.spacing
        kern = DiscreteKernel(np.array([[-4], [0], [4]], dtype=np.int64),
                              np.array([0.25, 0.5, 0.25]), h)
        lhs, rhs = verify_ot_representation(f, [0.0], kern, dirac_indicator(), 0.25)
        ref = lk.apply_kernel(f, kern)
        i0 = int(np.argmin(np.abs(f.domain.axis_nodes(0))))
        assert lhs == pytest.approx(ref.values[i0], abs=1e-12)
        assert rhs == pytest.approx(ref.values[i0], abs=1e-12)

    def test_budget_guard(self):
        f = self.grid()
        kern = DiscreteKernel(np.zeros((6, 1), dtype=np.int64) + np.arange(6)[:, None],
                              np.full(6, 1 / 6), f.domain.spacing)
        with pytest.raises(EnumerationBudgetError):
            verify_ot_representation(f, [0.0], kern, QUAD, 1.0, budget=10)

    def test_atom_count_limit(self):
        f = self.grid()
        kern = DiscreteKernel(np.arange(7, dtype=np.int64)[:, None],
                              np.full(7, 1 / 7), f.domain.spacing)
        with pytest.raises(ValueError):
            verify_ot_representation(f, [0.0], kern, QUAD, 1.0)


class TestSimulatePolicy:
    def cos_grid(self):
        dom = GridDomain.from_box([-4 * np.pi], [4 * np.pi], np.pi / 250)
        return gridfn.sample(dom, lambda p: np.cos(p[:, 0]))

    def test_still_model_zero_policy_is_exact(self):
        f = self.cos_grid()
        policy = PolicyField((np.zeros(f.domain.point_counts + (1,)),), 1.0, QUAD, f.domain)
        res = simulate_policy(policy, DiracModel((0.0,)), f, [0.5], 2000, 1)
        # averaging identical path rewards reproduces f(x0) to the last ulp
        assert res.mean == pytest.approx(value_at(f, [0.5]), abs=1e-14)
        assert res.std_error <= 1e-15
        assert res.excursion_fraction == 0.0

    def test_still_model_hopflax_argmax_recovers_envelope(self):
        # deterministic dynamics driven by the recorded maximizers
        f = self.cos_grid()
        rep = scheme.iterate(f, scheme.SchemeConfig(1.0, 1, "J", QUAD, DiracModel((0.0,)),
                                                    record_policy=True))
        policy = PolicyField.from_iteration(rep, f.domain)
        x0 = [1.0]
        res = simulate_policy(policy, DiracModel((0.0,)), f, x0, 1000, 2)
        lip = gridfn.lipschitz_estimate(f)
        assert res.mean == pytest.approx(value_at(rep.final, x0),
                                         abs=f.domain.spacing * lip)

    def test_policy_mean_below_upper_iterate(self, benchmark):
        rep_j = scheme.iterate(benchmark.f, scheme.SchemeConfig(
            1.0, 8, "J", benchmark.cost, benchmark.model, record_policy=True))
        policy = PolicyField.from_iteration(rep_j, benchmark.dom)
        run = benchmark.runs[8]
        for x0 in (-1.0, 0.0, 1.5):
            res = simulate_policy(policy, benchmark.model, benchmark.f, [x0], 20_000, 11)
            upper = value_at(run.i.final, [x0]) + 3 * res.std_error + benchmark.tol
            assert res.mean <= upper

    def test_reproducible_given_seed(self):
        f = self.cos_grid()
        policy = PolicyField((np.zeros(f.domain.point_counts + (1,)),), 1.0, QUAD, f.domain)
        model = GaussianModel((0.0,), (1.0,))
        a = simulate_policy(policy, model, f, [0.0], 5000, 42)
        b = simulate_policy(policy, model, f, [0.0], 5000, 42)
        assert a.mean == b.mean and a.std_error == b.std_error

    def test_excursions_counted(self):
        dom = GridDomain.from_box([-1.0], [1.0], 0.1)
        f = gridfn.sample(dom, lambda p: np.zeros(p.shape[0]))
        policy = PolicyField((np.zeros(dom.point_counts + (1,)),), 1.0, QUAD, dom)
        res = simulate_policy(policy, DiracModel((5.0,)), f, [0.0], 100, 0)
        assert res.excursion_fraction == 1.0

    def test_policy_requires_recording(self, benchmark):
        rep = benchmark.runs[2].j  # recorded without policy
        with pytest.raises(ValueError):
            PolicyField.from_iteration(rep, benchmark.dom)

    def test_2d_policy_simulation(self):
        dom = GridDomain.from_box([-3, -3], [3, 3], 0.1)
        f = gridfn.sample(dom, lambda p: np.cos(p[:, 0]) + np.cos(p[:, 1]))
        rep = scheme.iterate(f, scheme.SchemeConfig(
            0.25, 2, "J", QUAD, GaussianModel((0.0, 0.0), (0.25, 0.25)),
            record_policy=True))
        policy = PolicyField.from_iteration(rep, dom)
        res = simulate_policy(policy, GaussianModel((0.0, 0.0), (0.25, 0.25)),
                              f, [0.0, 0.0], 5000, 3)
        assert np.isfinite(res.mean)
        assert res.mean <= value_at(rep.final, [0.0, 0.0]) + 3 * res.std_error + scheme.tol_h(f)
        assert res.mean >= np.min(f.values) - 0.25 * 2.0  # terminal min minus max step cost
