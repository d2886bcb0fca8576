import json
from pathlib import Path

import numpy as np
import pytest

from levylax import gridfn, report
from levylax.cli import main
from levylax.gridfn import GridDomain


def write_config(path: Path, **overrides) -> Path:
    cfg = {
        "domain": {"lower": [-12.566370614359172], "upper": [12.566370614359172], "h": 0.02},
        "cost": {"kind": "quadratic", "kappa": 0.5},
        "kernel": {"kind": "gaussian", "drift": [0.0], "sigma2": [1.0]},
        "initial": {"name": "cos"},
        "t": 1.0,
        "n_list": [1, 2],
        "order": "both",
        "seed": 7,
        "output_dir": "out",
    }
    cfg.update(overrides)
    target = path / "config.json"
    target.write_text(json.dumps(cfg))
    return target


class TestIterateCommand:
    def test_writes_frozen_artifacts(self, tmp_path):
        cfg = write_config(tmp_path, eps=1.0)
        assert main(["iterate", str(cfg)]) == 0
        out = tmp_path / "out"
        for name in ("convergence.csv", "summary.json", "iterate_n1.csv",
                     "iterate_n2.csv", "iterate_I_n1.csv", "steps_n1.csv",
                     "iterates.png", "convergence.png"):
            assert (out / name).exists(), name
        header = (out / "convergence.csv").read_text().splitlines()[0]
        assert header == "n,sup_j,inf_i,measured_gap,gap_bound"
        assert (out / "iterate_n1.csv").read_text().splitlines()[0] == "x0,value"
        assert (out / "steps_n1.csv").read_text().splitlines()[0] == \
            "order,step,sup,inf,lip,trusted_radius,gap_bound"
        summary = json.loads((out / "summary.json").read_text())
        for key in ("t", "order", "seed", "h", "runs", "guarantee_n", "oracle"):
            assert key in summary
        assert summary["guarantee_n"] == 2
        assert {"hopf_cole_value", "mc_mean", "mc_std_error", "excursion_fraction"} <= \
            set(summary["oracle"])

    def test_bitwise_reproducible_across_runs_and_threads(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["iterate", str(cfg), "--out", str(tmp_path / "a"), "--no-figures",
                     "--threads", "1"]) == 0
        assert main(["iterate", str(cfg), "--out", str(tmp_path / "b"), "--no-figures",
                     "--threads", "8"]) == 0
        for name in ("convergence.csv", "iterate_n2.csv", "steps_n2.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        a = json.loads((tmp_path / "a" / "summary.json").read_text())
        b = json.loads((tmp_path / "b" / "summary.json").read_text())
        a.pop("threads"), b.pop("threads")
        assert a == b

    def test_dirac_kernel_iterates_match_envelope(self, tmp_path):
        # drift-free deterministic kernel: every n reproduces the t = 1 envelope
        cfg = write_config(tmp_path, kernel={"kind": "dirac", "shift": [0.0]},
                           n_list=[1, 4], order="J")
        assert main(["iterate", str(cfg)]) == 0
        f1 = report.read_gridfunction_csv(tmp_path / "out" / "iterate_n1.csv")
        f4 = report.read_gridfunction_csv(tmp_path / "out" / "iterate_n4.csv")
        dom = GridDomain.from_box([-12.566370614359172], [12.566370614359172], 0.02)
        mask = np.abs(dom.axis_nodes(0)) <= 6.0
        assert np.max(np.abs(f1.values[mask] - f4.values[mask])) <= \
            4 * dom.spacing * 1.0

    def test_measured_gap_nonnegative_up_to_tol(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["iterate", str(cfg)]) == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        for run in summary["runs"]:
            assert run["measured_gap"] >= -2 * summary["tol_h"]

    def test_missing_cost_block_exit_2(self, tmp_path, capsys):
        cfg_path = tmp_path / "config.json"
        raw = json.loads(write_config(tmp_path).read_text())
        del raw["cost"]
        cfg_path.write_text(json.dumps(raw))
        assert main(["iterate", str(cfg_path)]) == 2
        assert "cost" in capsys.readouterr().err

    def test_domain_too_small_exit_3(self, tmp_path):
        cfg = write_config(tmp_path, domain={"lower": [-2.0], "upper": [2.0], "h": 0.02})
        assert main(["iterate", str(cfg)]) == 3

    def test_custom_csv_initial(self, tmp_path):
        dom = GridDomain.from_box([-12.566370614359172], [12.566370614359172], 0.02)
        f = gridfn.sample(dom, lambda p: np.cos(p[:, 0]))
        report.write_gridfunction_csv(f, tmp_path / "init.csv")
        cfg = write_config(tmp_path, initial={"name": "custom", "csv": "init.csv"},
                           n_list=[1], order="J")
        assert main(["iterate", str(cfg), "--no-figures"]) == 0

    def test_record_policy_emits_csv(self, tmp_path):
        cfg = write_config(tmp_path, record_policy=True, n_list=[2], order="J")
        assert main(["iterate", str(cfg), "--no-figures"]) == 0
        policy = tmp_path / "out" / "policy_n2_step1.csv"
        assert policy.exists()
        assert policy.read_text().splitlines()[0] == "x0,a0"

    def test_infimal_flag(self, tmp_path):
        cfg = write_config(tmp_path, n_list=[1], order="both")
        assert main(["iterate", str(cfg), "--infimal", "--out", str(tmp_path / "inf"),
                     "--no-figures"]) == 0
        summary = json.loads((tmp_path / "inf" / "summary.json").read_text())
        assert summary["infimal"] is True
        assert summary["runs"][0]["measured_gap"] >= -2 * summary["tol_h"]


class TestVerifyCommand:
    def test_benchmark_passes(self, tmp_path):
        cfg = write_config(tmp_path, eps=1.0)
        assert main(["verify", str(cfg)]) == 0
        payload = json.loads((tmp_path / "out" / "verify.json").read_text())
        assert payload["all_pass"] is True
        names = {c["name"] for c in payload["checks"]}
        assert {"sandwich_vs_hopf_cole", "gap_rate", "key_estimate", "doubling_chains",
                "ot_representation", "guarantee", "infimal_symmetry"} == names
        assert (tmp_path / "out" / "verify_sandwich.png").exists()

    def test_coarse_grid_guarantee_fails(self, tmp_path):
        cfg = write_config(tmp_path, eps=0.25,
                           domain={"lower": [-12.566370614359172],
                                   "upper": [12.566370614359172], "h": 0.5})
        assert main(["verify", str(cfg)]) == 1
        payload = json.loads((tmp_path / "out" / "verify.json").read_text())
        by_name = {c["name"]: c for c in payload["checks"]}
        assert by_name["guarantee"]["status"] == "fail"
        assert "too coarse" in by_name["guarantee"]["detail"]["error"]

    def test_infimal_reversed_sandwich(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["verify", str(cfg), "--infimal"]) == 0
        payload = json.loads((tmp_path / "out" / "verify.json").read_text())
        assert payload["infimal"] is True
        assert payload["all_pass"] is True


class TestGuaranteeCommand:
    def test_constant_datum(self, tmp_path, capsys):
        cfg = write_config(tmp_path, initial={"name": "constant", "value": 0.3},
                           eps=0.5, n_list=[1], order="J")
        assert main(["guarantee", str(cfg), "--no-figures"]) == 0
        out = capsys.readouterr().out
        assert "guarantee_n = 1" in out
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["guarantee_n"] == 1
        assert summary["measured_gap"] == pytest.approx(0.0, abs=1e-12)

    def test_cos_benchmark_eps_one(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["guarantee", str(cfg), "--eps", "1.0", "--no-figures"]) == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["guarantee_n"] == 2
        assert summary["measured_gap"] <= 1.0 + summary["threshold"]

    def test_missing_eps_exit_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        assert main(["guarantee", str(cfg)]) == 2
        assert "eps" in capsys.readouterr().err


class TestReportRoundTrip:
    def test_gridfunction_csv(self, tmp_path, rng):
        dom = GridDomain.from_box([-1.0], [2.0], 0.25)
        f = gridfn.GridFunction(dom, rng.normal(size=dom.point_counts), dom.half_width)
        report.write_gridfunction_csv(f, tmp_path / "f.csv")
        g = report.read_gridfunction_csv(tmp_path / "f.csv")
        np.testing.assert_array_equal(g.values, f.values)
        assert g.domain.point_counts == dom.point_counts

    def test_gridfunction_csv_2d(self, tmp_path):
        dom = GridDomain.from_box([0, 0], [1, 2], 0.5)
        f = gridfn.sample(dom, lambda p: p[:, 0] + 10 * p[:, 1])
        report.write_gridfunction_csv(f, tmp_path / "f.csv")
        assert (tmp_path / "f.csv").read_text().splitlines()[0] == "x0,x1,value"
        g = report.read_gridfunction_csv(tmp_path / "f.csv")
        np.testing.assert_array_equal(g.values, f.values)

    def test_kernel_csv(self, tmp_path):
        from levylax.levykernel import DiracModel, discretize
        k = discretize(DiracModel((1.0,)), 1.0, 0.5)
        report.write_kernel_csv(k, tmp_path / "k.csv")
        lines = (tmp_path / "k.csv").read_text().splitlines()
        assert lines[0] == "offset0,weight"
        assert lines[1] == "1.0,1.0"
