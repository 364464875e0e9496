"""Config parsing, run orchestration, artifacts and exit codes."""

import json

import numpy as np
import pytest

import choquard as cq
from choquard.cli import main, parse_config, run


def tiny_minimize_config(**overrides):
    cfg = {
        "mode": "minimize",
        "grid": {"dim": 3, "half_extent": 8.0, "points_per_axis": 16},
        "model": {
            "alpha": 2.0, "p": 2.0, "q": 2.0, "mu1": 5.0, "mu2": 5.0,
            "xi": 1.0, "eta": 1.0,
            "coupling": {"kind": "constant", "beta0": 0.1},
        },
        "flow": {"max_iters": 400, "grad_tol": 1e-4, "symmetrize_every": 10},
        "init": {"width_u": 1.5, "width_v": 1.5},
        "seed": 1,
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, payload, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


class TestParse:
    def test_minimal_valid(self, tmp_path):
        cfg = parse_config(write_config(tmp_path, tiny_minimize_config()))
        assert cfg.mode == "minimize"
        assert cfg.grid.points_per_axis == 16
        assert cfg.params.mu1 == 5.0
        assert cfg.resolved["model"]["coupling"]["beta0"] == 0.1

    def test_missing_mode(self, tmp_path):
        payload = tiny_minimize_config()
        del payload["mode"]
        with pytest.raises(cq.SchemaError, match="mode"):
            parse_config(write_config(tmp_path, payload))

    def test_exponent_at_upper_limit_rejected(self, tmp_path):
        payload = tiny_minimize_config()
        payload["model"]["p"] = 5.0  # (N + alpha)/(N - 2) = 5 at N=3, alpha=2
        with pytest.raises(cq.RangeError, match="admissible window"):
            parse_config(write_config(tmp_path, payload))

    def test_unknown_field(self, tmp_path):
        payload = tiny_minimize_config()
        payload["extra"] = 1
        with pytest.raises(cq.SchemaError, match="unknown field"):
            parse_config(write_config(tmp_path, payload))

    def test_bad_grid(self, tmp_path):
        payload = tiny_minimize_config()
        payload["grid"]["points_per_axis"] = 15
        with pytest.raises(cq.RangeError):
            parse_config(write_config(tmp_path, payload))

    def test_missing_file(self, tmp_path):
        with pytest.raises(cq.SchemaError, match="does not exist"):
            parse_config(tmp_path / "nope.json")

    def test_scan_needs_lists(self, tmp_path):
        payload = tiny_minimize_config(mode="scan")
        with pytest.raises(cq.SchemaError, match="xi_list"):
            parse_config(write_config(tmp_path, payload))


class TestRunMinimize:
    def test_artifacts_and_exit(self, tmp_path):
        path = write_config(tmp_path, tiny_minimize_config())
        code = main(["minimize", "--config", str(path), "--out", str(tmp_path / "out")])
        assert code == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["mode"] == "minimize"
        assert report["config"]["model"]["mu1"] == 5.0  # audit trail
        assert report["result"]["converged"] is True
        assert report["result"]["energy"]["total"] < 0
        profile = (tmp_path / "out" / "profiles.csv").read_text().splitlines()
        assert profile[0] == "r,u,v,v1,v2,beta"
        assert len(profile) == 1 + 8  # M/2 radial samples

    def test_solver_failure_exit(self, tmp_path):
        payload = tiny_minimize_config()
        payload["flow"] = {"max_iters": 3, "grad_tol": 1e-12, "energy_tol": 1e-14}
        path = write_config(tmp_path, payload)
        code = main(["minimize", "--config", str(path), "--out", str(tmp_path / "out")])
        assert code == 3
        assert (tmp_path / "out" / "report.json").exists()

    def test_mode_subcommand_mismatch(self, tmp_path):
        path = write_config(tmp_path, tiny_minimize_config())
        assert main(["scan", "--config", str(path), "--out", str(tmp_path)]) == 2

    def test_config_error_exit(self, tmp_path):
        payload = tiny_minimize_config()
        payload["model"]["p"] = 5.0
        path = write_config(tmp_path, payload)
        assert main(["minimize", "--config", str(path), "--out", str(tmp_path)]) == 2

    def test_error_record_on_solver_exception(self, tmp_path):
        payload = tiny_minimize_config()
        payload["model"]["p"] = 3.0  # supercritical: minimize must refuse
        payload["model"]["q"] = 3.0
        path = write_config(tmp_path, payload)
        code = main(["minimize", "--config", str(path), "--out", str(tmp_path / "out")])
        assert code == 3
        err = json.loads((tmp_path / "out" / "error.json").read_text())
        assert err["error"] == "NotSubcritical"


class TestDeterminism:
    def test_byte_identical_reports(self, tmp_path):
        path = write_config(tmp_path, tiny_minimize_config())
        for name in ("a", "b"):
            assert main(["minimize", "--config", str(path), "--out", str(tmp_path / name)]) == 0
        for fname in ("report.json", "profiles.csv"):
            a = (tmp_path / "a" / fname).read_bytes()
            b = (tmp_path / "b" / fname).read_bytes()
            assert a == b

    def test_seed_override_changes_default_init(self, tmp_path):
        payload = tiny_minimize_config()
        del payload["init"]
        path = write_config(tmp_path, payload)
        outs = []
        for seed, name in ((1, "s1"), (2, "s2")):
            main(["minimize", "--config", str(path), "--seed", str(seed),
                  "--out", str(tmp_path / name)])
            outs.append(json.loads((tmp_path / name / "report.json").read_text()))
        assert outs[0]["config"]["seed"] == 1 and outs[1]["config"]["seed"] == 2


class TestCheckMode:
    def test_admissible_coupling_passes(self, tmp_path):
        payload = tiny_minimize_config(mode="check")
        payload["model"].update(p=3.0, q=3.0, mu1=60.0, mu2=60.0)
        payload["model"]["coupling"] = {"kind": "constant", "beta0": 0.01}
        path = write_config(tmp_path, payload)
        code = main(["check", "--config", str(path), "--out", str(tmp_path / "out")])
        assert code == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["passed"] is True
        assert report["result"]["coupling"]["condition3_ok"] is True
        assert "geometry" in report["result"]

    def test_inadmissible_coupling_fails(self, tmp_path):
        payload = tiny_minimize_config(mode="check")
        payload["model"].update(p=3.0, q=3.0, mu1=60.0, mu2=60.0)
        payload["model"]["coupling"] = {"kind": "constant", "beta0": 5.0}
        path = write_config(tmp_path, payload)
        code = main(["check", "--config", str(path), "--out", str(tmp_path / "out")])
        assert code == 4
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["passed"] is False
        assert report["result"]["coupling"]["sup_ok"] is False

    def test_potential_classes_reported(self, tmp_path):
        payload = tiny_minimize_config(mode="check")
        payload["model"]["v1"] = {"kind": "gaussian_well", "depth": 1.0, "width": 1.0}
        payload["model"]["v2"] = {"kind": "harmonic", "stiffness": 1.0}
        path = write_config(tmp_path, payload)
        code = main(["check", "--config", str(path), "--out", str(tmp_path / "out")])
        assert code == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["result"]["v1"]["label"] == "V1"
        assert report["result"]["v2"]["label"] == "V2"


class TestOracleMode:
    def test_equivalence_passes(self, tmp_path):
        payload = tiny_minimize_config(mode="oracle")
        payload["grid"] = {"dim": 2, "half_extent": 6.0, "points_per_axis": 24}
        payload["model"]["alpha"] = 1.2
        path = write_config(tmp_path, payload)
        code = main(["oracle", "--config", str(path), "--out", str(tmp_path / "out")])
        assert code == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["result"]["max_rel_linf_error"] < 1e-8


class TestScanMode:
    def test_scan_artifacts_and_monotone_with_wells(self, tmp_path):
        payload = tiny_minimize_config(mode="scan")
        payload["model"].update(p=1.8, q=1.8, mu1=8.0, mu2=8.0)
        payload["model"]["v1"] = {"kind": "gaussian_well", "depth": 0.5, "width": 2.0}
        payload["model"]["v2"] = {"kind": "gaussian_well", "depth": 0.5, "width": 2.0}
        payload["scan"] = {"xi_list": [1.0, 2.0], "eta_list": [1.0, 2.0], "n_starts": 2}
        payload["flow"] = {"max_iters": 400, "grad_tol": 1e-4}
        path = write_config(tmp_path, payload)
        code = main(["scan", "--config", str(path), "--out", str(tmp_path / "out")])
        assert code == 0
        rows = (tmp_path / "out" / "scan.csv").read_text().splitlines()
        assert rows[0] == "xi,eta,energy,converged,iterations"
        assert len(rows) == 1 + 4
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        energies = np.array(report["result"]["energies"])
        assert energies.shape == (2, 2)
        assert np.all(energies < 0)
        # deeper problems at larger masses: nonincreasing along each axis
        assert np.all(np.diff(energies, axis=0) <= 1e-3)
        assert np.all(np.diff(energies, axis=1) <= 1e-3)


class TestThreads:
    def test_energies_agree_across_worker_counts(self, tmp_path):
        path = write_config(tmp_path, tiny_minimize_config())
        totals = []
        for threads, name in ((1, "t1"), (2, "t2")):
            code = main(["minimize", "--config", str(path), "--threads", str(threads),
                         "--out", str(tmp_path / name)])
            assert code == 0
            rep = json.loads((tmp_path / name / "report.json").read_text())
            totals.append(rep["result"]["energy"]["total"])
        cq.set_workers(1)
        assert abs(totals[0] - totals[1]) <= 1e-10 * max(1.0, abs(totals[0]))
