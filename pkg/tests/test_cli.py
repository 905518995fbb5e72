"""CLI behavior: config parsing, artifacts, exit codes, round trips."""

import json

import numpy as np
import pytest

from sleepmdp import StateSpace
from sleepmdp.cli import (
    EXIT_BAD_PARAMETER,
    EXIT_CONFIG,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_SLOT,
    EXIT_STRUCTURE,
    load_scenario,
    main,
    parse_scenario,
    read_policy_file,
    scenario_to_doc,
)
from sleepmdp.errors import ConfigError

from conftest import PAPER_CONFIG


def tiny_doc(**overrides):
    doc = {
        "description": "test scenario",
        "model": {
            "arrival_rates_per_s": [1.0],
            "transition_rates_per_s": [[0.0]],
        },
        "params": {
            "n_servers": 1,
            "service_rate_per_s": 2.0,
            "buffer": 6,
            "e_switch_j": 1.0,
            "e_on_j_per_slot": 0.1,
            "delay_weight_per_job_slot": 0.5,
            "discount_factor_per_slot": 0.9,
            "slot_s": 0.1,
        },
        "solver": {"algorithm": "vi", "epsilon": 1e-8, "max_iters": 50_000},
        "sim": {
            "initial_state": [0, 0, 0],
            "replications": 50,
            "horizon_slots": 200,
            "tail_tol": 1e-6,
            "seed": 11,
        },
        "output_dir": "out",
    }
    for key, value in overrides.items():
        section, _, name = key.partition(".")
        if name:
            doc[section][name] = value
        else:
            doc[section] = value
    return doc


def write_cfg(tmp_path, doc, name="scn.cfg"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


class TestParsing:
    def test_unknown_keys_rejected_with_full_list(self, tmp_path):
        doc = tiny_doc()
        doc["mystery"] = 1
        doc["params"]["bogus_key"] = 2
        with pytest.raises(ConfigError) as err:
            parse_scenario(doc)
        text = str(err.value)
        assert "mystery" in text and "bogus_key" in text

    def test_exactly_one_service_key(self):
        doc = tiny_doc()
        doc["params"]["mean_service_time_s"] = 0.5
        with pytest.raises(ConfigError):
            parse_scenario(doc)

    def test_mean_service_time_converted(self):
        doc = tiny_doc()
        del doc["params"]["service_rate_per_s"]
        doc["params"]["mean_service_time_s"] = 0.25
        assert parse_scenario(doc).params.service_rate == pytest.approx(4.0)

    def test_semantic_validation_runs(self, tmp_path):
        doc = tiny_doc(**{"params.buffer": 0})
        path = write_cfg(tmp_path, doc)
        assert main(["solve", str(path)]) == EXIT_CONFIG

    def test_dump_roundtrip_identity(self):
        scenario = load_scenario(PAPER_CONFIG)
        assert parse_scenario(scenario_to_doc(scenario)) == scenario

    def test_dump_roundtrip_tiny(self):
        scenario = parse_scenario(tiny_doc())
        assert parse_scenario(scenario_to_doc(scenario)) == scenario


class TestSolveCommand:
    def test_artifacts_and_headers(self, tmp_path):
        path = write_cfg(tmp_path, tiny_doc())
        out = tmp_path / "artifacts"
        assert main(["solve", str(path), "--out", str(out), "--dump-config"]) == EXIT_OK
        for name in ("values.tsv", "policy.tsv", "thresholds.tsv", "solve_report.json",
                     "config_normalized.json"):
            assert (out / name).exists(), name
        header = (out / "policy.tsv").read_text().splitlines()[:4]
        assert header[0].startswith("# tool: sleepmdp")
        assert header[1].startswith("# config_sha256: ")
        assert header[2] == "# slot_s: 0.1"
        assert header[3] == "# discount_per_slot: 0.9"

    def test_policy_rows_equal_state_count(self, tmp_path):
        path = write_cfg(tmp_path, tiny_doc())
        out = tmp_path / "o"
        main(["solve", str(path), "--out", str(out)])
        rows = [
            line for line in (out / "policy.tsv").read_text().splitlines()
            if line and not line.startswith(("#", "state\t"))
        ]
        assert len(rows) == StateSpace(1, 6, 1).n_states  # N*(B+1)*(M+1)

    def test_slot_too_large_exit_code(self, tmp_path, capsys):
        doc = json.loads(PAPER_CONFIG.read_text())
        doc["params"]["slot_s"] = 0.010
        path = write_cfg(tmp_path, doc)
        assert main(["solve", str(path), "--out", str(tmp_path / "x")]) == EXIT_SLOT
        err = json.loads(capsys.readouterr().err.strip())
        assert err["error"] == "slot_too_large"

    def test_not_converged_exit_code_with_artifacts(self, tmp_path):
        doc = tiny_doc()
        doc["solver"]["max_iters"] = 2
        path = write_cfg(tmp_path, doc)
        out = tmp_path / "nc"
        assert main(["solve", str(path), "--out", str(out)]) == EXIT_NOT_CONVERGED
        report = json.loads((out / "solve_report.json").read_text())
        assert report["warning"]
        assert (out / "values.tsv").exists()

    def test_config_flag_alias(self, tmp_path):
        path = write_cfg(tmp_path, tiny_doc())
        assert main(["solve", "--config", str(path), "--out", str(tmp_path / "flag")]) == EXIT_OK


class TestVerifyCommand:
    def test_policy_checks_pass_and_boundary_layer_flagged(self, tmp_path):
        """Monotone and hysteretic hold exactly; the Q-factor and value-increment
        inequality checks genuinely fail in a thin layer at the buffer edge
        (blocking boundary), which verify reports with exit 5."""
        path = write_cfg(tmp_path, tiny_doc())
        out = tmp_path / "v"
        code = main(["verify", str(path), "--out", str(out)])
        report = json.loads((out / "verify_report.json").read_text())
        checks = {c["name"]: c for c in report["checks"]}
        assert checks["monotone"]["passed"]
        assert checks["hysteretic"]["passed"]
        assert code == EXIT_STRUCTURE
        failed = {name for name, c in checks.items() if not c["passed"]}
        assert failed <= {"partial_submodular", "value_difference_props"}

    def test_hand_crafted_non_monotone_policy(self, tmp_path):
        path = write_cfg(tmp_path, tiny_doc())
        out = tmp_path / "v2"
        space = StateSpace(1, 6, 1)
        cube = np.zeros((1, 7, 2), dtype=np.int64)
        cube[0, 2, 0] = 1  # action drops back to 0 at queue 3
        policy_file = tmp_path / "bad_policy.tsv"
        with policy_file.open("w") as fh:
            fh.write("state\tphase\tqueue\tactive\taction\n")
            flat = cube.reshape(-1)
            for idx in range(space.n_states):
                st = space.decode(idx)
                fh.write(f"{idx}\t{st.phase}\t{st.queue}\t{st.active}\t{flat[idx]}\n")
        code = main(["verify", str(path), "--out", str(out), "--policy-file", str(policy_file)])
        assert code == EXIT_STRUCTURE
        report = json.loads((out / "verify_report.json").read_text())
        checks = {c["name"]: c for c in report["checks"]}
        assert not checks["monotone"]["passed"]
        assert checks["monotone"]["n_violations"] >= 1


class TestSimulateCommand:
    def test_n_policy_two_replications(self, tmp_path):
        path = write_cfg(tmp_path, tiny_doc())
        out = tmp_path / "s"
        code = main(["simulate", str(path), "--out", str(out),
                     "--policy", "n_policy:5,1", "--reps", "2"])
        assert code == EXIT_OK
        report = json.loads((out / "sim_report.json").read_text())["report"]
        assert report["replications"] == 2
        assert np.isfinite(report["ci99"]).all()

    def test_solve_policy_gets_verdict(self, tmp_path):
        path = write_cfg(tmp_path, tiny_doc())
        out = tmp_path / "s2"
        code = main(["simulate", str(path), "--out", str(out), "--reps", "300"])
        assert code == EXIT_OK
        payload = json.loads((out / "sim_report.json").read_text())
        assert "verdict" in payload
        assert payload["verdict"]["v_star_in_ci"] is True

    def test_policy_file_source_matches_solve(self, tmp_path):
        path = write_cfg(tmp_path, tiny_doc())
        solve_out = tmp_path / "solved"
        main(["solve", str(path), "--out", str(solve_out)])
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        main(["simulate", str(path), "--out", str(out_a), "--reps", "40"])
        main(["simulate", str(path), "--out", str(out_b), "--reps", "40",
              "--policy-file", str(solve_out / "policy.tsv")])
        mean_a = json.loads((out_a / "sim_report.json").read_text())["report"]["mean"]
        mean_b = json.loads((out_b / "sim_report.json").read_text())["report"]["mean"]
        assert mean_a == mean_b

    def test_bad_policy_spec(self, tmp_path):
        path = write_cfg(tmp_path, tiny_doc())
        assert main(["simulate", str(path), "--out", str(tmp_path / "x"),
                     "--policy", "n_policy:99,1"]) == EXIT_BAD_PARAMETER

    def test_sweep_writes_comparison_table(self, tmp_path):
        path = write_cfg(tmp_path, tiny_doc())
        out = tmp_path / "sw"
        code = main(["simulate", str(path), "--out", str(out), "--reps", "20",
                     "--policy", "n_policy_sweep:1-3:1"])
        assert code == EXIT_OK
        lines = [
            line for line in (out / "comparison.tsv").read_text().splitlines()
            if line and not line.startswith("#")
        ]
        assert lines[0].startswith("queue_threshold\t")
        assert len(lines) == 1 + 3


class TestPolicyFileIO:
    def test_incomplete_policy_rejected(self, tmp_path):
        space = StateSpace(1, 6, 1)
        path = tmp_path / "partial.tsv"
        path.write_text("0\t0\t0\t0\t1\n")
        with pytest.raises(Exception):
            read_policy_file(path, space)

    def test_dump_config_command(self, tmp_path, capsys):
        path = write_cfg(tmp_path, tiny_doc())
        assert main(["dump-config", str(path)]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert parse_scenario(doc) == parse_scenario(tiny_doc())
