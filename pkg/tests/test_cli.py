"""Command line interface: exit codes, presets, output files."""

import hashlib
import json
import subprocess

import yaml

CLI = "crnbridge"

DEATH_DOC = {
    "name": "cli_death",
    "mode": "forward",
    "network": {
        "species": ["A"],
        "reactions": [{"xi": [-1], "kappa": 0.5, "orders": [1]}],
    },
    "x0": [50],
    "time": 1.0,
    "replicates": 30,
    "seed": 5,
}

# a full-state conditioning on this network is degenerate: the gene count
# never changes, so the projected diffusion matrix is singular
GTT_FULL_STATE_DOC = {
    "name": "cli_gtt_bad",
    "mode": "guided",
    "network": {
        "species": ["G", "M", "P"],
        "reactions": [
            {"xi": [0, 1, 0], "kappa": 100.0, "orders": [1, 0, 0]},
            {"xi": [0, 0, 1], "kappa": 10.0, "orders": [0, 1, 0]},
            {"xi": [0, -1, 0], "kappa": 25.0, "orders": [0, 1, 0]},
            {"xi": [0, 0, -1], "kappa": 1.0, "orders": [0, 0, 1]},
        ],
    },
    "x0": [1, 50, 10],
    "time": 1.0,
    "replicates": 5,
    "seed": 5,
    "observations": {
        "epsilon": 1e-5,
        "events": [
            {
                "time": 1.0,
                "L": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                "v": [1.0, 11.0, 56.0],
            }
        ],
    },
    "guides": [{"name": "epsilon"}],
}


def run(*args):
    return subprocess.run([CLI, *args], capture_output=True, text=True)


def write_doc(tmp_path, doc, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(doc))
    return str(p)


def md5(path):
    return hashlib.md5(path.read_bytes()).hexdigest()


class TestForwardCommand:
    def test_runs_and_writes_outputs(self, tmp_path):
        cfg = write_doc(tmp_path, DEATH_DOC)
        out = tmp_path / "out"
        res = run("forward", "--config", cfg, "--out", str(out))
        assert res.returncode == 0, res.stderr
        doc = json.loads(res.stdout)
        assert doc["mode"] == "forward"
        assert sum(doc["results"]["terminal_counts"].values()) == 30
        assert (out / "summary.json").exists()
        assert (out / "paths.csv").exists()
        assert "elapsed" in res.stderr

    def test_outputs_identical_across_runs_and_threads(self, tmp_path):
        cfg = write_doc(tmp_path, DEATH_DOC)
        hashes = []
        for name, threads in (("a", "1"), ("b", "1"), ("c", "4")):
            out = tmp_path / name
            res = run("forward", "--config", cfg, "--out", str(out), "--threads", threads)
            assert res.returncode == 0, res.stderr
            hashes.append((md5(out / "summary.json"), md5(out / "paths.csv")))
        assert hashes[0] == hashes[1] == hashes[2]

    def test_seed_override_changes_the_output(self, tmp_path):
        cfg = write_doc(tmp_path, DEATH_DOC)
        r1 = run("forward", "--config", cfg)
        r2 = run("forward", "--config", cfg, "--seed", "99")
        assert r1.stdout != r2.stdout


class TestPresets:
    def test_bundled_preset_resolves_by_name(self):
        res = run("forward", "--config", "death_forward", "--replicates", "20")
        assert res.returncode == 0, res.stderr
        assert json.loads(res.stdout)["replicates"] == 20

    def test_unknown_config_lists_presets(self):
        res = run("forward", "--config", "no_such_thing")
        assert res.returncode == 2
        assert "death_forward" in res.stderr


class TestExitCodes:
    def test_wrong_mode_for_command(self, tmp_path):
        cfg = write_doc(tmp_path, DEATH_DOC)
        res = run("pmf", "--config", cfg)
        assert res.returncode == 2
        assert "mode" in res.stderr

    def test_invalid_replicates(self, tmp_path):
        cfg = write_doc(tmp_path, DEATH_DOC)
        res = run("forward", "--config", cfg, "--replicates", "0")
        assert res.returncode == 2

    def test_schema_error(self, tmp_path):
        doc = dict(DEATH_DOC)
        doc.pop("x0")
        cfg = write_doc(tmp_path, doc)
        res = run("forward", "--config", cfg)
        assert res.returncode == 2
        assert "x0" in res.stderr

    def test_unknown_guide_label(self):
        res = run("guided", "--config", "gtt_bridge", "--guide", "nope")
        assert res.returncode == 2

    def test_singular_metric_is_a_numerical_failure(self, tmp_path):
        cfg = write_doc(tmp_path, GTT_FULL_STATE_DOC)
        res = run("guided", "--config", cfg)
        assert res.returncode == 3
        assert "numerical failure" in res.stderr


class TestGuidedCommand:
    def test_bridge_preset_small_run(self, tmp_path):
        out = tmp_path / "out"
        res = run(
            "guided", "--config", "gtt_bridge", "--replicates", "25", "--out", str(out)
        )
        assert res.returncode == 0, res.stderr
        doc = json.loads(res.stdout)
        entry = doc["results"]["guides"]["diffusion"]
        assert entry["n"] == 25
        assert entry["hit_fraction"] > 0.9
        assert (out / "paths_diffusion.csv").exists()

    def test_scenarios_config_served_by_guided(self, tmp_path):
        doc = {
            "name": "scen",
            "mode": "scenarios",
            "network": DEATH_DOC["network"],
            "x0": [50],
            "time": 1.0,
            "replicates": 10,
            "seed": 5,
            "scenarios": [{"name": "low", "v": [30.0]}],
            "guides": [
                {
                    "name": "poisson_hybrid",
                    "label": "poisson",
                    "theta": {"rule": "target", "factor": 0.5},
                    "monotone_index": 0,
                }
            ],
        }
        cfg = write_doc(tmp_path, doc)
        res = run("guided", "--config", cfg)
        assert res.returncode == 0, res.stderr
        grid = json.loads(res.stdout)["results"]["grid"]
        assert grid["low"]["poisson"]["hit_fraction"] == 1.0


class TestPmfCommand:
    def test_single_guide_small_run(self):
        res = run(
            "pmf", "--config", "death_pmf", "--replicates", "30", "--guide", "poisson"
        )
        assert res.returncode == 0, res.stderr
        doc = json.loads(res.stdout)
        entry = doc["results"]["guides"]["poisson"]
        assert len(entry["estimates"]) == len(doc["results"]["support"])
        assert "sse" in entry


class TestTuneACommand:
    def test_grid_table(self, tmp_path):
        cfg = write_doc(tmp_path, DEATH_DOC)
        out = tmp_path / "out"
        res = run(
            "tune-a", "--config", cfg, "--target", "30", "--grid", "1.0,2.5",
            "--replicates", "25", "--out", str(out),
        )
        assert res.returncode == 0, res.stderr
        doc = json.loads(res.stdout)
        assert [r["multiplier"] for r in doc["rows"]] == [1.0, 2.5]
        assert (out / "tune_a.json").exists()


class TestCheckGreedyCommand:
    def test_death_toward_lower_target(self, tmp_path):
        cfg = write_doc(tmp_path, DEATH_DOC)
        res = run("check-greedy", "--config", cfg, "--target", "30", "--radius", "3")
        assert res.returncode == 0, res.stderr
        doc = json.loads(res.stdout)
        assert doc["region_size"] == 53 - 27 + 1
        # below the target the only reaction moves away from it
        assert doc["violations"]
        assert all(v["state"][0] < 30 for v in doc["violations"])
