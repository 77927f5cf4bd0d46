import csv
import json
import subprocess
import sys

import pytest

from pinnhpo import seeding
from pinnhpo.cli import SWEEP_COLUMNS, cell_config, main
from pinnhpo.config import ConfigError, RunConfig
from pinnhpo.net import MlpParams

TIMING = {"elapsed_s", "wall_time_s"}
SMALL_HPO = ["--omega", "1", "--K", "5", "--M", "3", "--n_random", "2", "--n_candidates", "100",
             "--gp_restarts", "1", "--space", '{"width": [5, 12], "depth": [1, 2]}',
             "--lambda0", '[1e-3, 1, 8, "tanh"]', "--pdp_samples", "10", "--pdp_grid", "3"]


def read_rows(path, drop=TIMING):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: v for k, v in r.items() if k not in drop} for r in rows]


def train_args(outdir, *extra):
    return ["train", "--case", "dirichlet2d", "--omega", "1", "--K", "30", "--log_every", "10",
            "--hp", '[1e-3, 1, 8, "sin"]', "--solution_grid", "5", "--output_dir", str(outdir), *extra]


class TestConfig:
    def test_missing_case(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"omega": 1}))
        assert main(["train", "--config", str(cfg)]) == 1
        assert "case" in capsys.readouterr().err

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"case": "dirichlet2d", "colour": "red"})

    def test_invalid_values(self, tmp_path):
        assert main(["train", "--case", "helmholtz9d"]) == 1
        assert main(["train", "--case", "dirichlet2d", "--K", "0"]) == 1
        assert main(["hpo", "--case", "dirichlet2d", "--lambda0", '[1.0, 2, 10, "sin"]']) == 1
        assert main(["train", "--case", "dirichlet2d", "--hp", "not json"]) == 1
        assert main(["frobnicate"]) == 1

    def test_round_trip(self, tmp_path):
        cfg = RunConfig(case="neumann3d", omega=2, space={"depth": [1, 10]}, lambda0=[1e-3, 3, 275, "sin", 400.0])
        cfg.save(tmp_path / "c.json")
        assert RunConfig.load(tmp_path / "c.json") == cfg

    def test_flags_override_file(self, tmp_path):
        from pinnhpo.cli import build_parser, resolve_config
        (tmp_path / "c.json").write_text(json.dumps({"case": "dirichlet2d", "K": 7, "omega": 2}))
        args = build_parser().parse_args(["train", "--config", str(tmp_path / "c.json"), "--K", "9"])
        cfg = resolve_config(args)
        assert (cfg.K, cfg.omega) == (9, 2)


class TestTrain:
    def test_smoke_writes_files(self, tmp_path):
        out = tmp_path / "run"
        assert main(train_args(out)) == 0
        for name in ("config.json", "training_log.csv", "result.json", "params.bin", "solution.csv"):
            assert (out / name).exists(), name
        result = json.loads((out / "result.json").read_text())
        assert result["n_params"] == 33 and result["diverged"] is False
        assert result["n_train_domain"] == 100 and result["n_test_domain"] == 900
        log = read_rows(out / "training_log.csv")
        assert [int(r["epoch"]) for r in log] == [0, 10, 20, 30]
        sol = read_rows(out / "solution.csv")
        assert len(sol) == 25 and list(sol[0]) == ["x", "y", "u_theta", "u_exact", "abs_error"]
        assert float(sol[0]["u_theta"]) == 0.0  # corner of the square under the multiplier
        params = MlpParams.from_bytes((out / "params.bin").read_bytes())
        assert params.arch.hidden_widths == (8,)
        resolved = json.loads((out / "config.json").read_text())
        assert resolved["seed"] == 11 and resolved["eps"] == 1e-7

    def test_same_seed_identical_outputs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(train_args(a)) == 0
        assert main(["train", "--config", str(a / "config.json"), "--output_dir", str(b)]) == 0
        assert read_rows(a / "training_log.csv") == read_rows(b / "training_log.csv")
        assert (a / "solution.csv").read_bytes() == (b / "solution.csv").read_bytes()
        assert (a / "params.bin").read_bytes() == (b / "params.bin").read_bytes()
        ra, rb = (json.loads((d / "result.json").read_text()) for d in (a, b))
        ra.pop("wall_time_s"), rb.pop("wall_time_s")
        assert ra == rb

    def test_neumann(self, tmp_path):
        out = tmp_path / "n"
        assert main(["train", "--case", "neumann3d", "--K", "3", "--hp", '[1e-3, 1, 6, "tanh", 10.0]',
                     "--solution_grid", "3", "--output_dir", str(out)]) == 0
        assert list(read_rows(out / "solution.csv")[0])[:3] == ["x", "y", "z"]
        assert json.loads((out / "result.json").read_text())["n_train_boundary"] == 1200

    def test_divergence_exits_zero(self, tmp_path):
        out = tmp_path / "d"
        code = main(["train", "--case", "dirichlet2d", "--hard_constraint", "none", "--K", "50",
                     "--hp", '[1e200, 1, 4, "sin"]', "--solution_grid", "3", "--output_dir", str(out)])
        assert code == 0
        assert json.loads((out / "result.json").read_text())["diverged"] is True

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "pinnhpo", "train"], capture_output=True, text=True)
        assert proc.returncode == 1


class TestHpo:
    def test_single_iteration(self, tmp_path):
        out = tmp_path / "h"
        args = ["hpo", "--case", "dirichlet2d", "--output_dir", str(out)] + SMALL_HPO
        args[args.index("--M") + 1] = "1"
        assert main(args) == 0
        rows = read_rows(out / "trials.csv")
        assert len(rows) == 1 and rows[0]["source"] == "initial"

    def test_outputs(self, tmp_path):
        out = tmp_path / "h"
        assert main(["hpo", "--case", "dirichlet2d", "--output_dir", str(out)] + SMALL_HPO) == 0
        rows = read_rows(out / "trials.csv")
        assert len(rows) == 3
        best = json.loads((out / "best.json").read_text())
        assert best["loss_test"] == min(float(r["loss_test"]) for r in rows)
        curve = [float(r["best_loss_test"]) for r in read_rows(out / "best_so_far.csv")]
        assert curve == sorted(curve, reverse=True)
        ranked = [float(r["loss_test"]) for r in read_rows(out / "losses_sorted.csv")]
        assert ranked == sorted(ranked)
        assert len(read_rows(out / "pdp_width.csv")) == 3
        assert len(read_rows(out / "pdp_activation.csv")) == 3


class TestSweep:
    def test_one_by_one_matches_hpo(self, tmp_path):
        sweep_dir, hpo_dir = tmp_path / "s", tmp_path / "h"
        assert main(["sweep", "--case", "dirichlet2d", "--omegas", "[2]", "--levels", "[1]",
                     "--output_dir", str(sweep_dir)] + SMALL_HPO[2:]) == 0
        summary = read_rows(sweep_dir / "summary.csv")
        assert len(summary) == 1 and list(summary[0]) == list(SWEEP_COLUMNS)
        assert summary[0]["r"] == "5.0"
        seed = seeding.cell_seed(11, "omega=2", "level=1")
        assert int(summary[0]["seed"]) == seed

        cell = cell_config(RunConfig(case="dirichlet2d"), 2, 1)
        assert cell.seed == seed and cell.level == 1
        args = ["hpo", "--case", "dirichlet2d", "--omega", "2", "--level", "1", "--seed", str(seed),
                "--output_dir", str(hpo_dir)] + SMALL_HPO[2:]
        assert main(args) == 0
        cell_dir = sweep_dir / "omega2_level1"
        assert read_rows(cell_dir / "trials.csv") == read_rows(hpo_dir / "trials.csv")
        for name in ("best.json", "best_params.bin", "pdp_lr.csv"):
            assert (cell_dir / name).read_bytes() == (hpo_dir / name).read_bytes()

    def test_cell_seeds_differ(self):
        base = RunConfig(case="dirichlet2d")
        seeds = {cell_config(base, w, l).seed for w in (2, 4, 6) for l in (1, 3, 5)}
        assert len(seeds) == 9
