"""Command line: ``pinnhpo {train,hpo,sweep} [--config FILE] [--key value ...]``.

Every :class:`~pinnhpo.config.RunConfig` field is a flag; list-valued
fields take JSON (``--hp '[1e-3, 2, 64, "sin"]'``).  Flags override values
loaded with ``--config``.  Exit codes: 0 success (a diverged training is
still a success, flagged in the outputs), 1 usage or configuration error,
2 numerical fault.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import itertools
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import seeding
from .config import ConfigError, RunConfig
from .gp import GpFitError
from .hpo import run_hpo, write_hpo_outputs
from .loss import predict
from .net import TrainingFault, param_count
from .optimizer import architecture_for, fmt, train
from .sampling import level_size, make_collocation, points_per_dim, precision_of

log = logging.getLogger("pinnhpo")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _parse_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"expected JSON, got {text!r}") from exc


def _parse_optional_int(text: str):
    return None if text.lower() in ("none", "null", "") else int(text)


def _flag_type(f: dataclasses.Field):
    kind = str(f.type)
    if f.name == "level":
        return _parse_optional_int
    if kind.startswith("bool"):
        return _parse_bool
    if kind.startswith("int"):
        return int
    if kind.startswith("float"):
        return float
    if kind.startswith(("list", "dict")):
        return _parse_json
    return str


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pinnhpo", description="Train and tune PINNs for Helmholtz problems.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in (
        ("train", "train one network with a fixed configuration (--hp)"),
        ("hpo", "run a Bayesian hyper-parameter campaign"),
        ("sweep", "run one campaign per (omega, level) cell"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file with RunConfig fields")
        for f in dataclasses.fields(RunConfig):
            p.add_argument(f"--{f.name}", dest=f"cfg_{f.name}", metavar=f.name.upper(),
                           type=_flag_type(f), default=None)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config document must be a JSON object")
    for f in dataclasses.fields(RunConfig):
        value = getattr(args, f"cfg_{f.name}")
        if value is not None:
            data[f.name] = value
    return RunConfig.from_dict(data)


def _grid(d: int, n: int) -> np.ndarray:
    axes = [np.linspace(0.0, 1.0, n)] * d
    return np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)


def cmd_train(config: RunConfig) -> int:
    """Train once; write config, epoch log, result summary, solution grid and parameters."""
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    config.save(outdir / "config.json")

    spec = config.problem()
    hp = config.train_hp()
    sets = make_collocation(spec, seeding.stream(config.seed, seeding.SAMPLING),
                            r_train=config.r_train, r_test=config.r_test, level=config.level,
                            boundary_mode=config.boundary_mode)
    res = train(hp, spec, sets, config.K, seeding.stream(config.seed, seeding.INIT, 0),
                log_every=config.log_every, eps=config.eps)
    res.write_csv(outdir / "training_log.csv")

    logged = bool(res.epochs)
    summary = {
        "hyperparams": hp.to_dict(),
        "n_params": param_count(architecture_for(hp, spec)),
        "diverged": res.diverged,
        "best_epoch": res.best_epoch if logged else None,
        "loss_train": res.best_loss_train if logged else None,
        "loss_test": res.best_loss_test if logged else None,
        "metric": res.best_metric if logged else None,
        "n_train_domain": len(sets.train.domain),
        "n_train_boundary": len(sets.train.boundary),
        "n_test_domain": len(sets.test.domain),
        "wall_time_s": res.wall_time,
    }
    (outdir / "result.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (outdir / "params.bin").write_bytes(res.best_params.to_bytes())

    pts = _grid(spec.d, config.solution_grid)
    u_theta = predict(res.best_params, pts, spec)
    u_exact = spec.exact(pts)
    names = ["x", "y", "z"][:spec.d]
    with open(outdir / "solution.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + ["u_theta", "u_exact", "abs_error"])
        for p, a, b in zip(pts, u_theta, u_exact):
            writer.writerow([fmt(v) for v in p] + [fmt(a), fmt(b), fmt(abs(a - b))])
    log.info("train: metric %s, diverged %s -> %s", summary["metric"], res.diverged, outdir)
    return EXIT_OK


def cmd_hpo(config: RunConfig) -> int:
    result = run_hpo(config)
    write_hpo_outputs(result, config, config.output_dir)
    if result.best is not None:
        log.info("hpo: best iteration %d %s loss %.4g", result.best.iteration,
                 result.best.hp.as_list(), result.best.loss_test)
    return EXIT_OK


SWEEP_COLUMNS = ("omega", "level", "n_x", "r", "seed", "best_iteration", "best_loss_test",
                 "best_metric", "best_lambda", "n_params", "directory")


def cell_config(config: RunConfig, omega: int, level: int) -> RunConfig:
    """Campaign config of one sweep cell, with its seed derived from the base seed."""
    return config.replace(
        omega=int(omega), level=int(level),
        seed=seeding.cell_seed(config.seed, f"omega={omega}", f"level={level}"),
        output_dir=str(Path(config.output_dir) / f"omega{omega}_level{level}"),
    )


def cmd_sweep(config: RunConfig) -> int:
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    config.save(outdir / "config.json")
    rows = []
    for omega, level in itertools.product(config.omegas, config.levels):
        cell = cell_config(config, omega, level)
        result = run_hpo(cell)
        write_hpo_outputs(result, cell, cell.output_dir)
        n_x = level_size(level)[0]
        best = result.best
        rows.append([
            omega, level, n_x, f"{precision_of(n_x, omega):.1f}", cell.seed,
            best.iteration if best else "",
            fmt(best.loss_test) if best else "", fmt(best.metric) if best else "",
            json.dumps(best.hp.as_list()) if best else "", best.n_params if best else "",
            Path(cell.output_dir).name,
        ])
    with open(outdir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        writer.writerows(rows)
    return EXIT_OK


COMMANDS = {"train": cmd_train, "hpo": cmd_hpo, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors exit 1, --help exits 0
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
    except ConfigError as exc:
        print(f"pinnhpo: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](config)
    except (TrainingFault, GpFitError, FloatingPointError) as exc:
        print(f"pinnhpo: numerical fault: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
