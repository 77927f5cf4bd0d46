"""GP-based Bayesian hyper-parameter search around the PINN training loop.

Iteration 0 evaluates the initial configuration, the next ``n_random - 1``
iterations draw uniformly from the search space, and every later iteration
fits a GP to the encoded history and evaluates the candidate maximizing
expected improvement among ``n_candidates`` uniform draws in ``[0, 1]^D``.

The objective of a configuration is the test loss at the training
iterate with the lowest training loss.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.stats import norm

from . import gp, seeding
from .config import RunConfig
from .net import MlpParams, param_count
from .optimizer import architecture_for, fmt, train
from .sampling import make_collocation
from .space import HyperParams, SearchSpace, decode, encode

log = logging.getLogger(__name__)

# Diverged trials enter the surrogate with this multiple of the worst finite loss.
DIVERGED_PENALTY_FACTOR = 10.0
# Penalty used while no finite loss exists yet.
DIVERGED_PENALTY_FALLBACK = 1e10
# Floor applied before log10 so zero losses stay finite.
LOG_FLOOR = 1e-300


def expected_improvement(mu, sigma, best: float, xi: float = 0.01):
    """Expected improvement below ``best`` for a minimization problem.

    ``(best - mu - xi) Phi(z) + sigma phi(z)`` with ``z = (best - mu - xi) / sigma``,
    and ``max(best - mu - xi, 0)`` where ``sigma == 0``.
    """
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    improve = best - mu - xi
    with np.errstate(divide="ignore", invalid="ignore"):
        z = improve / sigma
        ei = improve * norm.cdf(z) + sigma * norm.pdf(z)
    ei = np.where(sigma > 0, ei, np.maximum(improve, 0.0))
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


def propose_next(
    model: gp.GpModel,
    history,
    space: SearchSpace,
    rng: np.random.Generator,
    *,
    n_candidates: int = 10_000,
    xi: float = 0.01,
) -> HyperParams:
    """Decode the uniform candidate with the largest expected improvement.

    ``history`` holds the surrogate targets seen so far; the incumbent is
    their minimum.  Ties go to the lowest candidate index.
    """
    best = float(np.min(history))
    candidates = rng.random((n_candidates, space.dim))
    mu, sigma = gp.predict(model, candidates)
    neg_ei = -expected_improvement(mu, sigma, best, xi)
    return decode(candidates[int(np.argmin(neg_ei))], space)


@dataclass
class TrialRecord:
    iteration: int
    hp: HyperParams
    encoded: np.ndarray
    loss_train: float
    loss_test: float
    metric: float | None
    n_params: int
    diverged: bool
    best_epoch: int
    wall_time: float
    source: str = "random"

    def row(self) -> dict:
        return {
            "iteration": self.iteration,
            "source": self.source,
            "lr": fmt(self.hp.lr),
            "depth": self.hp.depth,
            "width": self.hp.width,
            "activation": self.hp.activation,
            "w_gamma": fmt(self.hp.w_gamma),
            "loss_train": fmt(self.loss_train),
            "loss_test": fmt(self.loss_test),
            "metric": fmt(self.metric),
            "n_params": self.n_params,
            "diverged": int(self.diverged),
            "best_epoch": self.best_epoch,
            "wall_time_s": fmt(self.wall_time),
            "encoded": " ".join(fmt(v) for v in self.encoded),
        }


TRIAL_COLUMNS = tuple(TrialRecord(0, HyperParams(1, 1, 1), np.zeros(0), 0, 0, 0, 0, False, 0, 0).row())


@dataclass
class HpoResult:
    trials: list[TrialRecord]
    best_iteration: int | None
    best_so_far: list[float]
    space: SearchSpace
    best_params: MlpParams | None = None
    model: gp.GpModel | None = None
    gp_log: list[dict] = field(default_factory=list)

    @property
    def all_diverged(self) -> bool:
        return self.best_iteration is None

    @property
    def best(self) -> TrialRecord | None:
        return None if self.best_iteration is None else self.trials[self.best_iteration]


@dataclass
class TrialOutcome:
    loss_train: float
    loss_test: float
    metric: float | None
    n_params: int
    diverged: bool
    best_epoch: int
    wall_time: float
    params: MlpParams | None = None


Evaluator = Callable[[int, HyperParams], TrialOutcome]


def surrogate_targets(losses, diverged, log_targets: bool = True) -> np.ndarray:
    """GP targets: losses (log10 by default) with diverged entries replaced by a penalty.

    The penalty for a diverged trial is ``10 x`` the worst finite loss among
    the trials preceding it, or ``1e10`` if there is none.
    """
    out = []
    worst = None
    for loss, bad in zip(losses, diverged):
        if bad or not np.isfinite(loss):
            value = DIVERGED_PENALTY_FACTOR * worst if worst is not None else DIVERGED_PENALTY_FALLBACK
        else:
            value = float(loss)
            worst = value if worst is None else max(worst, value)
        out.append(math.log10(max(value, LOG_FLOOR)) if log_targets else value)
    return np.array(out)


def bayes_search(
    evaluate: Evaluator,
    space: SearchSpace,
    lambda0: HyperParams,
    M: int,
    seed: int,
    *,
    n_random: int = 10,
    strategy: str = "gp",
    log_targets: bool = True,
    kernel: str = "matern52",
    gp_restarts: int = 5,
    xi: float = 0.01,
    n_candidates: int = 10_000,
) -> HpoResult:
    """Run ``M`` evaluations; ``strategy="random"`` keeps drawing uniformly after iteration 0."""
    rng = seeding.stream(seed, seeding.SEARCH)
    trials: list[TrialRecord] = []
    best_so_far: list[float] = []
    best_iter, best_loss = None, np.inf
    best_params = None
    gp_log = []
    model = None

    for m in range(M):
        if m == 0:
            hp, source = lambda0, "initial"
        elif strategy == "random" or m < n_random:
            hp, source = space.sample(rng), "random"
        else:
            X = np.array([t.encoded for t in trials])
            y = surrogate_targets([t.loss_test for t in trials], [t.diverged for t in trials], log_targets)
            model = gp.fit(X, y, rng, kind=kernel, n_restarts=gp_restarts)
            gp_log.append({"iteration": m, **model.hyperparameters()})
            hp = propose_next(model, y, space, rng, n_candidates=n_candidates, xi=xi)
            source = "gp"

        out = evaluate(m, hp)
        loss_test = out.loss_test if not out.diverged else math.nan
        record = TrialRecord(
            m, hp, encode(hp, space),
            out.loss_train if not out.diverged else math.nan,
            loss_test,
            out.metric if not out.diverged else None,
            out.n_params, out.diverged, out.best_epoch, out.wall_time, source,
        )
        trials.append(record)
        if not out.diverged and np.isfinite(loss_test) and loss_test < best_loss:
            best_loss, best_iter, best_params = loss_test, m, out.params
        best_so_far.append(best_loss)
        log.info("iteration %d (%s): %s -> loss %.4g (best %.4g)", m, source, hp.as_list(), loss_test, best_loss)

    if best_iter is None:
        log.warning("every trial diverged; no best configuration")
    return HpoResult(trials, best_iter, best_so_far, space, best_params, model, gp_log)


def pinn_evaluator(config: RunConfig) -> Evaluator:
    """Train one PINN per configuration on a campaign-wide collocation set.

    Trial ``m`` initializes its network from the stream ``(seed, INIT, m)``.
    """
    spec = config.problem()
    sets = make_collocation(
        spec, seeding.stream(config.seed, seeding.SAMPLING),
        r_train=config.r_train, r_test=config.r_test, level=config.level,
        boundary_mode=config.boundary_mode,
    )

    def evaluate(m: int, hp: HyperParams) -> TrialOutcome:
        res = train(hp, spec, sets, config.K, seeding.stream(config.seed, seeding.INIT, m),
                    log_every=config.log_every, eps=config.eps)
        n_params = param_count(architecture_for(hp, spec))
        if not res.epochs:
            return TrialOutcome(math.nan, math.nan, None, n_params, True, 0, res.wall_time)
        return TrialOutcome(res.best_loss_train, res.best_loss_test, res.best_metric, n_params,
                            res.diverged, res.best_epoch, res.wall_time, res.best_params)

    return evaluate


def run_hpo(config: RunConfig) -> HpoResult:
    """Full campaign described by ``config`` (case, omega, sampling, K, M, seed, ...)."""
    space = config.search_space()
    lambda0 = HyperParams.from_list(config.initial_lambda())
    result = bayes_search(
        pinn_evaluator(config), space, lambda0, config.M, config.seed,
        n_random=config.n_random, strategy=config.strategy, log_targets=config.log_targets,
        kernel=config.kernel, gp_restarts=config.gp_restarts, xi=config.xi,
        n_candidates=config.n_candidates,
    )
    return result


def fit_final_model(result: HpoResult, seed: int, *, log_targets: bool = True,
                    kernel: str = "matern52", gp_restarts: int = 5) -> gp.GpModel | None:
    """Surrogate fitted on every trial of a finished campaign (``None`` if fewer than 2)."""
    if len(result.trials) < 2:
        return None
    X = np.array([t.encoded for t in result.trials])
    y = surrogate_targets([t.loss_test for t in result.trials], [t.diverged for t in result.trials], log_targets)
    return gp.fit(X, y, seeding.stream(seed, seeding.PDP, 0), kind=kernel, n_restarts=gp_restarts)


PDP_DIMS = ("lr", "depth", "width", "activation", "w_gamma")


def partial_dependence(
    model: gp.GpModel,
    space: SearchSpace,
    dim: str,
    grid_size: int = 20,
    *,
    n_avg: int = 250,
    rng: np.random.Generator | None = None,
) -> list[tuple]:
    """Surrogate mean along one hyper-parameter, averaged over the others.

    The other coordinates come from ``n_avg`` encodings of uniform draws
    from ``space``.  Numeric dimensions yield ``grid_size`` rows of
    ``(value, mean)`` on an evenly spaced grid in encoded units (so
    log-scaled dimensions are log-spaced); the activation yields one row
    per activation.
    """
    if dim not in PDP_DIMS or (dim == "w_gamma" and not space.w_gamma):
        raise ValueError(f"unknown dimension {dim!r} for this space")
    rng = rng if rng is not None else seeding.stream(0, seeding.PDP, 1)
    base = np.array([encode(space.sample(rng), space) for _ in range(n_avg)])
    n_act = len(space.activations)

    if dim == "activation":
        rows = []
        for j, name in enumerate(space.activations):
            pts = base.copy()
            pts[:, 3:3 + n_act] = 0.0
            pts[:, 3 + j] = 1.0
            rows.append((name, float(np.mean(gp.predict(model, pts)[0]))))
        return rows

    col = {"lr": 0, "depth": 1, "width": 2, "w_gamma": 3 + n_act}[dim]
    bounds = getattr(space, dim)
    rows = []
    for t in np.linspace(0.0, 1.0, grid_size):
        pts = base.copy()
        pts[:, col] = t
        if dim in ("lr", "w_gamma"):
            lo, hi = math.log10(bounds[0]), math.log10(bounds[1])
            value = 10.0 ** (lo + t * (hi - lo))
        else:
            value = bounds[0] + t * (bounds[1] - bounds[0])
        rows.append((float(value), float(np.mean(gp.predict(model, pts)[0]))))
    return rows


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_hpo_outputs(result: HpoResult, config: RunConfig, outdir) -> Path:
    """Write the campaign directory.

    Files: ``config.json``, ``trials.csv``, ``best.json``, ``best_params.bin``,
    ``losses_sorted.csv``, ``best_so_far.csv``, ``gp_log.json`` and one
    ``pdp_<dim>.csv`` per hyper-parameter.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    config.save(outdir / "config.json")

    _write_csv(outdir / "trials.csv", TRIAL_COLUMNS, [list(t.row().values()) for t in result.trials])

    best = result.best
    summary = {"all_diverged": result.all_diverged, "n_trials": len(result.trials)}
    if best is not None:
        summary.update({
            "iteration": best.iteration,
            "lambda": best.hp.as_list(),
            "hyperparams": best.hp.to_dict(),
            "loss_train": best.loss_train,
            "loss_test": best.loss_test,
            "metric": best.metric,
            "n_params": best.n_params,
        })
    (outdir / "best.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if result.best_params is not None:
        (outdir / "best_params.bin").write_bytes(result.best_params.to_bytes())

    ranked = sorted(
        (t for t in result.trials if not t.diverged),
        key=lambda t: (t.loss_test, t.iteration),
    )
    _write_csv(outdir / "losses_sorted.csv", ("rank", "iteration", "loss_train", "loss_test", "metric"),
               [[i, t.iteration, fmt(t.loss_train), fmt(t.loss_test), fmt(t.metric)] for i, t in enumerate(ranked)])

    rows = []
    for t, best_loss in zip(result.trials, result.best_so_far):
        best_t = min((u for u in result.trials[:t.iteration + 1] if not u.diverged and np.isfinite(u.loss_test)),
                     key=lambda u: (u.loss_test, u.iteration), default=None)
        rows.append([t.iteration, fmt(best_loss if np.isfinite(best_loss) else None),
                     fmt(best_t.loss_train if best_t else None), fmt(best_t.metric if best_t else None)])
    _write_csv(outdir / "best_so_far.csv", ("iteration", "best_loss_test", "best_loss_train", "best_metric"), rows)

    (outdir / "gp_log.json").write_text(json.dumps(result.gp_log, indent=2) + "\n")

    model = fit_final_model(result, config.seed, log_targets=config.log_targets,
                            kernel=config.kernel, gp_restarts=config.gp_restarts)
    if model is not None:
        target = "mean_log10_loss" if config.log_targets else "mean_loss"
        dims = [d for d in PDP_DIMS if d != "w_gamma" or result.space.w_gamma]
        for k, dim in enumerate(dims):
            rows = partial_dependence(model, result.space, dim, config.pdp_grid, n_avg=config.pdp_samples,
                                      rng=seeding.stream(config.seed, seeding.PDP, 1, k))
            _write_csv(outdir / f"pdp_{dim}.csv", (dim, target),
                       [[v if isinstance(v, str) else fmt(v), fmt(mu)] for v, mu in rows])
    return outdir
