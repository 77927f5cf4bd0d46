"""ADAM and the full-batch training loop with best-iterate tracking."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import net
from .loss import LossWeights, composite_loss, loss_and_gradient, relative_l2_metric
from .net import Architecture, MlpParams, TrainingFault
from .problem import ProblemSpec
from .sampling import CollocationSet
from .space import HyperParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdamState:
    k: int
    m: np.ndarray
    v: np.ndarray
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7

    @classmethod
    def zeros(cls, n: int, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-7) -> "AdamState":
        return cls(0, np.zeros(n), np.zeros(n), lr, beta1, beta2, eps)


def adam_step(state: AdamState, params: np.ndarray, gradient: np.ndarray) -> tuple[AdamState, np.ndarray]:
    """One ADAM update; returns new state and new parameters, inputs untouched.

    ``params`` and ``gradient`` are flat arrays (or :class:`MlpParams`, in
    which case an :class:`MlpParams` is returned).
    """
    wrapped = isinstance(params, MlpParams)
    theta = params.theta if wrapped else np.asarray(params, dtype=np.float64)
    g = gradient.theta if isinstance(gradient, MlpParams) else np.asarray(gradient, dtype=np.float64)
    if g.shape != theta.shape or state.m.shape != theta.shape:
        raise ValueError(f"shape mismatch: params {theta.shape}, gradient {g.shape}, moments {state.m.shape}")
    if not np.all(np.isfinite(g)):
        raise TrainingFault("non-finite gradient passed to adam_step")

    b1, b2 = state.beta1, state.beta2
    t = state.k + 1
    m = b1 * state.m + (1.0 - b1) * g
    v = b2 * state.v + (1.0 - b2) * (g * g)
    # same operation order as the textbook update, fewer temporaries
    step = m / (1.0 - b1**t)
    denom = v / (1.0 - b2**t)
    np.sqrt(denom, out=denom)
    denom += state.eps
    step *= state.lr
    step /= denom
    new_theta = theta - step

    new_state = replace(state, k=t, m=m, v=v)
    if wrapped:
        return new_state, MlpParams(params.arch, new_theta)
    return new_state, new_theta


LOG_COLUMNS = ("epoch", "loss_train", "loss_test", "pde", "bc", "data", "metric", "elapsed_s")


@dataclass
class TrainResult:
    """Outcome of one training run.

    Curves hold one entry per logged epoch.  ``best_params`` is the iterate
    with the lowest logged training loss.
    """

    best_params: MlpParams
    best_epoch: int
    epochs: list = field(default_factory=list)
    loss_train: list = field(default_factory=list)
    loss_test: list = field(default_factory=list)
    pde: list = field(default_factory=list)
    bc: list = field(default_factory=list)
    data: list = field(default_factory=list)
    metric: list = field(default_factory=list)
    elapsed: list = field(default_factory=list)
    diverged: bool = False
    wall_time: float = 0.0

    def _at_best(self, curve):
        if self.best_epoch not in self.epochs:
            return float("nan")
        return curve[self.epochs.index(self.best_epoch)]

    @property
    def best_loss_train(self) -> float:
        return self._at_best(self.loss_train)

    @property
    def best_loss_test(self) -> float:
        return self._at_best(self.loss_test)

    @property
    def best_metric(self) -> float | None:
        return self._at_best(self.metric)

    def write_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(LOG_COLUMNS)
            rows = zip(self.epochs, self.loss_train, self.loss_test, self.pde, self.bc,
                       self.data, self.metric, self.elapsed)
            for row in rows:
                writer.writerow([row[0]] + [fmt(v) for v in row[1:]])


def fmt(value) -> str:
    """Round-trippable float text (17 significant digits); empty for ``None``."""
    if value is None:
        return ""
    return format(float(value), ".17g")


def architecture_for(hp: HyperParams, spec: ProblemSpec) -> Architecture:
    return Architecture.constant(spec.d, hp.depth, hp.width, hp.activation)


def weights_for(hp: HyperParams) -> LossWeights:
    return LossWeights(boundary=hp.w_gamma if hp.w_gamma is not None else 1.0)


def train(
    hp: HyperParams,
    spec: ProblemSpec,
    sets: CollocationSet,
    K: int,
    rng: np.random.Generator,
    *,
    log_every: int = 100,
    eps: float = 1e-7,
    beta1: float = 0.9,
    beta2: float = 0.999,
) -> TrainResult:
    """Full-batch ADAM for ``K`` epochs from a Glorot initialization drawn from ``rng``.

    Losses are logged at epoch 0, every ``log_every`` epochs and at epoch
    ``K``; the returned best iterate is the argmin of the training loss over
    the logged epochs.  A non-finite loss or gradient stops the run with
    ``diverged=True`` and keeps the best iterate found so far.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if log_every < 1:
        raise ValueError(f"log_every must be >= 1, got {log_every}")

    weights = weights_for(hp)
    params = net.glorot_init(architecture_for(hp, spec), rng)
    state = AdamState.zeros(len(params), hp.lr, beta1, beta2, eps)
    test_sets = sets.test
    test_is_train = sets.test is sets.train

    result = TrainResult(best_params=params.copy(), best_epoch=0)
    best_train = np.inf
    start = time.perf_counter()

    def record(epoch, train_bd, current):
        nonlocal best_train
        if test_is_train:
            test_total = train_bd.total
        else:
            test_total = composite_loss(current, test_sets, weights, spec).total
        metric = None
        if spec.exact is not None and len(test_sets.domain):
            metric = relative_l2_metric(current, test_sets.domain, spec.exact, spec)
        result.epochs.append(epoch)
        result.loss_train.append(train_bd.total)
        result.loss_test.append(test_total)
        result.pde.append(train_bd.pde)
        result.bc.append(train_bd.bc)
        result.data.append(train_bd.data)
        result.metric.append(metric)
        result.elapsed.append(time.perf_counter() - start)
        if train_bd.total < best_train:
            best_train = train_bd.total
            result.best_params = current.copy()
            result.best_epoch = epoch

    with np.errstate(over="ignore", invalid="ignore"):
        try:
            for k in range(K):
                breakdown, grad = loss_and_gradient(params, sets.train, weights, spec)
                if k % log_every == 0:
                    record(k, breakdown, params)
                state, params = adam_step(state, params, grad)
            final = composite_loss(params, sets.train, weights, spec)
            if not np.isfinite(final.total):
                raise TrainingFault(f"non-finite loss {final.total} at epoch {K}")
            record(K, final, params)
        except (TrainingFault, FloatingPointError) as exc:
            log.warning("training diverged: %s", exc)
            result.diverged = True

    result.wall_time = time.perf_counter() - start
    return result
