"""Weighted composite PINN loss, its parameter gradient and the error metric.

Every term is a mean of squared residuals over a point set.  Reductions use
``np.mean`` over the point axis in the order the points are stored.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import net
from .net import InputJet, MlpParams
from .problem import (
    ProblemSpec,
    dirichlet_residual,
    hard_transform,
    hard_transform_adjoint,
    helmholtz_residual,
    neumann_residual,
)
from .sampling import BoundarySet, Observations, PointSets

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LossWeights:
    domain: float = 1.0
    boundary: float = 1.0
    data: float = 1.0

    def __post_init__(self):
        if min(self.domain, self.boundary, self.data) <= 0:
            raise ValueError(f"loss weights must be positive, got {self}")


@dataclass(frozen=True)
class LossBreakdown:
    pde: float
    bc: float
    data: float
    total: float
    empty: tuple[str, ...] = ()


def predict(params: MlpParams, x, spec: ProblemSpec) -> np.ndarray:
    """Model output at ``x``, including the hard-constraint multiplier if enabled."""
    u = net.forward(params, x)
    if spec.hard_constraint:
        u = hard_transform(np.asarray(x), u, spec.hard_constraint)
    return u


def _pde_head(x, spec: ProblemSpec):
    n = len(x)
    f = spec.source(x)
    kappa2 = spec.kappa**2

    def head(raw: InputJet):
        jet = hard_transform(x, raw, spec.hard_constraint) if spec.hard_constraint else raw
        res = helmholtz_residual(jet, spec.kappa, f)
        g = 2.0 * res / n
        cot = InputJet(-kappa2 * g, None, np.repeat(-g[:, None], spec.d, axis=1))
        if spec.hard_constraint:
            cot = hard_transform_adjoint(x, cot, spec.hard_constraint)
        return float(np.mean(res * res)), cot

    return head


def _bc_head(boundary: BoundarySet, spec: ProblemSpec):
    n = len(boundary)
    g_data = spec.boundary_data(boundary.points)
    if spec.bc_kind == "neumann":
        def head(jet: InputJet):
            res = neumann_residual(jet, boundary.normals, g_data)
            return float(np.mean(res * res)), InputJet(np.zeros(n), (2.0 * res / n)[:, None] * boundary.normals)
        return head, 1

    def head(jet: InputJet):
        res = dirichlet_residual(jet.value, g_data)
        return float(np.mean(res * res)), InputJet(2.0 * res / n)
    return head, 0


def _data_head(obs: Observations, spec: ProblemSpec | None):
    n = len(obs)
    hard = spec.hard_constraint if spec is not None else None

    def head(jet: InputJet):
        u = hard_transform(obs.points, jet.value, hard) if hard else jet.value
        res = u - obs.values
        cot = InputJet(2.0 * res / n)
        if hard:
            cot = hard_transform_adjoint(obs.points, cot, hard)
        return float(np.mean(res * res)), cot

    return head


def _empty_warning(term: str) -> None:
    log.warning("empty point set for the %s loss term; term set to 0", term)


def pde_loss(params: MlpParams, points: np.ndarray, spec: ProblemSpec) -> float:
    """Mean squared Helmholtz residual over domain points."""
    if len(points) == 0:
        _empty_warning("pde")
        return 0.0
    jet, _ = net.jet_forward(params, points, 2)
    return _pde_head(points, spec)(jet)[0]


def bc_loss(params: MlpParams, boundary: BoundarySet, spec: ProblemSpec) -> float:
    """Mean squared boundary residual; identically 0 under a hard constraint."""
    if not spec.has_boundary_term:
        return 0.0
    if len(boundary) == 0:
        _empty_warning("bc")
        return 0.0
    head, order = _bc_head(boundary, spec)
    jet, _ = net.jet_forward(params, boundary.points, order)
    return head(jet)[0]


def data_loss(params: MlpParams, observations: Observations, spec: ProblemSpec | None = None) -> float:
    """Mean squared misfit to labeled observations; 0 when there are none."""
    if len(observations) == 0:
        return 0.0
    jet, _ = net.jet_forward(params, observations.points, 0)
    return _data_head(observations, spec)(jet)[0]


def _terms(sets: PointSets, spec: ProblemSpec):
    """``(name, points, head, order)`` for every non-empty term."""
    terms, empty = [], []
    if len(sets.domain):
        terms.append(("pde", sets.domain, _pde_head(sets.domain, spec), 2))
    else:
        empty.append("pde")
    if spec.has_boundary_term:
        if len(sets.boundary):
            head, order = _bc_head(sets.boundary, spec)
            terms.append(("bc", sets.boundary.points, head, order))
        else:
            empty.append("bc")
    if len(sets.observations):
        terms.append(("data", sets.observations.points, _data_head(sets.observations, spec), 0))
    for name in empty:
        _empty_warning(name)
    return terms, tuple(empty)


def _weight(weights: LossWeights, name: str) -> float:
    return {"pde": weights.domain, "bc": weights.boundary, "data": weights.data}[name]


def _breakdown(values: dict, weights: LossWeights, empty) -> LossBreakdown:
    pde, bc, data = values.get("pde", 0.0), values.get("bc", 0.0), values.get("data", 0.0)
    total = weights.domain * pde + weights.boundary * bc + weights.data * data
    return LossBreakdown(pde, bc, data, total, empty)


def composite_loss(params: MlpParams, sets: PointSets, weights: LossWeights, spec: ProblemSpec) -> LossBreakdown:
    terms, empty = _terms(sets, spec)
    values = {}
    for name, pts, head, order in terms:
        jet, _ = net.jet_forward(params, pts, order)
        values[name] = head(jet)[0]
    return _breakdown(values, weights, empty)


def loss_and_gradient(
    params: MlpParams, sets: PointSets, weights: LossWeights, spec: ProblemSpec
) -> tuple[LossBreakdown, MlpParams]:
    """Loss breakdown and gradient of the weighted total in one pass.

    Raises :class:`~pinnhpo.net.TrainingFault` on non-finite values.
    """
    terms, empty = _terms(sets, spec)
    values = {}
    grad = MlpParams.zeros(params.arch)
    for name, pts, head, order in terms:
        values[name], g = net.param_gradient(params, pts, head, order)
        grad.theta += _weight(weights, name) * g.theta
    return _breakdown(values, weights, empty), grad


def composite_loss_gradient(params: MlpParams, sets: PointSets, weights: LossWeights, spec: ProblemSpec) -> MlpParams:
    return loss_and_gradient(params, sets, weights, spec)[1]


def relative_l2_metric(params: MlpParams, test_points: np.ndarray, exact_u, spec: ProblemSpec | None = None) -> float:
    """``||u_theta - u||_2 / ||u||_2`` over the test points.

    ``exact_u`` is a callable on points or an array of exact values.
    """
    u = exact_u(test_points) if callable(exact_u) else np.asarray(exact_u, dtype=np.float64)
    norm = np.linalg.norm(u)
    if norm == 0.0:
        raise ValueError("exact solution vanishes on the test points; relative error undefined")
    if isinstance(params, MlpParams):
        u_theta = predict(params, test_points, spec) if spec is not None else net.forward(params, test_points)
    else:
        u_theta = np.asarray(params, dtype=np.float64)
    return float(np.linalg.norm(u_theta - u) / norm)
