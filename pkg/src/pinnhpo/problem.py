"""Helmholtz boundary-value problems on the unit square and cube.

The operator is ``N[u] = -lap(u) - kappa^2 u`` with ``kappa = 2 pi omega``.
Boundary operators are the trace (Dirichlet) or the outward normal
derivative (Neumann).  All residual functions are vectorized over points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .net import InputJet

BC_KINDS = ("dirichlet", "neumann")
CASES = ("dirichlet2d", "neumann3d")

# "vanishing": x(1-x)y(1-y), zero on the whole boundary (default).
# "paper": (1-x^2)(1-y^2), zero only on the faces x=1 and y=1.
MULTIPLIERS = ("vanishing", "paper")

PointFn = Callable[[np.ndarray], np.ndarray]


def _zero(x: np.ndarray) -> np.ndarray:
    return np.zeros(np.atleast_2d(x).shape[0])


@dataclass(frozen=True)
class ProblemSpec:
    """A Helmholtz problem on ``[0, 1]^d``.

    ``hard_constraint`` names the boundary multiplier applied to the network
    output, or ``None``.  With a hard constraint the Dirichlet boundary term
    is dropped from the loss.
    """

    d: int
    omega: int
    bc_kind: str
    source: PointFn
    exact: PointFn | None = None
    exact_jet: Callable[[np.ndarray], InputJet] | None = None
    boundary_data: PointFn = _zero
    hard_constraint: str | None = None
    name: str = ""

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"d must be 2 or 3, got {self.d}")
        if int(self.omega) != self.omega or self.omega < 1:
            raise ValueError(f"omega must be a positive integer, got {self.omega}")
        if self.bc_kind not in BC_KINDS:
            raise ValueError(f"bc_kind must be one of {BC_KINDS}, got {self.bc_kind!r}")
        if self.hard_constraint is not None:
            if self.bc_kind != "dirichlet":
                raise ValueError("hard constraints are only supported for Dirichlet problems")
            if self.hard_constraint not in MULTIPLIERS:
                raise ValueError(f"hard_constraint must be one of {MULTIPLIERS} or None")

    @property
    def kappa(self) -> float:
        return 2.0 * np.pi * self.omega

    @property
    def has_boundary_term(self) -> bool:
        return self.hard_constraint is None


def helmholtz_residual(jet: InputJet, kappa: float, f_at_x) -> np.ndarray:
    """``-sum_i d2u/dx_i^2 - kappa^2 u - f``."""
    return -np.sum(jet.second, axis=-1) - kappa**2 * jet.value - f_at_x


def dirichlet_residual(u_value, g_at_x):
    return np.subtract(u_value, g_at_x)


def neumann_residual(jet: InputJet, normal, g_at_x) -> np.ndarray:
    """``grad(u) . n - g``; ``normal`` must have unit Euclidean norm."""
    normal = np.asarray(normal, dtype=np.float64)
    if not np.allclose(np.linalg.norm(normal, axis=-1), 1.0, rtol=0.0, atol=1e-12):
        raise ValueError("boundary normals must have unit norm")
    return np.sum(jet.first * normal, axis=-1) - g_at_x


def multiplier_jet(x, kind: str = "vanishing") -> InputJet:
    """Value, first and pure second partials of a boundary multiplier."""
    x = np.asarray(x, dtype=np.float64)
    if kind == "vanishing":
        f, f1, f2 = x * (1.0 - x), 1.0 - 2.0 * x, np.full_like(x, -2.0)
    elif kind == "paper":
        f, f1, f2 = 1.0 - x * x, -2.0 * x, np.full_like(x, -2.0)
    else:
        raise ValueError(f"unknown multiplier {kind!r}, expected one of {MULTIPLIERS}")
    value = np.prod(f, axis=-1)
    d = x.shape[-1]
    first = np.empty_like(x)
    second = np.empty_like(x)
    for i in range(d):
        others = np.prod(np.delete(f, i, axis=-1), axis=-1)
        first[..., i] = f1[..., i] * others
        second[..., i] = f2[..., i] * others
    return InputJet(value, first, second)


def hard_transform(x, u_raw, kind: str = "vanishing"):
    """Multiply the raw output by the boundary multiplier ``l(x)``.

    ``u_raw`` may be an array of values or an :class:`InputJet`; for a jet
    the product rule is applied so the transformed partials are exact.
    """
    ell = multiplier_jet(x, kind)
    if not isinstance(u_raw, InputJet):
        return ell.value * np.asarray(u_raw)
    out = InputJet(ell.value * u_raw.value)
    lv = ell.value[..., None]
    if u_raw.first is not None:
        out.first = ell.first * u_raw.value[..., None] + lv * u_raw.first
    if u_raw.second is not None:
        out.second = (
            ell.second * u_raw.value[..., None]
            + 2.0 * ell.first * u_raw.first
            + lv * u_raw.second
        )
    return out


def hard_transform_adjoint(x, cotangent: InputJet, kind: str = "vanishing") -> InputJet:
    """Pull a cotangent on the transformed jet back to the raw jet."""
    ell = multiplier_jet(x, kind)
    lv = ell.value[..., None]
    value = ell.value * cotangent.value
    first = second = None
    if cotangent.first is not None or cotangent.second is not None:
        gf = cotangent.first if cotangent.first is not None else 0.0
        gs = cotangent.second if cotangent.second is not None else 0.0
        value = value + np.sum(ell.first * gf + ell.second * gs, axis=-1)
        first = lv * gf + 2.0 * ell.first * gs
        if cotangent.second is not None:
            second = lv * gs
    return InputJet(value, first, second)


def manufactured(
    case: str,
    omega: int,
    *,
    hard_constraint: str | None = "vanishing",
    paper_source: bool = False,
) -> ProblemSpec:
    """Manufactured-solution problems.

    ``dirichlet2d``: ``u = sin(k x) sin(k y)``, ``f = k^2 u``, homogeneous
    Dirichlet data.  ``neumann3d``: ``u = cos(k x) cos(k y)`` on the cube
    with homogeneous Neumann data and ``f = k^2 u``; ``paper_source=True``
    selects ``f = 2 k^2 u`` instead, which does not match ``u``.
    """
    kappa = 2.0 * np.pi * omega
    if case == "dirichlet2d":
        def exact(x):
            x = np.atleast_2d(x)
            return np.sin(kappa * x[:, 0]) * np.sin(kappa * x[:, 1])

        def exact_jet(x):
            x = np.atleast_2d(x)
            sx, sy = np.sin(kappa * x[:, 0]), np.sin(kappa * x[:, 1])
            cx, cy = np.cos(kappa * x[:, 0]), np.cos(kappa * x[:, 1])
            u = sx * sy
            first = kappa * np.stack((cx * sy, sx * cy), axis=1)
            second = -kappa**2 * np.stack((u, u), axis=1)
            return InputJet(u, first, second)

        def source(x):
            return kappa**2 * exact(x)

        return ProblemSpec(2, omega, "dirichlet", source, exact, exact_jet,
                           hard_constraint=hard_constraint, name=case)

    if case == "neumann3d":
        factor = 2.0 * kappa**2 if paper_source else kappa**2

        def exact(x):
            x = np.atleast_2d(x)
            return np.cos(kappa * x[:, 0]) * np.cos(kappa * x[:, 1])

        def exact_jet(x):
            x = np.atleast_2d(x)
            sx, sy = np.sin(kappa * x[:, 0]), np.sin(kappa * x[:, 1])
            cx, cy = np.cos(kappa * x[:, 0]), np.cos(kappa * x[:, 1])
            u = cx * cy
            zero = np.zeros_like(u)
            first = -kappa * np.stack((sx * cy, cx * sy, zero), axis=1)
            second = -kappa**2 * np.stack((u, u, zero), axis=1)
            return InputJet(u, first, second)

        def source(x):
            return factor * exact(x)

        return ProblemSpec(3, omega, "neumann", source, exact, exact_jet, name=case)

    raise ValueError(f"unknown case {case!r}, expected one of {CASES}")
