"""Collocation points: precision rule, domain/boundary sampling, set assembly."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LEVELS = (1, 3, 5)


def _round_half_away(value: float) -> int:
    return int(math.floor(abs(value) + 0.5)) * (1 if value >= 0 else -1)


def points_per_dim(r: float, omega: int) -> int:
    """Points per dimension for ``r`` points per wavelength; the unit interval holds ``omega`` wavelengths."""
    if r <= 0 or omega < 1:
        raise ValueError(f"need r > 0 and omega >= 1, got r={r}, omega={omega}")
    return max(1, _round_half_away(r * omega))


def precision_of(n_x: int, omega: int) -> float:
    """Points per wavelength per dimension, rounded to one decimal."""
    if n_x < 1:
        raise ValueError(f"n_x must be >= 1, got {n_x}")
    return _round_half_away(10.0 * n_x / omega) / 10.0


def level_size(level: int) -> tuple[int, int]:
    """``(n_l, |T_l|)`` with ``n_l = 10 * 2**(l-1)`` and ``|T_l| = n_l**2``."""
    if level not in LEVELS:
        raise ValueError(f"unsupported level {level}, expected one of {LEVELS}")
    n = 10 * 2 ** (level - 1)
    return n, n * n


def neumann_boundary_count(d: int, n_x: int, mode: str = "formula") -> int:
    """Boundary points for the Neumann protocol.

    ``formula`` gives ``2^(d-1) d n_x^(d-1)``; ``paper16`` gives ``16 n_x^2``
    (only defined for ``d = 3``).
    """
    if mode == "formula":
        return 2 ** (d - 1) * d * n_x ** (d - 1)
    if mode == "paper16":
        if d != 3:
            raise ValueError("paper16 boundary count is only defined for d = 3")
        return 16 * n_x * n_x
    raise ValueError(f"unknown boundary count mode {mode!r}")


def sample_domain(count: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. uniform points strictly inside ``(0, 1)^d``, shape ``(count, d)``."""
    pts = rng.random((count, d))
    # Generator.random is on [0, 1); redraw exact zeros
    bad = pts == 0.0
    while np.any(bad):
        pts[bad] = rng.random(int(bad.sum()))
        bad = pts == 0.0
    return pts


@dataclass
class BoundarySet:
    """Points on the boundary of the unit cube with their outward unit normals."""

    points: np.ndarray
    normals: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def empty(cls, d: int) -> "BoundarySet":
        return cls(np.zeros((0, d)), np.zeros((0, d)))


def sample_boundary(count: int, d: int, rng: np.random.Generator) -> BoundarySet:
    """Uniform-by-area points on ``boundary([0, 1]^d)``.

    All ``2d`` faces have unit area, so a face is chosen uniformly, the
    free coordinates are uniform and the normal is the outward axis vector.
    Face ``2i`` is ``x_i = 0`` and face ``2i + 1`` is ``x_i = 1``.
    """
    if d not in (2, 3):
        raise ValueError(f"d must be 2 or 3, got {d}")
    faces = rng.integers(0, 2 * d, size=count)
    pts = rng.random((count, d))
    axis = faces // 2
    side = (faces % 2).astype(np.float64)
    rows = np.arange(count)
    pts[rows, axis] = side
    normals = np.zeros((count, d))
    normals[rows, axis] = 2.0 * side - 1.0
    return BoundarySet(pts, normals)


@dataclass
class Observations:
    points: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def empty(cls, d: int) -> "Observations":
        return cls(np.zeros((0, d)), np.zeros(0))


@dataclass
class PointSets:
    """Domain, boundary and labeled points used to evaluate one loss."""

    domain: np.ndarray
    boundary: BoundarySet
    observations: Observations = None

    def __post_init__(self):
        if self.observations is None:
            self.observations = Observations.empty(self.domain.shape[1])


@dataclass
class CollocationSet:
    train: PointSets
    test: PointSets
    meta: dict = field(default_factory=dict)


def make_collocation(
    problem,
    rng: np.random.Generator,
    *,
    r_train: float = 10.0,
    r_test: float = 30.0,
    level: int | None = None,
    boundary_mode: str = "formula",
) -> CollocationSet:
    """Random train/test sets following the experimental protocol.

    Dirichlet: ``n_x = round(r omega)`` (or ``n_l`` for a level), ``n_x^2``
    domain points per set; boundary points are only drawn without a hard
    constraint.  Neumann: a single set of ``n_x^2`` domain points and
    :func:`neumann_boundary_count` boundary points, used for both train and test.
    """
    d = problem.d
    if problem.bc_kind == "neumann":
        n_x = level_size(level)[0] if level else points_per_dim(r_train, problem.omega)
        domain = sample_domain(n_x * n_x, d, rng)
        boundary = sample_boundary(neumann_boundary_count(d, n_x, boundary_mode), d, rng)
        sets = PointSets(domain, boundary)
        return CollocationSet(sets, sets, {"n_train": n_x, "n_test": n_x})

    if level:
        n_train = level_size(level)[0]
        n_test = points_per_dim(r_test, problem.omega)
    else:
        n_train = points_per_dim(r_train, problem.omega)
        n_test = points_per_dim(r_test, problem.omega)

    def build(n_x):
        domain = sample_domain(n_x**d, d, rng)
        if problem.has_boundary_term:
            boundary = sample_boundary(2 ** (d - 1) * d * n_x ** (d - 1), d, rng)
        else:
            boundary = BoundarySet.empty(d)
        return PointSets(domain, boundary)

    train = build(n_train)
    test = build(n_test)
    return CollocationSet(train, test, {"n_train": n_train, "n_test": n_test})


def write_points_csv(path, points: np.ndarray, normals: np.ndarray | None = None) -> None:
    """One row per point: coordinates, then the normal if given."""
    d = points.shape[1]
    names = ["x", "y", "z"][:d]
    header = names + ([f"n{c}" for c in names] if normals is not None else [])
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, p in enumerate(points):
            row = list(p) + (list(normals[i]) if normals is not None else [])
            writer.writerow([repr(float(v)) for v in row])
