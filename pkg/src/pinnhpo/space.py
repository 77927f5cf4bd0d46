"""Hyper-parameter points and the search space they live in.

Encoding maps a point to ``[0, 1]^D``: learning rate and boundary weight
through ``log10`` then min-max scaling, depth and width min-max scaled as
continuous values, and the activation one-hot over ``(sin, sigmoid, tanh)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .net import ACTIVATIONS


@dataclass(frozen=True)
class HyperParams:
    """One configuration: learning rate, depth (hidden layers), width, activation, boundary weight."""

    lr: float
    depth: int
    width: int
    activation: str = "sin"
    w_gamma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "lr", float(self.lr))
        object.__setattr__(self, "depth", int(self.depth))
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "activation", str(self.activation))
        if self.w_gamma is not None:
            object.__setattr__(self, "w_gamma", float(self.w_gamma))

    def as_list(self) -> list:
        out = [self.lr, self.depth, self.width, self.activation]
        if self.w_gamma is not None:
            out.append(self.w_gamma)
        return out

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "HyperParams":
        return cls(
            float(data["lr"]), int(data["depth"]), int(data["width"]),
            data.get("activation", "sin"),
            None if data.get("w_gamma") is None else float(data["w_gamma"]),
        )

    @classmethod
    def from_list(cls, values) -> "HyperParams":
        """Build from ``[lr, depth, width, activation(, w_gamma)]``."""
        values = list(values)
        w = float(values[4]) if len(values) > 4 and values[4] is not None else None
        return cls(float(values[0]), int(values[1]), int(values[2]), str(values[3]), w)


def _round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class SearchSpace:
    lr: tuple[float, float] = (1e-4, 5e-2)
    depth: tuple[int, int] = (1, 10)
    width: tuple[int, int] = (5, 500)
    activations: tuple[str, ...] = ACTIVATIONS
    w_gamma: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "lr", tuple(float(v) for v in self.lr))
        object.__setattr__(self, "depth", tuple(int(v) for v in self.depth))
        object.__setattr__(self, "width", tuple(int(v) for v in self.width))
        object.__setattr__(self, "activations", tuple(self.activations))
        if self.w_gamma is not None:
            object.__setattr__(self, "w_gamma", tuple(float(v) for v in self.w_gamma))
        for name in ("lr", "depth", "width") + (("w_gamma",) if self.w_gamma else ()):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"empty range for {name}: {lo}..{hi}")
        if any(a not in ACTIVATIONS for a in self.activations) or not self.activations:
            raise ValueError(f"activations must be a non-empty subset of {ACTIVATIONS}")

    @classmethod
    def dirichlet(cls) -> "SearchSpace":
        return cls()

    @classmethod
    def neumann(cls) -> "SearchSpace":
        return cls(lr=(1e-5, 5e-2), depth=(1, 5), width=(5, 500), w_gamma=(1.0, 1e7))

    @property
    def dim(self) -> int:
        return 3 + len(self.activations) + (1 if self.w_gamma else 0)

    @property
    def names(self) -> tuple[str, ...]:
        """Encoded coordinate names, in encoding order."""
        base = ("lr", "depth", "width") + tuple(f"activation={a}" for a in self.activations)
        return base + (("w_gamma",) if self.w_gamma else ())

    def to_dict(self) -> dict:
        return {
            "lr": list(self.lr), "depth": list(self.depth), "width": list(self.width),
            "activations": list(self.activations),
            "w_gamma": list(self.w_gamma) if self.w_gamma else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SearchSpace":
        return cls(
            tuple(data["lr"]), tuple(data["depth"]), tuple(data["width"]),
            tuple(data["activations"]),
            tuple(data["w_gamma"]) if data.get("w_gamma") else None,
        )

    def contains(self, hp: HyperParams) -> bool:
        ok = (
            self.lr[0] <= hp.lr <= self.lr[1]
            and self.depth[0] <= hp.depth <= self.depth[1]
            and self.width[0] <= hp.width <= self.width[1]
            and hp.activation in self.activations
        )
        if self.w_gamma:
            ok = ok and hp.w_gamma is not None and self.w_gamma[0] <= hp.w_gamma <= self.w_gamma[1]
        return ok

    def sample(self, rng: np.random.Generator) -> HyperParams:
        """Uniform draw: log-uniform for lr and w_gamma, uniform integers otherwise."""
        return decode(rng.random(self.dim), self)


def _unit(value: float, lo: float, hi: float) -> float:
    return (value - lo) / (hi - lo)


def encode(hp: HyperParams, space: SearchSpace) -> np.ndarray:
    if not space.contains(hp):
        raise ValueError(f"{hp} lies outside the search space")
    lg = math.log10
    vec = [
        _unit(lg(hp.lr), lg(space.lr[0]), lg(space.lr[1])),
        _unit(hp.depth, *space.depth),
        _unit(hp.width, *space.width),
    ]
    vec += [1.0 if a == hp.activation else 0.0 for a in space.activations]
    if space.w_gamma:
        vec.append(_unit(lg(hp.w_gamma), lg(space.w_gamma[0]), lg(space.w_gamma[1])))
    return np.array(vec)


def decode(vec, space: SearchSpace) -> HyperParams:
    """Inverse of :func:`encode`, valid for any vector of the right length.

    Components are clipped to ``[0, 1]``; integers are rounded half away
    from zero; the activation is the largest one-hot component, ties going
    to the earliest in ``space.activations``.
    """
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (space.dim,):
        raise ValueError(f"expected a vector of length {space.dim}, got shape {vec.shape}")
    u = np.clip(vec, 0.0, 1.0)

    def log_scale(t, bounds):
        lo, hi = math.log10(bounds[0]), math.log10(bounds[1])
        return min(max(10.0 ** (lo + t * (hi - lo)), bounds[0]), bounds[1])

    def int_scale(t, bounds):
        return min(max(_round_half_away(bounds[0] + t * (bounds[1] - bounds[0])), bounds[0]), bounds[1])

    n_act = len(space.activations)
    activation = space.activations[int(np.argmax(vec[3:3 + n_act]))]
    w_gamma = log_scale(u[3 + n_act], space.w_gamma) if space.w_gamma else None
    return HyperParams(
        log_scale(u[0], space.lr),
        int_scale(u[1], space.depth),
        int_scale(u[2], space.width),
        activation,
        w_gamma,
    )
