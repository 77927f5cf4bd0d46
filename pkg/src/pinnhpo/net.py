"""Constant-width dense networks with exact input jets and parameter gradients.

The network maps ``x in R^d`` to a scalar through ``L-1`` hidden layers
``z = act(W z + b)`` and a linear output layer.  Besides plain evaluation,
:func:`forward_jet` propagates, for every coordinate direction ``i``, the
first partial ``du/dx_i`` and the pure second partial ``d2u/dx_i^2`` through
each layer with the elementwise chain rule.  Mixed partials are never formed.

Parameter gradients are obtained by reverse accumulation through that
extended graph (:func:`jet_backward`), so loss terms involving the Laplacian
are differentiated exactly with respect to the weights.

Parameters are stored as one flat float64 vector; per-layer weight matrices
and bias vectors are views into it, in the order ``W1, b1, W2, b2, ...``
(row-major matrices).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

ACTIVATIONS = ("sin", "sigmoid", "tanh")

# Byte prefix of the serialized parameter blob.
BLOB_MAGIC = b"MLPP"


class TrainingFault(FloatingPointError):
    """Raised when a loss or gradient evaluation produces a non-finite value."""


@dataclass(frozen=True)
class Architecture:
    """Input dimension, hidden widths and activation of a dense network."""

    input_dim: int
    hidden_widths: tuple[int, ...]
    activation: str = "sin"

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        if not self.hidden_widths:
            raise ValueError("hidden_widths must be non-empty")
        if any(w < 1 for w in self.hidden_widths):
            raise ValueError(f"all hidden widths must be >= 1, got {self.hidden_widths}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")

    @classmethod
    def constant(cls, input_dim: int, depth: int, width: int, activation: str = "sin") -> "Architecture":
        return cls(input_dim, (width,) * depth, activation)

    @property
    def widths(self) -> tuple[int, ...]:
        """All layer widths ``(N_0, ..., N_L)`` including input and scalar output."""
        return (self.input_dim, *self.hidden_widths, 1)

    @property
    def depth(self) -> int:
        return len(self.hidden_widths)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden_widths": list(self.hidden_widths),
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Architecture":
        return cls(int(data["input_dim"]), tuple(data["hidden_widths"]), data["activation"])


def param_count(arch: Architecture) -> int:
    """Number of trainable parameters, ``sum_l N_l (N_{l-1} + 1)``."""
    w = arch.widths
    return sum(w[l] * (w[l - 1] + 1) for l in range(1, len(w)))


@dataclass
class MlpParams:
    """All weights and biases of a network, backed by one flat vector."""

    arch: Architecture
    theta: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.theta = np.ascontiguousarray(self.theta, dtype=np.float64)
        if self.theta.shape != (param_count(self.arch),):
            raise ValueError(
                f"flat parameter vector has shape {self.theta.shape}, "
                f"expected ({param_count(self.arch)},)"
            )

    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per-layer ``(W, b)`` views; writing into them updates ``theta``."""
        out = []
        offset = 0
        w = self.arch.widths
        for l in range(1, len(w)):
            n_out, n_in = w[l], w[l - 1]
            W = self.theta[offset:offset + n_out * n_in].reshape(n_out, n_in)
            offset += n_out * n_in
            b = self.theta[offset:offset + n_out]
            offset += n_out
            out.append((W, b))
        return out

    def copy(self) -> "MlpParams":
        return MlpParams(self.arch, self.theta.copy())

    def __len__(self) -> int:
        return self.theta.size

    @classmethod
    def zeros(cls, arch: Architecture) -> "MlpParams":
        return cls(arch, np.zeros(param_count(arch)))

    @classmethod
    def from_layers(cls, arch: Architecture, layers: Sequence[tuple]) -> "MlpParams":
        params = cls.zeros(arch)
        for (W, b), (W_src, b_src) in zip(params.layers(), layers):
            W[...] = np.asarray(W_src, dtype=np.float64).reshape(W.shape)
            b[...] = np.asarray(b_src, dtype=np.float64).reshape(b.shape)
        return params

    def to_bytes(self) -> bytes:
        """Serialize as ``MLPP | uint32 header length | JSON header | float64 LE data``."""
        header = json.dumps(
            {"architecture": self.arch.to_dict(), "count": int(self.theta.size), "dtype": "<f8"},
            sort_keys=True,
        ).encode("utf-8")
        return BLOB_MAGIC + struct.pack("<I", len(header)) + header + self.theta.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "MlpParams":
        if blob[:4] != BLOB_MAGIC:
            raise ValueError("not a serialized MlpParams blob")
        (n_header,) = struct.unpack("<I", blob[4:8])
        header = json.loads(blob[8:8 + n_header].decode("utf-8"))
        arch = Architecture.from_dict(header["architecture"])
        data = np.frombuffer(blob[8 + n_header:], dtype="<f8")
        if data.size != header["count"]:
            raise ValueError(f"blob holds {data.size} values, header says {header['count']}")
        return cls(arch, data.astype(np.float64))


def glorot_init(arch: Architecture, rng: np.random.Generator) -> MlpParams:
    """Glorot-uniform weights, zero biases.

    Each ``W^l`` is drawn from ``U[-a, a]`` with ``a = sqrt(6 / (fan_in + fan_out))``.
    Layers are drawn in order, so a given generator state fixes the result.
    """
    params = MlpParams.zeros(arch)
    for W, _ in params.layers():
        fan_out, fan_in = W.shape
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        W[...] = rng.uniform(-bound, bound, size=W.shape)
    return params


def _activation(name: str, a: np.ndarray, order: int):
    """Return the activation and its derivatives up to ``order`` evaluated at ``a``."""
    if name == "sin":
        s, c = np.sin(a), np.cos(a)
        derivs = (s, c, -s, -c)
    elif name == "tanh":
        t = np.tanh(a)
        d1 = 1.0 - t * t
        derivs = (t, d1, -2.0 * t * d1, -2.0 * d1 * d1 + 4.0 * t * t * d1)
    elif name == "sigmoid":
        s = 0.5 * (1.0 + np.tanh(0.5 * a))
        d1 = s * (1.0 - s)
        derivs = (s, d1, d1 * (1.0 - 2.0 * s), d1 * (1.0 - 6.0 * s + 6.0 * s * s))
    else:
        raise ValueError(f"unknown activation {name!r}")
    return derivs[:order + 1]


@dataclass
class InputJet:
    """Network output with its input partials at a batch of points.

    ``value`` has shape ``(n,)``; ``first`` and ``second`` have shape
    ``(n, d)`` and hold ``du/dx_i`` and ``d2u/dx_i^2``.  ``second`` (and
    ``first``) are ``None`` when they were not propagated.
    """

    value: np.ndarray
    first: np.ndarray | None = None
    second: np.ndarray | None = None

    @property
    def laplacian(self) -> np.ndarray:
        return self.second.sum(axis=-1)


@dataclass
class _Tape:
    order: int
    n: int
    d: int
    # per layer: (z_in, dz_in, derivs, da); dz_in/da stack first then second partials
    layers: list = field(default_factory=list)


def _as_points(params: MlpParams, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.ndim != 2 or x.shape[1] != params.arch.input_dim:
        raise ValueError(
            f"points must have trailing dimension {params.arch.input_dim}, got shape {x.shape}"
        )
    return x, single


def forward(params: MlpParams, x):
    """Evaluate ``u(x)`` at one point ``(d,)`` or a batch ``(n, d)``."""
    x, single = _as_points(params, x)
    z = x
    layers = params.layers()
    for W, b in layers[:-1]:
        z = _activation(params.arch.activation, z @ W.T + b, 0)[0]
    W, b = layers[-1]
    u = (z @ W.T + b)[:, 0]
    return u[0] if single else u


def jet_forward(params: MlpParams, x, order: int = 2) -> tuple[InputJet, _Tape]:
    """Propagate value and input partials of order ``<= order`` (0, 1 or 2).

    The value stream performs exactly the operations of :func:`forward`, so
    the two agree bitwise.  Returns the jet and a tape for :func:`jet_backward`.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    x, _ = _as_points(params, x)
    n, d = x.shape
    tape = _Tape(order, n, d)
    name = params.arch.activation

    z = x
    dz = None
    if order:
        # streams: d first partials, then d second partials (zero at the input)
        dz = np.zeros((order * d, n, d))
        dz[np.arange(d), :, np.arange(d)] = 1.0

    layers = params.layers()
    for l, (W, b) in enumerate(layers):
        a = z @ W.T + b
        da = None
        if order:
            da = (dz.reshape(-1, dz.shape[-1]) @ W.T).reshape(order * d, n, W.shape[0])
        if l == len(layers) - 1:
            tape.layers.append((z, dz, None, da))
            z, dz = a, da
            break
        derivs = _activation(name, a, order + 1)
        tape.layers.append((z, dz, derivs, da))
        z = derivs[0]
        if order == 1:
            dz = derivs[1] * da
        elif order == 2:
            a1, a2 = da[:d], da[d:]
            dz = np.concatenate((derivs[1] * a1, derivs[2] * a1 * a1 + derivs[1] * a2))

    jet = InputJet(z[:, 0])
    if order >= 1:
        jet.first = dz[:d, :, 0].T.copy()
    if order == 2:
        jet.second = dz[d:, :, 0].T.copy()
    return jet, tape


def forward_jet(params: MlpParams, x) -> InputJet:
    """Value, first partials and pure second partials of ``u`` at ``x``."""
    x_arr = np.asarray(x, dtype=np.float64)
    jet, _ = jet_forward(params, x_arr, 2)
    if x_arr.ndim == 1:
        return InputJet(jet.value[0], jet.first[0], jet.second[0])
    return jet


def jet_backward(params: MlpParams, tape: _Tape, cotangent: InputJet) -> MlpParams:
    """Pull a cotangent on the output jet back to the parameters.

    ``cotangent`` holds ``dL/du``, ``dL/d(du/dx_i)`` and ``dL/d(d2u/dx_i^2)``
    per point with the same shapes as the jet; missing components are zero.
    """
    order, n, d = tape.order, tape.n, tape.d
    grad = MlpParams.zeros(params.arch)
    g_layers = grad.layers()
    layers = params.layers()

    ga = np.asarray(cotangent.value, dtype=np.float64).reshape(n, 1)
    gda = None
    if order:
        gda = np.zeros((order * d, n, 1))
        if cotangent.first is not None:
            gda[:d, :, 0] = np.asarray(cotangent.first).T
        if order == 2 and cotangent.second is not None:
            gda[d:, :, 0] = np.asarray(cotangent.second).T

    for l in range(len(layers) - 1, -1, -1):
        W, _ = layers[l]
        gW, gb = g_layers[l]
        z_in, dz_in, _, _ = tape.layers[l]
        gW[...] = ga.T @ z_in
        gb[...] = ga.sum(axis=0)
        if order:
            gda_flat = gda.reshape(-1, gda.shape[-1])
            gW += gda_flat.T @ dz_in.reshape(-1, dz_in.shape[-1])
        if l == 0:
            break

        gz = ga @ W
        gdz = (gda.reshape(-1, gda.shape[-1]) @ W).reshape(order * d, n, W.shape[1]) if order else None

        _, _, derivs, da = tape.layers[l - 1]
        if order == 0:
            ga = gz * derivs[1]
        elif order == 1:
            s1, s2 = derivs[1], derivs[2]
            ga = gz * s1 + (gdz * da).sum(axis=0) * s2
            gda = gdz * s1
        else:
            s1, s2, s3 = derivs[1], derivs[2], derivs[3]
            g1, g2 = gdz[:d], gdz[d:]
            a1, a2 = da[:d], da[d:]
            ga = gz * s1 + s2 * (g1 * a1).sum(axis=0) + (g2 * (s3 * a1 * a1 + s2 * a2)).sum(axis=0)
            gda = np.concatenate((g1 * s1 + 2.0 * s2 * g2 * a1, g2 * s1))
    return grad


LossHead = Callable[[InputJet], tuple[float, InputJet]]


def param_gradient(params: MlpParams, x, head: LossHead, order: int = 2) -> tuple[float, MlpParams]:
    """Scalar loss and its gradient with respect to the parameters.

    ``head`` maps the output jet at points ``x`` to ``(loss, cotangent)``,
    where the cotangent is the derivative of the loss with respect to each
    jet component.  Raises :class:`TrainingFault` on non-finite results.
    """
    jet, tape = jet_forward(params, x, order)
    loss, cot = head(jet)
    if not np.isfinite(loss):
        raise TrainingFault(f"non-finite loss {loss}")
    grad = jet_backward(params, tape, cot)
    if not np.all(np.isfinite(grad.theta)):
        raise TrainingFault("non-finite parameter gradient")
    return float(loss), grad
