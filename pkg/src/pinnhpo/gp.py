"""Gaussian-process regression: constant mean, Matern-5/2 kernel, MLE fit.

Targets are standardized before fitting (constant mean = sample mean).
Kernel hyper-parameters (per-dimension length scales, signal variance and
noise variance) maximize the log marginal likelihood via bounded
Nelder-Mead in log space, restarted from seeded random points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

KERNELS = ("matern52", "se")

JITTER = 1e-10
MAX_JITTER = 1e-6

# natural-log bounds on length scales, signal variance and noise variance
LOG_LENGTH_BOUNDS = (np.log(1e-2), np.log(1e2))
LOG_SIGNAL_BOUNDS = (np.log(1e-2), np.log(1e3))
LOG_NOISE_BOUNDS = (np.log(1e-10), np.log(1.0))


class GpFitError(np.linalg.LinAlgError):
    """Covariance factorization failed even after jitter escalation."""


def _scaled_distance(A: np.ndarray, B: np.ndarray, length_scales) -> np.ndarray:
    A = np.atleast_2d(A) / length_scales
    B = np.atleast_2d(B) / length_scales
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.sqrt(np.maximum(sq, 0.0))


def kernel_matrix(A, B, length_scales, signal_var: float, kind: str = "matern52") -> np.ndarray:
    r = _scaled_distance(A, B, np.asarray(length_scales, dtype=np.float64))
    if kind == "matern52":
        s5r = np.sqrt(5.0) * r
        return signal_var * (1.0 + s5r + 5.0 * r * r / 3.0) * np.exp(-s5r)
    if kind == "se":
        return signal_var * np.exp(-0.5 * r * r)
    raise ValueError(f"unknown kernel {kind!r}, expected one of {KERNELS}")


def matern52(x, x_prime, length_scales, signal_var: float = 1.0) -> float:
    """``s2 (1 + sqrt5 r + 5 r^2 / 3) exp(-sqrt5 r)`` with ``r`` the scaled distance."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    x_prime = np.atleast_1d(np.asarray(x_prime, dtype=np.float64))
    if x.shape != x_prime.shape:
        raise ValueError(f"inputs differ in dimension: {x.shape} vs {x_prime.shape}")
    r = float(np.linalg.norm((x - x_prime) / np.asarray(length_scales, dtype=np.float64)))
    s5r = np.sqrt(5.0) * r
    return float(signal_var * (1.0 + s5r + 5.0 * r * r / 3.0) * np.exp(-s5r))


def _factor(K: np.ndarray, noise_var: float) -> tuple[np.ndarray, float]:
    n = len(K)
    jitter = JITTER
    while jitter <= MAX_JITTER * (1 + 1e-9):
        try:
            return cholesky(K + (noise_var + jitter) * np.eye(n), lower=True), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise GpFitError("covariance matrix is not positive definite after jitter escalation")


@dataclass(frozen=True)
class GpModel:
    X: np.ndarray
    y: np.ndarray
    y_mean: float
    y_std: float
    length_scales: np.ndarray
    signal_var: float
    noise_var: float
    kind: str
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float
    log_likelihood: float

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def hyperparameters(self) -> dict:
        return {
            "kernel": self.kind,
            "length_scales": [float(v) for v in self.length_scales],
            "signal_var": float(self.signal_var),
            "noise_var": float(self.noise_var),
            "jitter": float(self.jitter),
            "y_mean": float(self.y_mean),
            "y_std": float(self.y_std),
            "log_marginal_likelihood": float(self.log_likelihood),
        }


def _unpack(theta: np.ndarray, D: int, fixed_noise: float | None):
    ls = np.exp(theta[:D])
    sv = float(np.exp(theta[D]))
    nv = float(np.exp(theta[D + 1])) if fixed_noise is None else float(fixed_noise)
    return ls, sv, nv


def log_marginal_likelihood(X, y_std, length_scales, signal_var, noise_var, kind: str = "matern52") -> float:
    """Log evidence of standardized targets under the given hyper-parameters."""
    K = kernel_matrix(X, X, length_scales, signal_var, kind)
    L, _ = _factor(K, noise_var)
    alpha = cho_solve((L, True), y_std)
    n = len(y_std)
    return float(-0.5 * y_std @ alpha - np.log(np.diag(L)).sum() - 0.5 * n * np.log(2.0 * np.pi))


def _build(X, y, y_mean, y_scale, ls, sv, nv, kind) -> GpModel:
    ys = (y - y_mean) / y_scale
    K = kernel_matrix(X, X, ls, sv, kind)
    L, jitter = _factor(K, nv)
    alpha = cho_solve((L, True), ys)
    lml = float(-0.5 * ys @ alpha - np.log(np.diag(L)).sum() - 0.5 * len(ys) * np.log(2.0 * np.pi))
    return GpModel(X, y, y_mean, y_scale, ls, sv, nv, kind, L, alpha, jitter, lml)


def fit(
    X,
    y,
    rng: np.random.Generator,
    *,
    kind: str = "matern52",
    n_restarts: int = 5,
    noise_var: float | None = None,
    maxiter: int = 400,
) -> GpModel:
    """Fit a GP by maximum marginal likelihood.

    ``noise_var=None`` estimates the noise variance (in standardized units);
    a number fixes it, e.g. ``0.0`` for interpolation.  The first start is
    unit length scales and signal variance; ``n_restarts`` more are uniform
    draws inside the bounds.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(X) < 2 or len(X) != len(y):
        raise ValueError(f"need at least 2 points with matching targets, got X {X.shape}, y {y.shape}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("training inputs and targets must be finite")
    if kind not in KERNELS:
        raise ValueError(f"unknown kernel {kind!r}, expected one of {KERNELS}")

    m, D = X.shape
    y_mean = float(y.mean())
    y_scale = float(y.std())
    if y_scale == 0.0 or not np.isfinite(y_scale):
        y_scale = 1.0
    ys = (y - y_mean) / y_scale

    bounds = [LOG_LENGTH_BOUNDS] * D + [LOG_SIGNAL_BOUNDS]
    if noise_var is None:
        bounds.append(LOG_NOISE_BOUNDS)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])

    def objective(theta):
        ls, sv, nv = _unpack(theta, D, noise_var)
        try:
            return -log_marginal_likelihood(X, ys, ls, sv, nv, kind)
        except np.linalg.LinAlgError:
            return np.inf

    start0 = np.zeros(len(bounds))
    if noise_var is None:
        start0[-1] = np.log(1e-2)
    starts = [start0] + [lo + rng.random(len(bounds)) * (hi - lo) for _ in range(n_restarts)]

    best_theta, best_val = None, np.inf
    for x0 in starts:
        res = minimize(objective, x0, method="Nelder-Mead", bounds=bounds,
                       options={"maxiter": maxiter * len(bounds), "xatol": 1e-6, "fatol": 1e-9})
        if res.fun < best_val:
            best_theta, best_val = res.x, res.fun
    if best_theta is None:
        raise GpFitError("marginal likelihood could not be evaluated at any start")

    ls, sv, nv = _unpack(best_theta, D, noise_var)
    return _build(X, y, y_mean, y_scale, ls, sv, nv, kind)


def predict(model: GpModel, x) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and standard deviation in the original target units."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.dim:
        raise ValueError(f"query dimension {x.shape[1]} does not match model dimension {model.dim}")
    Ks = kernel_matrix(x, model.X, model.length_scales, model.signal_var, model.kind)
    mean = Ks @ model.alpha
    v = solve_triangular(model.chol, Ks.T, lower=True)
    var = model.signal_var - (v * v).sum(axis=0)
    std = np.sqrt(np.maximum(var, 0.0))
    mean = model.y_mean + model.y_std * mean
    std = model.y_std * std
    if single:
        return mean[0], std[0]
    return mean, std
