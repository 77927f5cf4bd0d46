"""
Gaussian-process surrogate and expected improvement
===================================================

Fit a Matern-5/2 GP to a handful of noisy samples of a 1-D function and
see where expected improvement wants to sample next.
"""

import numpy as np

from pinnhpo import gp
from pinnhpo.hpo import expected_improvement

rng = np.random.default_rng(3)


def objective(t):
    return np.sin(6 * t) + 0.5 * t


X = rng.random((6, 1))
y = objective(X[:, 0])
model = gp.fit(X, y, rng)
print("fitted hyper-parameters:")
for key, value in model.hyperparameters().items():
    print(f"  {key}: {value}")

grid = np.linspace(0, 1, 11)[:, None]
mu, sigma = gp.predict(model, grid)
ei = expected_improvement(mu, sigma, best=y.min(), xi=0.01)
print("\n   t     mean    std      EI")
for t, m, s, e in zip(grid[:, 0], mu, sigma, ei):
    print(f"{t:5.2f} {m:8.3f} {s:7.3f} {e:8.4f}")

fine = np.linspace(0, 1, 1001)
print(f"\nnext sample at t = {grid[np.argmax(ei), 0]:.2f}; true minimum near t = {fine[np.argmin(objective(fine))]:.2f}")
