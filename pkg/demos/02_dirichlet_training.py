"""
Training a PINN on the 2-D Dirichlet problem
============================================

u = sin(kx) sin(ky) on the unit square with zero boundary values.  The
boundary condition is built into the network output through the
multiplier x(1-x)y(1-y), so only the PDE residual is minimized.
"""

import numpy as np

from pinnhpo import seeding
from pinnhpo.optimizer import train
from pinnhpo.problem import manufactured
from pinnhpo.sampling import make_collocation
from pinnhpo.space import HyperParams

spec = manufactured("dirichlet2d", omega=1)
print(f"kappa = {spec.kappa:.4f}")

# 10 points per wavelength per dimension for training, 30 for testing
sets = make_collocation(spec, seeding.stream(11, seeding.SAMPLING))
print(f"train {len(sets.train.domain)} points, test {len(sets.test.domain)} points")

hp = HyperParams(lr=1e-3, depth=2, width=32, activation="sin")
result = train(hp, spec, sets, K=2000, rng=seeding.stream(11, seeding.INIT, 0), log_every=250)

for epoch, loss, metric in zip(result.epochs, result.loss_train, result.metric):
    print(f"epoch {epoch:5d}  loss {loss:10.4g}  rel. l2 error {metric:.3g}")
print(f"best epoch {result.best_epoch}, test loss {result.best_loss_test:.4g}, "
      f"error {result.best_metric:.3g}, {result.wall_time:.1f} s")
