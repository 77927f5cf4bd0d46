"""
The 3-D Neumann problem
=======================

u = cos(kx) cos(ky) on the unit cube with zero normal derivative.  Here
the boundary term stays in the loss, weighted by w_gamma, and train and
test sets coincide.
"""

import numpy as np

from pinnhpo import seeding
from pinnhpo.loss import bc_loss
from pinnhpo.optimizer import train
from pinnhpo.problem import manufactured
from pinnhpo.sampling import make_collocation, neumann_boundary_count
from pinnhpo.space import HyperParams

spec = manufactured("neumann3d", omega=1)
sets = make_collocation(spec, seeding.stream(11, seeding.SAMPLING))
print(f"{len(sets.train.domain)} domain points, {len(sets.train.boundary)} boundary points "
      f"(the alternative count rule would give {neumann_boundary_count(3, 10, 'paper16')})")

# outward normals are axis vectors; the exact solution has zero flux through every face
normals = sets.train.boundary.normals
for axis, name in enumerate("xyz"):
    lo, hi = np.sum(normals[:, axis] == -1.0), np.sum(normals[:, axis] == 1.0)
    print(f"faces {name}=0 / {name}=1: {lo} / {hi} points")

hp = HyperParams(lr=5e-3, depth=2, width=32, activation="sin", w_gamma=10.0)
result = train(hp, spec, sets, K=2000, rng=seeding.stream(11, seeding.INIT, 0), log_every=400)
for epoch, pde, bc in zip(result.epochs, result.pde, result.bc):
    print(f"epoch {epoch:5d}  pde {pde:10.4g}  bc {bc:10.4g}")
print(f"relative l2 error at the best epoch: {result.best_metric:.3g}")
print(f"boundary loss of the best network: {bc_loss(result.best_params, sets.train.boundary, spec):.3g}")
