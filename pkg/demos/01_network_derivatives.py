"""
Input derivatives of a small network
====================================

A Helmholtz residual needs u, du/dx_i and d2u/dx_i^2 at every collocation
point.  ``forward_jet`` pushes all of them through the network in one
pass; here we compare against central differences.
"""

import numpy as np

from pinnhpo import net

rng = np.random.default_rng(0)
arch = net.Architecture.constant(input_dim=2, depth=3, width=16, activation="tanh")
params = net.glorot_init(arch, rng)
print(f"{arch.widths} -> {net.param_count(arch)} parameters")

x = rng.random((4, 2))
jet = net.forward_jet(params, x)

# finite differences along the first coordinate
h = 1e-4
e = np.array([h, 0.0])
fp, f0, fm = net.forward(params, x + e), net.forward(params, x), net.forward(params, x - e)
print("du/dx     jet:", jet.first[:, 0])
print("          fd :", (fp - fm) / (2 * h))
print("d2u/dx2   jet:", jet.second[:, 0])
print("          fd :", (fp - 2 * f0 + fm) / h**2)

# the value stream is exactly the plain forward pass
assert np.array_equal(jet.value, f0)

# parameters round-trip through a small binary format
blob = params.to_bytes()
again = net.MlpParams.from_bytes(blob)
print(f"serialized {len(blob)} bytes, identical: {np.array_equal(again.theta, params.theta)}")
