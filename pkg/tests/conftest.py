import math

import numpy as np
import pytest

from pinnhpo import net


def naive_forward(params, x):
    """Scalar-loop evaluation of the network, independent of the vectorized path."""
    acts = {"sin": math.sin, "tanh": math.tanh, "sigmoid": lambda a: 1.0 / (1.0 + math.exp(-a))}
    act = acts[params.arch.activation]
    z = [float(v) for v in x]
    layers = params.layers()
    for l, (W, b) in enumerate(layers):
        out = []
        for i in range(W.shape[0]):
            a = float(b[i])
            for j in range(W.shape[1]):
                a += float(W[i, j]) * z[j]
            out.append(a if l == len(layers) - 1 else act(a))
        z = out
    return z[0]


def scaled_error(a, b):
    """``|a - b| / max(|b|, 1)`` elementwise (the pinned FD-comparison measure)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.abs(a - b) / np.maximum(np.abs(b), 1.0)


def random_params(rng, d=2, depth=2, width=8, activation="tanh", scale=1.0):
    arch = net.Architecture.constant(d, depth, width, activation)
    params = net.glorot_init(arch, rng)
    params.theta += scale * 0.1 * rng.standard_normal(len(params))
    return params


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# Acceptance results: criterion -> [(check, passed, detail)], filled by test_acceptance.py.
ACCEPTANCE: dict[str, list] = {}


def record_acceptance(criterion: str, check: str, passed: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(criterion, []).append((check, bool(passed), detail))
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split("-")[1])):
        checks = ACCEPTANCE[key]
        verdict = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        parts = "; ".join(f"{name} {'ok' if ok else 'FAILED'} ({detail})" for name, ok, detail in checks)
        terminalreporter.write_line(f"{key} {verdict}: {parts}")
