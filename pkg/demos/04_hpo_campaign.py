"""
A small hyper-parameter campaign
================================

Bayesian search over learning rate, depth, width and activation for the
Dirichlet problem.  Everything is shrunk (short training, narrow space)
so the script finishes in about a minute; the full protocol is the same
call with the default ``RunConfig``.
"""

import tempfile
from pathlib import Path

from pinnhpo.config import RunConfig
from pinnhpo.hpo import run_hpo, write_hpo_outputs

config = RunConfig(
    case="dirichlet2d", omega=1, K=300, M=10, n_random=4,
    space={"width": [5, 40], "depth": [1, 3]}, lambda0=[1e-3, 2, 20, "sin"],
    n_candidates=2000,
)
result = run_hpo(config)

print(" it  source    lr        depth width activation   test loss")
for t in result.trials:
    hp = t.hp
    print(f"{t.iteration:3d}  {t.source:8s} {hp.lr:9.3g} {hp.depth:5d} {hp.width:5d} {hp.activation:10s} {t.loss_test:11.4g}")
print("best so far:", " ".join(f"{v:.3g}" for v in result.best_so_far))

out = Path(tempfile.mkdtemp()) / "campaign"
write_hpo_outputs(result, config, out)
print(f"\nwrote {sorted(p.name for p in out.iterdir())}")
print((out / "pdp_activation.csv").read_text())
