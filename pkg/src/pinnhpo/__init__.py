"""Physics-informed neural networks for Helmholtz problems with Bayesian hyper-parameter tuning."""

from .config import RunConfig
from .hpo import expected_improvement, partial_dependence, propose_next, run_hpo
from .loss import LossWeights, composite_loss, loss_and_gradient, relative_l2_metric
from .net import Architecture, InputJet, MlpParams, forward, forward_jet, glorot_init, param_count
from .optimizer import AdamState, adam_step, train
from .problem import ProblemSpec, manufactured
from .space import HyperParams, SearchSpace, decode, encode

__version__ = "0.1.0"

__all__ = [
    "AdamState", "Architecture", "HyperParams", "InputJet", "LossWeights", "MlpParams",
    "ProblemSpec", "RunConfig", "SearchSpace", "adam_step", "composite_loss", "decode",
    "encode", "expected_improvement", "forward", "forward_jet", "glorot_init",
    "loss_and_gradient", "manufactured", "param_count", "partial_dependence", "propose_next",
    "relative_l2_metric", "run_hpo", "train",
]
