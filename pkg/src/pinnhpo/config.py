"""Run configuration shared by the library drivers and the command line."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .problem import CASES, ProblemSpec, manufactured
from .seeding import DEFAULT_SEED
from .space import HyperParams, SearchSpace

DEFAULT_LAMBDA0 = {
    "dirichlet2d": [1e-3, 4, 50, "sin"],
    "neumann3d": [1e-3, 3, 275, "sin", 400.0],
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything needed to reproduce a training run, campaign or sweep.

    ``hp`` / ``lambda0`` use the display order ``[lr, depth, width,
    activation(, w_gamma)]``.  ``space`` holds overrides of the case's
    default search space.  ``hard_constraint`` is ``"vanishing"``,
    ``"paper"`` or ``"none"``.
    """

    case: str
    omega: int = 1
    r_train: float = 10.0
    r_test: float = 30.0
    level: int | None = None
    K: int = 50_000
    M: int = 100
    n_random: int = 10
    seed: int = DEFAULT_SEED
    log_every: int = 100
    hp: list | None = None
    lambda0: list | None = None
    space: dict = field(default_factory=dict)
    strategy: str = "gp"
    hard_constraint: str = "vanishing"
    paper_source: bool = False
    boundary_mode: str = "formula"
    log_targets: bool = True
    kernel: str = "matern52"
    gp_restarts: int = 5
    xi: float = 0.01
    n_candidates: int = 10_000
    eps: float = 1e-7
    pdp_grid: int = 20
    pdp_samples: int = 250
    solution_grid: int = 41
    omegas: list = field(default_factory=lambda: [2, 4, 6])
    levels: list = field(default_factory=lambda: [1, 3, 5])
    output_dir: str = "runs/out"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.case not in CASES:
            raise ConfigError(f"case must be one of {CASES}, got {self.case!r}")
        if int(self.omega) != self.omega or self.omega < 1:
            raise ConfigError(f"omega must be a positive integer, got {self.omega}")
        for name in ("K", "M", "n_random", "log_every", "n_candidates", "pdp_grid", "pdp_samples", "solution_grid"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.hard_constraint not in ("vanishing", "paper", "none"):
            raise ConfigError(f"hard_constraint must be vanishing, paper or none, got {self.hard_constraint!r}")
        if self.strategy not in ("gp", "random"):
            raise ConfigError(f"strategy must be gp or random, got {self.strategy!r}")
        if self.boundary_mode not in ("formula", "paper16"):
            raise ConfigError(f"boundary_mode must be formula or paper16, got {self.boundary_mode!r}")
        if self.level is not None and self.level not in (1, 3, 5):
            raise ConfigError(f"level must be 1, 3 or 5, got {self.level}")
        if self.r_train <= 0 or self.r_test <= 0:
            raise ConfigError("precisions must be positive")
        try:
            space = self.search_space()
            if self.hp is not None:
                HyperParams.from_list(self.hp)
            lambda0 = HyperParams.from_list(self.initial_lambda())
        except (ValueError, TypeError, KeyError, IndexError) as exc:
            raise ConfigError(str(exc)) from exc
        if not space.contains(lambda0):
            raise ConfigError(f"initial configuration {lambda0.as_list()} lies outside the search space")
        if self.kernel not in ("matern52", "se"):
            raise ConfigError(f"kernel must be matern52 or se, got {self.kernel!r}")
        if self.gp_restarts < 0 or self.xi < 0 or self.eps <= 0:
            raise ConfigError("gp_restarts and xi must be >= 0 and eps > 0")

    def problem(self) -> ProblemSpec:
        hard = None if self.hard_constraint == "none" else self.hard_constraint
        return manufactured(self.case, self.omega, hard_constraint=hard, paper_source=self.paper_source)

    def search_space(self) -> SearchSpace:
        base = SearchSpace.dirichlet() if self.case == "dirichlet2d" else SearchSpace.neumann()
        if not self.space:
            return base
        merged = base.to_dict()
        unknown = set(self.space) - set(merged)
        if unknown:
            raise ConfigError(f"unknown search space keys: {sorted(unknown)}")
        merged.update(self.space)
        return SearchSpace.from_dict(merged)

    def initial_lambda(self) -> list:
        return list(self.lambda0) if self.lambda0 is not None else list(DEFAULT_LAMBDA0[self.case])

    def train_hp(self) -> HyperParams:
        return HyperParams.from_list(self.hp if self.hp is not None else self.initial_lambda())

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "case" not in data:
            raise ConfigError("config is missing the required 'case' field")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config document must be a JSON object")
        return cls.from_dict(data)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)
