"""Experiment configuration: dataclass plus the ``key = value`` file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ConfigError
from .nn_core import NetworkSpec, TrainConfig, auto_spec
from .simgen import SimModel, parse_model
from .subsampling import BlockPlan, plan_from_beta

ESTIMATORS = ("SS-DNN", "S-DNN", "DNN-deep-1", "DNN-deep-2", "DNN-wide-1", "DNN-wide-2")
CI_METHODS = ("QCI1", "QCI2", "PCI1", "PCI2", "PCI3")


@dataclass
class ExperimentConfig:
    model: str = "M1"
    n: int = 10000
    beta: float = 0.7
    a: float = 1.0
    depth: int = 2
    widths: tuple[int, ...] | None = None
    iterated_widths: tuple[int, ...] | None = None
    epochs: int = 200
    batch_size: int = 10
    learning_rate: float = 0.01
    deltas: tuple[float, ...] = (0.05, 0.1)
    replications: int = 1
    test_points: int = 10
    test_n: int = 1000
    methods: tuple[str, ...] = ("QCI1", "PCI1", "PCI2", "PCI3")
    estimators: tuple[str, ...] = ESTIMATORS
    iterated: bool = False
    alpha: float | None = None
    mc_draws: int = 3000
    seed: int = 0
    jobs: int = 1
    out: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        self.sim_model  # raises on an unknown model
        if self.n < 2:
            raise ConfigError(f"n must be >= 2, got {self.n}")
        if not 0.0 < self.beta < 1.0:
            raise ConfigError(f"beta must lie in (0, 1), got {self.beta}")
        if self.a <= 0:
            raise ConfigError(f"a must be positive, got {self.a}")
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        for name in ("replications", "test_points", "test_n", "mc_draws", "jobs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for dl in self.deltas:
            if not 0.0 < dl < 1.0:
                raise ConfigError(f"every delta must lie in (0, 1), got {dl}")
        bad = [m for m in self.methods if m not in CI_METHODS]
        if bad:
            raise ConfigError(f"unknown CI methods {bad}; choose from {list(CI_METHODS)}")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad:
            raise ConfigError(f"unknown estimators {bad}; choose from {list(ESTIMATORS)}")
        if self.alpha is not None and not 0.25 <= self.alpha <= 0.5:
            raise ConfigError(f"alpha must lie in [1/4, 1/2], got {self.alpha}")
        self.train_config()

    @property
    def sim_model(self) -> SimModel:
        return parse_model(self.model)

    def train_config(self, seed: int | None = None) -> TrainConfig:
        try:
            return TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                               learning_rate=self.learning_rate,
                               seed=self.seed if seed is None else seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def plan(self, n: int | None = None) -> BlockPlan:
        return plan_from_beta(self.n if n is None else n, self.beta, self.a)

    def member_spec(self, input_dim: int, plan: BlockPlan) -> NetworkSpec:
        """Explicit widths, or constant width with parameter count <= b."""
        if self.widths:
            return NetworkSpec(input_dim, tuple(self.widths))
        return auto_spec(input_dim, self.depth, plan.b)

    def iterated_spec(self, input_dim: int, inner: BlockPlan) -> NetworkSpec:
        if self.iterated_widths:
            return NetworkSpec(input_dim, tuple(self.iterated_widths))
        return auto_spec(input_dim, self.depth, inner.b)

    def to_dict(self):
        return dataclasses.asdict(self)


# --- key = value files -------------------------------------------------------

_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _parse_bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _split(s):
    return [p for p in s.replace(",", " ").split() if p]


def coerce(name: str, raw: str):
    """Convert the text value of config key ``name`` to its field type."""
    if name not in _FIELDS:
        raise ConfigError(f"unknown config key {name!r}")
    raw = raw.strip()
    try:
        if name in ("widths", "iterated_widths"):
            return tuple(int(p) for p in _split(raw)) or None
        if name == "deltas":
            return tuple(float(p) for p in _split(raw))
        if name in ("methods", "estimators"):
            return tuple(_split(raw))
        if name == "iterated":
            return _parse_bool(raw)
        if name == "alpha":
            return None if raw.lower() in ("", "none") else float(raw)
        if name in ("model", "out"):
            return raw
        if name in ("beta", "a", "learning_rate"):
            return float(raw)
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {exc}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (p.strip() for p in line.split("=", 1))
        try:
            values[key] = coerce(key, raw)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return values


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config_text(text, str(path))


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """File values first, then any non-``None`` overrides on top."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(merged) - set(_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    return ExperimentConfig(**merged)
