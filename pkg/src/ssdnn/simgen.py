"""Simulation models with standard-normal covariates and noise.

Draws come from numpy's ``default_rng`` (PCG64 bit generator, ziggurat
normals), whose streams numpy keeps stable across releases.  Within one
``generate`` call the whole covariate matrix is drawn first, then the noise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

# spawn key that separates the fixed test points from every training stream
_TEST_POINT_KEY = (7,)


class ModelId(str, enum.Enum):
    M1 = "M1"
    M2 = "M2"
    M3 = "M3"
    M4 = "M4"


_INPUT_DIM = {ModelId.M1: 10, ModelId.M2: 10, ModelId.M3: 3, ModelId.M4: 5}


def _f1(X):
    return X.sum(axis=1)


def _f2(X):
    return X @ np.arange(1, X.shape[1] + 1, dtype=np.float64)


def _f3(X):
    return X[:, 0] ** 2 + np.sin(X[:, 1] + X[:, 2])


def _f4(X):
    return _f3(X) + np.exp(-np.abs(X[:, 3] + X[:, 4]))


_TRUE_FN = {ModelId.M1: _f1, ModelId.M2: _f2, ModelId.M3: _f3, ModelId.M4: _f4}


@dataclass(frozen=True)
class SimModel:
    id: ModelId
    noise: bool = True

    def __post_init__(self):
        object.__setattr__(self, "id", ModelId(self.id))

    @property
    def input_dim(self) -> int:
        return _INPUT_DIM[self.id]

    @property
    def noise_sigma(self) -> float:
        return 1.0 if self.noise else 0.0

    @property
    def name(self) -> str:
        return self.id.value + ("" if self.noise else "'")

    def true_fn(self, X) -> np.ndarray:
        return true_f(self, X)


def parse_model(text: str) -> SimModel:
    """``M3`` or ``3`` for the noisy model, with a trailing ``'`` or ``-nf``
    for its noise-free variant."""
    s = text.strip().upper()
    noise = True
    for suffix in ("'", "-NF"):
        if s.endswith(suffix):
            s, noise = s[: -len(suffix)], False
    if not s.startswith("M"):
        s = "M" + s
    try:
        return SimModel(ModelId(s), noise)
    except ValueError:
        raise ConfigError(f"unknown model {text!r}; expected one of M1..M4") from None


def true_f(model: SimModel, x):
    """Regression function at one point (returns a float) or at each row of a
    matrix (returns a vector)."""
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if X2.ndim != 2 or X2.shape[1] != model.input_dim:
        raise DataError(f"{model.name} takes {model.input_dim} covariates, got shape {X.shape}")
    out = _TRUE_FN[model.id](X2)
    return float(out[0]) if single else out


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    eps: np.ndarray

    def __len__(self):
        return self.y.shape[0]


def _draw(model, n, rng):
    X = rng.standard_normal((n, model.input_dim))
    eps = rng.standard_normal(n) if model.noise else np.zeros(n)
    return Dataset(X, true_f(model, X) + eps, eps)


def generate(model: SimModel, n: int, seed: int) -> Dataset:
    if n < 1:
        raise ConfigError(f"need n >= 1, got {n}")
    return _draw(model, n, np.random.default_rng(seed))


def fixed_test_points(model: SimModel, count: int = 10, seed: int = 0) -> Dataset:
    """Canonical labelled test points.

    Drawn from ``SeedSequence(seed, spawn_key=(7,))``, a stream no
    ``generate`` call can produce since those use an empty spawn key.
    """
    if count < 1:
        raise ConfigError(f"need count >= 1, got {count}")
    ss = np.random.SeedSequence(seed, spawn_key=_TEST_POINT_KEY)
    return _draw(model, count, np.random.default_rng(ss))
