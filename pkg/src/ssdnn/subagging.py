"""Subagging ensembles: one network per scalable-subsampling block, averaged."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .nn_core import NetworkParams, NetworkSpec, TrainConfig, forward, param_count, train_stack
from .seeding import derive_seed
from .subsampling import BlockPlan, iterated_plan

# first path element of derived seeds, keeps the two stages' streams apart
_FIRST_STAGE = 1
_SECOND_STAGE = 2


@dataclass
class SubaggingEnsemble:
    plan: BlockPlan
    spec: NetworkSpec
    models: list[NetworkParams]
    seeds: list[int]
    train_seconds: float
    member_seconds: list[float] = field(default_factory=list)
    beta: float | None = None

    def __post_init__(self):
        if len(self.models) != self.plan.q:
            raise ValueError(f"{len(self.models)} models for a plan with q={self.plan.q}")


@dataclass
class IteratedEnsemble:
    """Second-stage subagging inside each first-stage block.

    ``models[i][j]`` was trained on second-stage block ``j`` of first-stage
    block ``i``.
    """

    outer: BlockPlan
    inner: BlockPlan
    spec: NetworkSpec
    models: list[list[NetworkParams]]
    seeds: list[list[int]]
    train_seconds: float

    def block_means(self, X) -> np.ndarray:
        """Second-stage subagging means, shape ``(q, m)`` for ``m`` inputs."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.empty((len(self.models), X.shape[0]))
        for i, row in enumerate(self.models):
            out[i] = _mean_clipped(np.stack([forward(p, X)[:, 0] for p in row]))
        return out


def _check_data(X, y, d):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[1] != d:
        raise DataError(f"data has shape {X.shape}; network expects {d} inputs")
    if X.shape[0] != y.shape[0]:
        raise DataError(f"{X.shape[0]} rows of x but {y.shape[0]} responses")
    return X, y


def _stack_blocks(X, y, slices):
    return np.stack([X[s] for s in slices]), np.stack([y[s] for s in slices])


def fit_subagging(X, y, plan: BlockPlan, spec: NetworkSpec, cfg: TrainConfig,
                  jobs: int = 1, beta: float | None = None) -> SubaggingEnsemble:
    """Train one network per block of ``plan``.

    Member ``j`` (1-based) uses seed ``derive_seed(cfg.seed, 1, j)``.
    """
    X, y = _check_data(X, y, spec.input_dim)
    if X.shape[0] < plan.covered:
        raise DataError(f"plan needs {plan.covered} rows, data has {X.shape[0]}")
    seeds = [derive_seed(cfg.seed, _FIRST_STAGE, j) for j in range(1, plan.q + 1)]
    Xs, ys = _stack_blocks(X, y, plan.slices())
    models, seconds = train_stack(spec, Xs, ys, cfg, seeds, jobs=jobs)
    return SubaggingEnsemble(plan, spec, models, seeds, seconds,
                             [seconds / plan.q] * plan.q, beta)


def fit_iterated(X, y, plan: BlockPlan, spec: NetworkSpec, cfg: TrainConfig,
                 beta: float, jobs: int = 1) -> IteratedEnsemble:
    """Run subagging again inside every first-stage block of ``plan``."""
    X, y = _check_data(X, y, spec.input_dim)
    if X.shape[0] < plan.covered:
        raise DataError(f"plan needs {plan.covered} rows, data has {X.shape[0]}")
    inner = iterated_plan(plan, beta)
    slices, seeds = [], []
    for i, outer_slice in enumerate(plan.slices(), start=1):
        row = []
        for j, s in enumerate(inner.slices(), start=1):
            slices.append(slice(outer_slice.start + s.start, outer_slice.start + s.stop))
            row.append(derive_seed(cfg.seed, _SECOND_STAGE, i, j))
        seeds.append(row)
    Xs, ys = _stack_blocks(X, y, slices)
    flat_models, seconds = train_stack(spec, Xs, ys, cfg, [s for row in seeds for s in row],
                                       jobs=jobs)
    qi = inner.q
    models = [flat_models[i * qi:(i + 1) * qi] for i in range(plan.q)]
    return IteratedEnsemble(plan, inner, spec, models, seeds, seconds)


def _mean_clipped(preds):
    # keep the mean inside [min, max] of the members despite summation rounding
    return np.clip(preds.mean(axis=0), preds.min(axis=0), preds.max(axis=0))


def predict_members(ensemble: SubaggingEnsemble, x) -> np.ndarray:
    """Member predictions in block order: shape ``(q,)`` for one input,
    ``(q, m)`` for a batch."""
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    preds = np.stack([forward(p, X2)[:, 0] for p in ensemble.models])
    return preds[:, 0] if single else preds


def predict_mean(ensemble: SubaggingEnsemble, x):
    """The subagging estimator: average of the member predictions."""
    preds = predict_members(ensemble, x)
    out = _mean_clipped(preds)
    return float(out) if np.ndim(out) == 0 else out


# --- serialization -----------------------------------------------------------

def _spec_dict(spec):
    return {"input_dim": spec.input_dim, "hidden_widths": list(spec.hidden_widths),
            "output_dim": spec.output_dim}


def _plan_dict(plan):
    return {"n": plan.n, "b": plan.b, "h": plan.h, "q": plan.q}


def save_ensemble(path, ensemble: SubaggingEnsemble,
                  iterated: IteratedEnsemble | None = None) -> None:
    """Write an ``.npz`` archive: JSON metadata plus exact float64 weights."""
    meta = {
        "format": "ssdnn-ensemble/1",
        "spec": _spec_dict(ensemble.spec),
        "plan": _plan_dict(ensemble.plan),
        "seeds": [str(s) for s in ensemble.seeds],
        "train_seconds": ensemble.train_seconds,
        "member_seconds": ensemble.member_seconds,
        "beta": ensemble.beta,
    }
    arrays = {"weights": np.stack([m.flat() for m in ensemble.models])}
    if iterated is not None:
        meta["iterated"] = {
            "spec": _spec_dict(iterated.spec),
            "outer": _plan_dict(iterated.outer),
            "inner": _plan_dict(iterated.inner),
            "seeds": [[str(s) for s in row] for row in iterated.seeds],
            "train_seconds": iterated.train_seconds,
        }
        arrays["iterated_weights"] = np.stack(
            [np.stack([m.flat() for m in row]) for row in iterated.models])
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta)), **arrays)


def load_ensemble(path) -> tuple[SubaggingEnsemble, IteratedEnsemble | None]:
    try:
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            weights = z["weights"]
            it_weights = z["iterated_weights"] if "iterated_weights" in z.files else None
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot read ensemble file {path}: {exc}") from exc
    if meta.get("format") != "ssdnn-ensemble/1":
        raise DataError(f"{path} is not an ensemble archive")
    spec = NetworkSpec(**meta["spec"])
    plan = BlockPlan(**meta["plan"])
    if weights.shape != (plan.q, param_count(spec)):
        raise DataError(f"weight array shape {weights.shape} does not match spec and plan")
    ens = SubaggingEnsemble(plan, spec, [NetworkParams.from_flat(spec, w) for w in weights],
                            [int(s) for s in meta["seeds"]], meta["train_seconds"],
                            meta["member_seconds"], meta["beta"])
    it = None
    if it_weights is not None:
        im = meta["iterated"]
        ispec = NetworkSpec(**im["spec"])
        it = IteratedEnsemble(BlockPlan(**im["outer"]), BlockPlan(**im["inner"]), ispec,
                              [[NetworkParams.from_flat(ispec, w) for w in row] for row in it_weights],
                              [[int(s) for s in row] for row in im["seeds"]], im["train_seconds"])
    return ens, it
