"""Replication runners behind the CLI: benchmarks, confidence and prediction
intervals, each returning plain records plus :class:`RunRecord` summaries."""

from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigError, DataError
from .intervals import (KappaPair, Method, fit_residuals, pci1, pci_enlarged, prediction_interval,
                        qci1, qci2_iterated)
from .metrics import CoverageReport, ErrorReport, conditional_pi_coverage, error_report
from .nn_core import NetworkSpec, auto_spec, forward, train_stack
from .seeding import derive_seed
from .simgen import SimModel, fixed_test_points, generate, true_f
from .subagging import (IteratedEnsemble, SubaggingEnsemble, fit_iterated, fit_subagging,
                        predict_members, predict_mean)
from .subsampling import iterated_plan

# first path elements of per-replication seeds
_DATA, _TRAIN, _TEST, _MC = 100, 101, 102, 103


@dataclass
class RunRecord:
    config: dict
    estimator: str = "SS-DNN"
    errors: ErrorReport | None = None
    coverage: list[CoverageReport] = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    seeds: list = field(default_factory=list)

    def to_dict(self):
        return {
            "type": "run",
            "estimator": self.estimator,
            "config": self.config,
            "errors": None if self.errors is None else self.errors.to_dict(),
            "coverage": [c.to_dict() for c in self.coverage],
            "timings": {k: round(v, 3) for k, v in self.timings.items()},
            "seeds": [str(s) for s in self.seeds],
        }


@dataclass
class Replication:
    X: np.ndarray
    y: np.ndarray
    eps: np.ndarray
    train_seed: int


def replication(cfg: ExperimentConfig, r: int) -> Replication:
    data = generate(cfg.sim_model, cfg.n, derive_seed(cfg.seed, _DATA, r))
    return Replication(data.X, data.y, data.eps, derive_seed(cfg.seed, _TRAIN, r))


def fit_ensembles(cfg: ExperimentConfig, X, y, train_seed: int, iterated: bool | None = None):
    """First-stage ensemble, plus the iterated stage when requested."""
    plan = cfg.plan(X.shape[0])
    spec = cfg.member_spec(X.shape[1], plan)
    tcfg = cfg.train_config(train_seed)
    ens = fit_subagging(X, y, plan, spec, tcfg, jobs=cfg.jobs, beta=cfg.beta)
    it = None
    if cfg.iterated if iterated is None else iterated:
        ispec = cfg.iterated_spec(X.shape[1], iterated_plan(plan, cfg.beta))
        it = fit_iterated(X, y, plan, ispec, tcfg, cfg.beta, jobs=cfg.jobs)
    return ens, it


def baseline_spec(name: str, member: NetworkSpec, n: int) -> NetworkSpec:
    """Whole-sample comparison networks sized against the sample size ``n``."""
    d = member.input_dim
    if name == "S-DNN":
        return member
    if name == "DNN-deep-1":
        return auto_spec(d, member.depth, n)
    if name == "DNN-deep-2":
        return auto_spec(d, member.depth, n // 2)
    if name == "DNN-wide-1":
        return auto_spec(d, 1, n)
    if name == "DNN-wide-2":
        return auto_spec(d, 1, n // 2)
    raise ConfigError(f"unknown estimator {name}")


# --- point estimation / benchmark ---------------------------------------------

def truth_for(X, y, eps, model: SimModel | None):
    """Regression values at ``X``: exact from the model, else ``y - eps``."""
    if model is not None:
        return true_f(model, X)
    if eps is None:
        raise DataError("need an eps column or a model to know the regression function")
    return y - eps


def bench_once(cfg: ExperimentConfig, X, y, f, eps, Xt, yt, ft, epst, train_seed: int) -> dict:
    """Fit every configured estimator on one dataset.

    Returns ``{name: (ErrorReport, train_seconds, seeds, spec)}``.
    """
    plan = cfg.plan(X.shape[0])
    member = cfg.member_spec(X.shape[1], plan)
    out = {}
    for k, name in enumerate(cfg.estimators):
        if name == "SS-DNN":
            ens, _ = fit_ensembles(cfg, X, y, train_seed, iterated=False)
            train_pred, test_pred = predict_mean(ens, X), predict_mean(ens, Xt)
            seconds, seeds, spec = ens.train_seconds, ens.seeds, ens.spec
        else:
            spec = baseline_spec(name, member, X.shape[0])
            seeds = [derive_seed(train_seed, 200 + k)]
            tcfg = cfg.train_config(train_seed)
            (params,), seconds = train_stack(spec, X[None], y[None], tcfg, seeds, jobs=1)
            train_pred, test_pred = forward(params, X)[:, 0], forward(params, Xt)[:, 0]
        rep = error_report(train_pred, y, f, test_pred, yt, ft, eps, epst)
        out[name] = (rep, seconds, seeds, spec)
    return out


def _mean_report(reports):
    keys = reports[0].to_dict().keys()
    return ErrorReport(**{k: float(np.mean([getattr(r, k) for r in reports])) for k in keys})


def summarize_bench(cfg: ExperimentConfig, runs: list[dict]) -> list[RunRecord]:
    records = []
    for name in cfg.estimators:
        reps = [run[name] for run in runs]
        seconds = [r[1] for r in reps]
        rec = RunRecord(cfg.to_dict(), name, _mean_report([r[0] for r in reps]), [],
                        {"train_mean": float(np.mean(seconds)), "train_total": float(np.sum(seconds))},
                        [s for r in reps for s in r[2]])
        rec.config = {**rec.config, "hidden_widths": list(reps[0][3].hidden_widths)}
        records.append(rec)
    return records


def run_bench(cfg: ExperimentConfig) -> list[RunRecord]:
    model = cfg.sim_model
    runs = []
    for r in range(cfg.replications):
        rep = replication(cfg, r)
        test = generate(model, cfg.test_n, derive_seed(cfg.seed, _TEST, r))
        runs.append(bench_once(cfg, rep.X, rep.y, true_f(model, rep.X), rep.eps,
                               test.X, test.y, true_f(model, test.X), test.eps, rep.train_seed))
    return summarize_bench(cfg, runs)


# --- confidence intervals ------------------------------------------------------

def _kappas(cfg, n):
    if cfg.alpha is None:
        return KappaPair.bounds(n, cfg.beta)
    return KappaPair.from_alpha(n, cfg.beta, cfg.alpha)


def ci_records(cfg: ExperimentConfig, ens: SubaggingEnsemble, it: IteratedEnsemble | None,
               Xt, yt=None, ft=None) -> list[dict]:
    """One record per (test point, method, delta), in that nesting order."""
    methods = list(cfg.methods)
    if "QCI2" in methods and it is None:
        raise ConfigError("QCI2 requested but the ensemble has no iterated stage")
    if {"PCI2", "PCI3"} & set(methods) and yt is None:
        raise DataError("PCI2/PCI3 need observed responses at the test points")
    beta = cfg.beta if ens.beta is None else ens.beta
    n = ens.plan.n
    Xt = np.atleast_2d(Xt)
    members = predict_members(ens, Xt)
    means = predict_mean(ens, Xt)
    block_means = it.block_means(Xt) if "QCI2" in methods else None
    kappas = _kappas(cfg, n)
    out = []
    for t in range(Xt.shape[0]):
        m_t, mean_t = members[:, t], float(means[t])
        for method in methods:
            for delta in cfg.deltas:
                if method == "QCI1":
                    iv = qci1(m_t, delta)
                elif method == "PCI1":
                    iv = pci1(mean_t, m_t, n, beta, delta)
                elif method in ("PCI2", "PCI3"):
                    iv = pci_enlarged(mean_t, m_t, float(yt[t]), n, beta, delta, method)
                else:
                    iv = qci2_iterated(mean_t, block_means[:, t], kappas, delta)
                covered = None if ft is None else bool(iv.contains(float(ft[t])))
                out.append({"point_index": t, "method": method, "delta": delta,
                            "lower": iv.lower, "upper": iv.upper, "covered": covered,
                            "length": iv.length})
    return out


def coverage_summary(records: list[dict], key: str = "covered") -> list[CoverageReport]:
    groups = defaultdict(list)
    for r in records:
        groups[(r["method"], r["delta"])].append(r)
    out = []
    for (method, delta), rs in groups.items():
        hits = [r[key] for r in rs if r.get(key) is not None]
        # nan when the targets are unknown (file mode without a model)
        ecr = float(np.mean(hits)) if hits else float("nan")
        out.append(CoverageReport(ecr, float(np.mean([r["length"] for r in rs])), method, delta))
    return out


def run_ci(cfg: ExperimentConfig) -> tuple[list[dict], RunRecord]:
    model = cfg.sim_model
    tp = fixed_test_points(model, cfg.test_points)
    ft = true_f(model, tp.X)
    records, timings, seeds = [], defaultdict(float), []
    for r in range(cfg.replications):
        rep = replication(cfg, r)
        ens, it = fit_ensembles(cfg, rep.X, rep.y, rep.train_seed)
        timings["first_stage"] += ens.train_seconds
        if it is not None:
            timings["iterated_stage"] += it.train_seconds
        t0 = time.perf_counter()
        recs = ci_records(cfg, ens, it, tp.X, tp.y, ft)
        timings["intervals"] += time.perf_counter() - t0
        records += [{"replication": r, **rec} for rec in recs]
        seeds.append(rep.train_seed)
    return records, RunRecord(cfg.to_dict(), "SS-DNN", None, coverage_summary(records),
                              dict(timings), seeds)


# --- prediction intervals --------------------------------------------------------

def pi_records(cfg: ExperimentConfig, ens: SubaggingEnsemble, X, y, Xt, yt=None,
               model: SimModel | None = None, mc_seed: int = 0) -> list[dict]:
    """PI records per (test point, delta).  ``covered`` refers to the observed
    ``yt``; with a model, ``conditional_coverage`` is the share of fresh
    responses at the point that land inside."""
    res = fit_residuals(ens, X, y)
    Xt = np.atleast_2d(Xt)
    means = np.atleast_1d(predict_mean(ens, Xt))
    out = []
    for t in range(Xt.shape[0]):
        for delta in cfg.deltas:
            iv = prediction_interval(float(means[t]), res, delta)
            rec = {"point_index": t, "method": Method.PI.value, "delta": delta,
                   "lower": iv.lower, "upper": iv.upper,
                   "covered": None if yt is None else bool(iv.contains(float(yt[t]))),
                   "length": iv.length, "residual_count": len(res)}
            if model is not None:
                rec["conditional_coverage"] = conditional_pi_coverage(
                    iv, model, Xt[t], cfg.mc_draws, derive_seed(mc_seed, t))
            out.append(rec)
    return out


def run_pi(cfg: ExperimentConfig) -> tuple[list[dict], RunRecord]:
    model = cfg.sim_model
    tp = fixed_test_points(model, cfg.test_points)
    records, timings, seeds = [], defaultdict(float), []
    for r in range(cfg.replications):
        rep = replication(cfg, r)
        ens, _ = fit_ensembles(cfg, rep.X, rep.y, rep.train_seed, iterated=False)
        timings["first_stage"] += ens.train_seconds
        t0 = time.perf_counter()
        recs = pi_records(cfg, ens, rep.X, rep.y, tp.X, tp.y, model,
                          derive_seed(cfg.seed, _MC, r))
        timings["intervals"] += time.perf_counter() - t0
        records += [{"replication": r, **rec} for rec in recs]
        seeds.append(rep.train_seed)
    return records, RunRecord(cfg.to_dict(), "SS-DNN", None,
                              coverage_summary(records, "conditional_coverage"),
                              dict(timings), seeds)
