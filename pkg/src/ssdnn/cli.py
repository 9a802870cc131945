"""``ssdnn`` command line: simulate | fit | predict | ci | pi | bias | bench.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import experiments as ex
from .bias import estimate_bias, power_law_stub
from .config import build_config, coerce, load_config_file
from .errors import ConfigError, DataError, SSDNNError
from .io import dump_jsonl, format_table, read_dataset_csv, read_points, write_dataset_csv
from .simgen import SimModel, generate
from .subagging import load_ensemble, predict_members, predict_mean, save_ensemble


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# config keys settable from the command line; values go through the same
# coercion as the config file so both accept identical syntax
_CONFIG_FLAGS = ["model", "n", "beta", "a", "depth", "widths", "iterated_widths", "epochs",
                 "batch_size", "learning_rate", "deltas", "replications", "test_points",
                 "test_n", "methods", "estimators", "alpha", "mc_draws", "seed", "jobs", "out"]


def _config_parent():
    p = _Parser(add_help=False)
    g = p.add_argument_group("experiment config (overrides --config file values)")
    g.add_argument("--config", help="key = value config file")
    for key in _CONFIG_FLAGS:
        g.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
    g.add_argument("--iterated", action="store_const", const=True, default=None,
                   help="also train the second-stage ensembles (needed for QCI2)")
    g.add_argument("--table", action="store_true", help="print an aligned summary table")
    return p


def _config(args):
    file_values = load_config_file(args.config) if args.config else {}
    overrides = {k: coerce(k, getattr(args, k)) for k in _CONFIG_FLAGS
                 if getattr(args, k) is not None}
    if args.iterated:
        overrides["iterated"] = True
    cfg = build_config(file_values, overrides)
    # whether the user named a model, as opposed to the default
    cfg_model_given = "model" in file_values or "model" in overrides
    return cfg, cfg_model_given


def _open_out(cfg):
    if cfg.out is None:
        return sys.stdout
    try:
        return open(cfg.out, "w")
    except OSError as exc:
        raise DataError(f"cannot write {cfg.out}: {exc.strerror or exc}") from None


def _emit(cfg, records):
    fh = _open_out(cfg)
    try:
        dump_jsonl(records, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _coverage_table(run):
    rows = [c.to_dict() for c in run.coverage]
    return format_table(rows, ["method", "delta", "ecr", "el"])


def _write_summary(path, runs):
    if path:
        with open(path, "w") as fh:
            dump_jsonl([r.to_dict() for r in runs], fh)


def _check_dims(ens, X, what):
    if X.shape[1] != ens.spec.input_dim:
        raise DataError(f"{what} has {X.shape[1]} covariates; ensemble expects {ens.spec.input_dim}")


# --- subcommands ------------------------------------------------------------------

def cmd_simulate(args):
    cfg, _ = _config(args)
    model = cfg.sim_model
    if args.noise_free:
        model = SimModel(model.id, noise=False)
    if cfg.out is None:
        raise ConfigError("simulate needs --out")
    write_dataset_csv(cfg.out, generate(model, cfg.n, cfg.seed))
    return 0


def cmd_fit(args):
    cfg, _ = _config(args)
    X, y, _ = read_dataset_csv(args.data)
    ens, it = ex.fit_ensembles(cfg, X, y, cfg.seed)
    if cfg.out is None:
        raise ConfigError("fit needs --out for the ensemble archive")
    save_ensemble(cfg.out, ens, it)
    timings = {"first_stage": ens.train_seconds}
    if it is not None:
        timings["iterated_stage"] = it.train_seconds
    seeds = list(ens.seeds) + ([s for row in it.seeds for s in row] if it else [])
    rec = ex.RunRecord({**cfg.to_dict(), "n": X.shape[0],
                        "hidden_widths": list(ens.spec.hidden_widths),
                        "plan": {"b": ens.plan.b, "h": ens.plan.h, "q": ens.plan.q}},
                       "SS-DNN", None, [], timings, seeds)
    out = json.dumps(rec.to_dict())
    if args.record:
        with open(args.record, "w") as fh:
            fh.write(out + "\n")
    else:
        print(out)
    return 0


def cmd_predict(args):
    cfg, _ = _config(args)
    ens, _ = load_ensemble(args.ensemble)
    X, _, _ = read_dataset_csv(args.data)
    _check_dims(ens, X, args.data)
    means = np.atleast_1d(predict_mean(ens, X))
    members = predict_members(ens, X) if args.members else None
    recs = []
    for t in range(X.shape[0]):
        r = {"point_index": t, "mean": float(means[t])}
        if members is not None:
            r["members"] = members[:, t].tolist()
        recs.append(r)
    _emit(cfg, recs)
    return 0


def _finish_intervals(cfg, args, records, run):
    _write_summary(args.summary, [run])
    if args.table:
        print(_coverage_table(run))
    else:
        _emit(cfg, records)
    return 0


def cmd_ci(args):
    cfg, model_given = _config(args)
    if args.ensemble is None:
        records, run = ex.run_ci(cfg)
        return _finish_intervals(cfg, args, records, run)
    if args.test is None:
        raise ConfigError("ci with --ensemble needs --test")
    ens, it = load_ensemble(args.ensemble)
    Xt, yt, epst = read_dataset_csv(args.test)
    _check_dims(ens, Xt, args.test)
    ft = None
    if model_given or epst is not None:
        ft = ex.truth_for(Xt, yt, epst, cfg.sim_model if model_given else None)
    t0 = time.perf_counter()
    records = ex.ci_records(cfg, ens, it, Xt, yt, ft)
    timings = {"intervals": time.perf_counter() - t0}
    run = ex.RunRecord(cfg.to_dict(), "SS-DNN", None, ex.coverage_summary(records), timings,
                       ens.seeds)
    return _finish_intervals(cfg, args, records, run)


def cmd_pi(args):
    cfg, model_given = _config(args)
    if args.ensemble is None:
        records, run = ex.run_pi(cfg)
        return _finish_intervals(cfg, args, records, run)
    if args.data is None or args.test is None:
        raise ConfigError("pi with --ensemble needs --data (training set) and --test")
    ens, _ = load_ensemble(args.ensemble)
    X, y, _ = read_dataset_csv(args.data)
    Xt, yt, _ = read_dataset_csv(args.test)
    _check_dims(ens, X, args.data)
    _check_dims(ens, Xt, args.test)
    model = cfg.sim_model if model_given else None
    t0 = time.perf_counter()
    records = ex.pi_records(cfg, ens, X, y, Xt, yt, model, cfg.seed)
    timings = {"intervals": time.perf_counter() - t0}
    key = "conditional_coverage" if model is not None else "covered"
    run = ex.RunRecord(cfg.to_dict(), "SS-DNN", None, ex.coverage_summary(records, key), timings,
                       ens.seeds)
    return _finish_intervals(cfg, args, records, run)


def cmd_bias(args):
    cfg, _ = _config(args)
    b1 = None if args.b1 is None else int(args.b1)
    b2 = None if args.b2 is None else int(args.b2)
    if args.synthetic is not None:
        c_b, lam = args.synthetic
        plan = cfg.plan()
        d = cfg.sim_model.input_dim
        X, y = np.zeros((cfg.n, d)), np.zeros(cfg.n)
        x = np.zeros(d)
        predictor = power_law_stub(c_b, lam, 0.0, full_b=plan.b)
    else:
        if args.data is None or args.x is None:
            raise ConfigError("bias needs --data and --x, or --synthetic C_B LAMBDA")
        X, y, _ = read_dataset_csv(args.data)
        x = read_points(args.x)
        if x.shape[0] != X.shape[1]:
            raise DataError(f"--x has {x.shape[0]} coordinates; data has {X.shape[1]}")
        plan = cfg.plan(X.shape[0])
        predictor = None
    spec = cfg.member_spec(X.shape[1], plan)
    est = estimate_bias(X, y, plan, spec, cfg.train_config(), x, b1, b2, predictor)
    _emit(cfg, [est.to_dict()])
    return 0


def cmd_bench(args):
    cfg, model_given = _config(args)
    if args.data is None:
        runs = ex.run_bench(cfg)
    else:
        if args.test is None:
            raise ConfigError("bench with --data needs --test")
        model = cfg.sim_model if model_given else None
        X, y, eps = read_dataset_csv(args.data)
        Xt, yt, epst = read_dataset_csv(args.test)
        if Xt.shape[1] != X.shape[1]:
            raise DataError("training and test files have different covariate counts")
        f, ft = ex.truth_for(X, y, eps, model), ex.truth_for(Xt, yt, epst, model)
        eps = y - f if eps is None else eps
        epst = yt - ft if epst is None else epst
        one = ex.bench_once(cfg, X, y, f, eps, Xt, yt, ft, epst, cfg.seed)
        runs = ex.summarize_bench(cfg, [one])
    if args.table:
        rows = [{"estimator": r.estimator, **r.errors.to_dict(),
                 "train_s": r.timings["train_mean"],
                 "widths": "x".join(map(str, r.config["hidden_widths"]))} for r in runs]
        print(format_table(rows, ["estimator", "mse1", "mse2", "mspe1", "mspe2",
                                  "sigma2_hat", "train_s", "widths"]))
    else:
        _emit(cfg, [r.to_dict() for r in runs])
    return 0


def build_parser():
    parser = _Parser(prog="ssdnn", description="Subagging neural-network regression toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    cp = _config_parent()

    p = sub.add_parser("simulate", parents=[cp], help="write a simulated dataset CSV")
    p.add_argument("--noise-free", action="store_true", help="drop the noise term")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", parents=[cp], help="train a subagging ensemble")
    p.add_argument("--data", required=True)
    p.add_argument("--record", help="write the run record here instead of stdout")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", parents=[cp], help="subagging predictions")
    p.add_argument("--ensemble", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--members", action="store_true", help="include every member prediction")
    p.set_defaults(func=cmd_predict)

    for name, func, helptext in (("ci", cmd_ci, "confidence intervals for f(x)"),
                                 ("pi", cmd_pi, "prediction intervals for y")):
        p = sub.add_parser(name, parents=[cp], help=helptext)
        p.add_argument("--ensemble", help="saved ensemble; omit to run simulated replications")
        p.add_argument("--data", help="training CSV (pi file mode)")
        p.add_argument("--test", help="labelled test CSV")
        p.add_argument("--summary", help="write coverage summary records here")
        p.set_defaults(func=func)

    p = sub.add_parser("bias", parents=[cp], help="scaling-down bias estimate")
    p.add_argument("--data")
    p.add_argument("--x", help="evaluation point, comma separated")
    p.add_argument("--b1")
    p.add_argument("--b2")
    p.add_argument("--synthetic", nargs=2, type=float, metavar=("C_B", "LAMBDA"),
                   help="members follow an exact power law; checks the estimator")
    p.set_defaults(func=cmd_bias)

    p = sub.add_parser("bench", parents=[cp], help="SS-DNN against whole-sample networks")
    p.add_argument("--data")
    p.add_argument("--test")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SSDNNError as exc:
        print(f"ssdnn {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
