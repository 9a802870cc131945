import json

import numpy as np
import pytest

from ssdnn.cli import main
from ssdnn.config import ExperimentConfig, build_config, parse_config_text
from ssdnn.errors import ConfigError
from ssdnn.io import read_dataset_csv
from ssdnn.simgen import SimModel, generate

FAST = ["--epochs", "3"]


def _lines(capsys):
    return [json.loads(l) for l in capsys.readouterr().out.splitlines() if l.strip()]


@pytest.fixture
def files(tmp_path):
    tr, te = tmp_path / "train.csv", tmp_path / "test.csv"
    assert main(["simulate", "--model", "M3", "--n", "300", "--seed", "1", "--out", str(tr)]) == 0
    assert main(["simulate", "--model", "M3", "--n", "10", "--seed", "2", "--out", str(te)]) == 0
    return tr, te, tmp_path


def test_simulate_csv(tmp_path):
    p = tmp_path / "d.csv"
    assert main(["simulate", "--model", "M3", "--n", "100", "--out", str(p)]) == 0
    lines = p.read_text().splitlines()
    assert lines[0] == "x1,x2,x3,y,eps"
    assert len(lines) == 101
    assert all(len(l.split(",")) == 5 for l in lines)
    q = tmp_path / "d2.csv"
    main(["simulate", "--model", "M3", "--n", "100", "--out", str(q)])
    assert p.read_bytes() == q.read_bytes()


def test_simulate_roundtrip_lossless(tmp_path):
    p = tmp_path / "d.csv"
    main(["simulate", "--model", "M2", "--n", "50", "--seed", "4", "--out", str(p)])
    X, y, eps = read_dataset_csv(p)
    d = generate(SimModel("M2"), 50, 4)
    assert np.array_equal(X, d.X) and np.array_equal(y, d.y) and np.array_equal(eps, d.eps)


def test_simulate_noise_free(tmp_path):
    p = tmp_path / "d.csv"
    main(["simulate", "--model", "M1", "--n", "20", "--noise-free", "--out", str(p)])
    _, _, eps = read_dataset_csv(p)
    assert np.all(eps == 0)


def test_fit_predict(files, capsys):
    tr, te, tmp = files
    ens = tmp / "e.npz"
    assert main(["fit", "--data", str(tr), "--out", str(ens), "--depth", "2"] + FAST) == 0
    (rec,) = _lines(capsys)
    assert rec["config"]["hidden_widths"] == [4, 4]  # w*w + 6w + 1 <= b = 54
    assert rec["timings"]["first_stage"] >= 0
    assert len(rec["seeds"]) == rec["config"]["plan"]["q"]
    assert main(["predict", "--ensemble", str(ens), "--data", str(te), "--members"]) == 0
    preds = _lines(capsys)
    assert len(preds) == 10
    assert len(preds[0]["members"]) == rec["config"]["plan"]["q"]


def test_fit_explicit_widths(files, capsys):
    tr, _, tmp = files
    main(["fit", "--data", str(tr), "--out", str(tmp / "e.npz"), "--widths", "3,2"] + FAST)
    assert _lines(capsys)[0]["config"]["hidden_widths"] == [3, 2]


def test_ci_cardinality_and_schema(files, capsys):
    tr, te, tmp = files
    ens = tmp / "e.npz"
    main(["fit", "--data", str(tr), "--out", str(ens)] + FAST)
    capsys.readouterr()
    assert main(["ci", "--ensemble", str(ens), "--test", str(te), "--methods", "QCI1,PCI1"]) == 0
    recs = _lines(capsys)
    assert len(recs) == 40
    assert set(recs[0]) == {"point_index", "method", "delta", "lower", "upper", "covered",
                            "length"}
    assert all(r["lower"] <= r["upper"] for r in recs)


def test_ci_qci2_without_iterated_stage_fails(files, capsys):
    tr, te, tmp = files
    ens = tmp / "e.npz"
    main(["fit", "--data", str(tr), "--out", str(ens)] + FAST)
    assert main(["ci", "--ensemble", str(ens), "--test", str(te), "--methods", "QCI2"]) == 1
    assert "iterated" in capsys.readouterr().err


def test_ci_with_iterated_stage(files, capsys):
    tr, te, tmp = files
    ens = tmp / "e.npz"
    main(["fit", "--data", str(tr), "--out", str(ens), "--iterated"] + FAST)
    capsys.readouterr()
    assert main(["ci", "--ensemble", str(ens), "--test", str(te), "--methods", "QCI2",
                 "--deltas", "0.1"]) == 0
    assert len(_lines(capsys)) == 10


def test_pi_file_mode(files, capsys):
    tr, te, tmp = files
    ens = tmp / "e.npz"
    main(["fit", "--data", str(tr), "--out", str(ens)] + FAST)
    capsys.readouterr()
    assert main(["pi", "--ensemble", str(ens), "--data", str(tr), "--test", str(te),
                 "--model", "M3", "--mc-draws", "200"]) == 0
    recs = _lines(capsys)
    assert len(recs) == 20
    assert all(r["method"] == "PI" and r["residual_count"] == 300 for r in recs)
    assert all(0 <= r["conditional_coverage"] <= 1 for r in recs)


def test_pi_replication_mode_summary(tmp_path, capsys):
    summ = tmp_path / "s.jsonl"
    assert main(["pi", "--model", "M3", "--n", "200", "--replications", "2", "--test-points", "3",
                 "--mc-draws", "50", "--summary", str(summ)] + FAST) == 0
    recs = _lines(capsys)
    assert len(recs) == 2 * 3 * 2
    run = json.loads(summ.read_text())
    assert {c["method"] for c in run["coverage"]} == {"PI"}


def test_bias_synthetic(capsys):
    assert main(["bias", "--synthetic", "2.0", "1.5", "--n", "10000"]) == 0
    (est,) = _lines(capsys)
    assert set(est) == {"lambda_hat", "c_b_hat", "b1_hat", "b2_hat", "bias_at_b"}
    assert abs(est["lambda_hat"] - 1.5) < 1e-10
    assert abs(est["bias_at_b"] - 2.0 * 630 ** -0.75) < 1e-10


def test_bias_no_power_law_exit_code(capsys):
    assert main(["bias", "--synthetic", "0", "1", "--n", "1000"]) == 3
    err = capsys.readouterr().err
    assert "0.0" in err


def test_bias_on_data(files, capsys):
    tr, _, _ = files
    code = main(["bias", "--data", str(tr), "--x", "0,0,0", "--b1", "26", "--b2", "13"] + FAST)
    assert code in (0, 3)  # a sign change between the two averages is a legitimate outcome


def test_bench_file_mode(files, capsys):
    tr, te, _ = files
    assert main(["bench", "--data", str(tr), "--test", str(te)] + FAST) == 0
    rows = _lines(capsys)
    assert [r["estimator"] for r in rows] == ["SS-DNN", "S-DNN", "DNN-deep-1", "DNN-deep-2",
                                              "DNN-wide-1", "DNN-wide-2"]
    assert rows[4]["config"]["hidden_widths"] == [59]  # one hidden layer, size <= n
    assert main(["bench", "--data", str(tr), "--test", str(te), "--table"] + FAST) == 0
    assert "DNN-wide-2" in capsys.readouterr().out


def test_bench_replications_deterministic(capsys):
    args = ["bench", "--model", "M3", "--n", "200", "--replications", "2",
            "--estimators", "SS-DNN,S-DNN", "--test-n", "50"] + FAST
    main(args)
    a = _lines(capsys)
    main(args)
    b = _lines(capsys)
    for ra, rb in zip(a, b):
        assert ra["errors"] == rb["errors"] and ra["seeds"] == rb["seeds"]


def test_exit_codes(tmp_path, capsys):
    assert main(["fit", "--data", str(tmp_path / "missing.csv"), "--out", "x"]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,y\n1.0,2.0\n1.0,abc\n")
    assert main(["predict", "--ensemble", str(bad), "--data", str(bad)]) == 2
    assert main(["fit", "--data", str(bad), "--out", str(tmp_path / "e.npz"), "--beta", "1.5"]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["fit"])
    assert exc.value.code == 1


def test_csv_diagnostics(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,y\n1.0,2.0\n1.0,abc\n")
    from ssdnn.errors import DataError

    with pytest.raises(DataError, match=r"bad.csv:3:2"):
        read_dataset_csv(bad)


def test_config_file_and_override(tmp_path, files, capsys):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text("# demo\nepochs = 2\ndepth = 3   # deeper\nwidths = 4, 4, 4\n")
    tr, _, _ = files
    main(["fit", "--config", str(cfg_path), "--data", str(tr), "--out",
          str(tmp_path / "e.npz"), "--widths", "5,5"])
    rec = _lines(capsys)[0]
    assert rec["config"]["epochs"] == 2
    assert rec["config"]["hidden_widths"] == [5, 5]


def test_config_parsing_errors():
    with pytest.raises(ConfigError, match="<config>:2"):
        parse_config_text("n = 10\nbogus = 1\n")
    with pytest.raises(ConfigError):
        parse_config_text("n 10\n")
    with pytest.raises(ConfigError):
        build_config({}, {"deltas": (1.5,)})
    assert ExperimentConfig().deltas == (0.05, 0.1)
