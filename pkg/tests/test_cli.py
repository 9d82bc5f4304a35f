import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from hlsvr import persist
from hlsvr.benchmarks import get_problem
from hlsvr.cli import main
from hlsvr.hierarchical import fit_hlsvr, predict_batch
from hlsvr.lssvr import KernelParams, fit_lssvr
from hlsvr.sampling import generate_nested
from hlsvr.tuning import TuningConfig

GRID = ["--grid-gamma", "10,1000", "--grid-theta", "0.1,1"]


def write_generic(path, data, with_y=True):
    p, q = data.dims_s, data.dims_l
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"s{i + 1}" for i in range(p)] + [f"l{i + 1}" for i in range(q)]
                   + (["y"] if with_y else []))
        for a, (xl, y) in zip(data.anchors, data.groups):
            for row, v in zip(xl, y):
                w.writerow([repr(float(c)) for c in a] + [repr(float(c)) for c in row]
                           + ([repr(float(v))] if with_y else []))


def read_predictions(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["row", "prediction"]
    return np.array([float(r[1]) for r in rows[1:]])


def test_help_entry_point():
    res = subprocess.run([sys.executable, "-m", "hlsvr.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "bench" in res.stdout


@pytest.mark.parametrize("argv", [[], ["bench", "--reps", "x"], ["nope"], ["doe"]])
def test_bad_flags_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_unknown_problem(tmp_path, capsys):
    assert main(["bench", "--problem", "ex9", "--out", str(tmp_path)]) == 2
    assert "ex9" in capsys.readouterr().err


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"problem": "ex2", "colour": "red"}))
    assert main(["bench", "--config", str(cfg)]) == 2


def test_bench_writes_deterministic_files(tmp_path):
    args = ["bench", "--problem", "ex2", "--reps", "2", "--seed", "5"] + GRID
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    for name in ("report.csv", "summary.json", "plot.dat"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_bench_config_overrides_design(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"problem": "ex2", "reps": 1, "m_test": 2, "k_test": 3,
                               "grid_gamma": [10], "grid_theta": [1],
                               "out": str(tmp_path / "o")}))
    assert main(["bench", "--config", str(cfg)]) == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["completed"] == 1


def test_fit_predict_single_anchor_is_plain_lssvr(tmp_path, rng):
    xl = rng.random((15, 2))
    y = np.sin(3 * xl[:, 0]) + xl[:, 1]
    train = tmp_path / "train.csv"
    with open(train, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s1", "l1", "l2", "y"])
        for row, v in zip(xl, y):
            w.writerow([0.5, repr(float(row[0])), repr(float(row[1])), repr(float(v))])
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"tune": False, "bounds_l": [[0, 1], [0, 1]]}))
    model = tmp_path / "m.json"
    assert main(["fit", "--train", str(train), "--out", str(model), "--config", str(cfg)]) == 0
    queries = tmp_path / "q.csv"
    q = rng.random((30, 2))
    with open(queries, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s1", "l1", "l2"])
        for row in q:
            w.writerow([0.9, repr(float(row[0])), repr(float(row[1]))])
    out = tmp_path / "p.csv"
    assert main(["predict", "--model", str(model), "--queries", str(queries), "--out", str(out)]) == 0
    flat = fit_lssvr(xl, y, 1e3, KernelParams(1.0), bounds=[(0, 1), (0, 1)])
    np.testing.assert_array_equal(read_predictions(out), flat.predict_many(q))


def test_fit_predict_matches_in_process(tmp_path):
    problem = get_problem("ex2")
    train, test = generate_nested(problem.design.with_seed(8), problem.evaluator)
    write_generic(tmp_path / "train.csv", train)
    write_generic(tmp_path / "q.csv", test, with_y=False)
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bounds_s": problem.design.bounds_s,
                               "bounds_l": problem.design.bounds_l}))
    model = tmp_path / "m.json"
    assert main(["fit", "--train", str(tmp_path / "train.csv"), "--out", str(model),
                 "--config", str(cfg)] + GRID) == 0
    assert main(["predict", "--model", str(model), "--queries", str(tmp_path / "q.csv"),
                 "--out", str(tmp_path / "p.csv")]) == 0
    direct = predict_batch(fit_hlsvr(train, TuningConfig((10.0, 1000.0), (0.1, 1.0))),
                           test.queries())
    np.testing.assert_allclose(read_predictions(tmp_path / "p.csv"), direct, rtol=0, atol=1e-9)


def test_predict_wrong_columns(tmp_path, rng):
    problem = get_problem("ex2")
    train, _ = generate_nested(problem.design.with_seed(1), problem.evaluator)
    write_generic(tmp_path / "train.csv", train)
    model = tmp_path / "m.json"
    assert main(["fit", "--train", str(tmp_path / "train.csv"), "--out", str(model)] + GRID) == 0
    (tmp_path / "q.csv").write_text("s1,l1\n0.1,0.2\n")
    assert main(["predict", "--model", str(model), "--queries", str(tmp_path / "q.csv"),
                 "--out", str(tmp_path / "p.csv")]) == 2


def test_model_version_mismatch(tmp_path):
    problem = get_problem("ex2")
    train, _ = generate_nested(problem.design.with_seed(1), problem.evaluator)
    path = tmp_path / "m.json"
    persist.save_model(fit_hlsvr(train), path)
    doc = json.loads(path.read_text())
    doc["version"] = 99
    path.write_text(json.dumps(doc))
    (tmp_path / "q.csv").write_text("s1,l1,l2\n0.1,0.2,0.3\n")
    assert main(["predict", "--model", str(path), "--queries", str(tmp_path / "q.csv"),
                 "--out", str(tmp_path / "p.csv")]) == 2


def test_persist_round_trip(tmp_path, rng):
    problem = get_problem("ex1")
    train, test = generate_nested(problem.design.with_seed(2), problem.evaluator)
    model = fit_hlsvr(train)
    persist.save_model(model, tmp_path / "m.json", note="x")
    loaded, meta = persist.load_model(tmp_path / "m.json")
    assert meta == {"note": "x"}
    q = test.queries()
    np.testing.assert_array_equal(predict_batch(loaded, q), predict_batch(model, q))


def test_doe_export_and_ingest(tmp_path):
    assert main(["doe", "--export", str(tmp_path / "plans")]) == 0
    files = sorted(p.name for p in (tmp_path / "plans").iterdir())
    assert files == [f"exp{i:02d}.csv" for i in range(1, 16)] + ["manifest.json"]
    manifest = json.loads((tmp_path / "plans" / "manifest.json").read_text())
    assert manifest["experiments"][0]["train_rows"] == 150

    assert main(["doe", "--export", str(tmp_path / "filled"), "--fill-synthetic"]) == 0
    (tmp_path / "filled" / "exp07.csv").unlink()
    assert main(["doe", "--ingest", str(tmp_path / "filled")]) == 1


def test_doe_synthetic_ingest(tmp_path):
    d = tmp_path / "filled"
    assert main(["doe", "--export", str(d), "--fill-synthetic"]) == 0
    assert main(["doe", "--ingest", str(d), "--out", str(tmp_path / "r")] + GRID) == 0
    rows = (tmp_path / "r" / "report.csv").read_text().splitlines()
    assert len(rows) == 16
    assert "Wilcoxon" in (tmp_path / "r" / "tests.txt").read_text()


def test_doe_ingest_bad_file_exits_2(tmp_path):
    d = tmp_path / "filled"
    assert main(["doe", "--export", str(d), "--fill-synthetic"]) == 0
    text = (d / "exp03.csv").read_text().splitlines()
    text[4] = text[4].rsplit(",", 1)[0] + ","
    (d / "exp03.csv").write_text("\n".join(text) + "\n")
    assert main(["doe", "--ingest", str(d)] + GRID) == 2
