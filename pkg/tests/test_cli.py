import hashlib
import json

import numpy as np
import pytest

from stcn.cli import gradcheck, main, weights_hash
from stcn.model import StcnModel

FAST = ["--epochs", "50", "--max-iterations", "3"]


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture
def small_csv(tmp_path, rng):
    x = rng.uniform(size=(30, 3))
    x[:, 2] = 0.6 * x[:, 0] + 0.2 * rng.uniform(size=30)
    lines = ["a,b,c,class"] + [f"{r[0]:.6f},{r[1]:.6f},{r[2]:.6f},{i % 2}" for i, r in enumerate(x)]
    path = tmp_path / "small.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_train_writes_outputs(tmp_path, small_csv):
    out = tmp_path / "run"
    assert main(["train", "--data", str(small_csv), "--seed", "7", "--out", str(out), *FAST]) == 0
    model = StcnModel.load(out / "model.json")
    assert model.names == ("a", "b", "c")
    trace = [json.loads(line) for line in (out / "trace.jsonl").read_text().splitlines()]
    assert {"t", "E", "stationary", "chosen"} <= set(trace[0])
    assert sum(r["chosen"] for r in trace) == 1
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 7 and manifest["command"] == "train"
    shapes = (out / "shapes.csv").read_text().splitlines()
    assert len(shapes) == 1 + 256 * 3 * model.iterations


def test_train_with_expert_weights(tmp_path, small_csv):
    expert = np.array([[0.0, 0.3, -0.7], [0.2, 0.0, 0.1], [1.5, -0.4, 0.0]])
    wpath = tmp_path / "expert.json"
    wpath.write_text(json.dumps({"weights": expert.tolist()}))
    out = tmp_path / "run"
    assert main(["train", "--data", str(small_csv), "--weights", str(wpath), "--out", str(out), *FAST]) == 0
    model = StcnModel.load(out / "model.json")
    np.testing.assert_array_equal(model.weights, expert)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["weights_sha256"] == weights_hash(expert)


def test_seed_from_environment(tmp_path, small_csv, monkeypatch):
    monkeypatch.setenv("STCN_SEED", "11")
    out = tmp_path / "run"
    assert main(["train", "--data", str(small_csv), "--out", str(out), *FAST]) == 0
    assert json.loads((out / "manifest.json").read_text())["seed"] == 11


def test_simulate_roundtrip(tmp_path, small_csv):
    out = tmp_path / "run"
    main(["train", "--data", str(small_csv), "--out", str(out), *FAST])
    sim = tmp_path / "sim"
    assert main(["simulate", "--model", str(out / "model.json"), "--data", str(small_csv),
                 "--out", str(sim)]) == 0
    pred = np.loadtxt(sim / "predictions.csv", delimiter=",", skiprows=1)
    assert pred.shape == (30, 3)
    model = StcnModel.load(out / "model.json")
    assert np.all(pred >= model.bounds[:, 0]) and np.all(pred <= model.bounds[:, 1])


def test_simulate_column_mismatch(tmp_path, small_csv, capsys):
    out = tmp_path / "run"
    main(["train", "--data", str(small_csv), "--out", str(out), *FAST])
    other = tmp_path / "other.csv"
    other.write_text("a,b\n0.1,0.2\n0.3,0.4\n")
    code = main(["simulate", "--model", str(out / "model.json"), "--data", str(other),
                 "--out", str(tmp_path / "sim")])
    assert code == 2
    assert "missing: ['c']" in capsys.readouterr().err


def test_simulate_clamps_out_of_range(tmp_path, small_csv):
    out = tmp_path / "run"
    main(["train", "--data", str(small_csv), "--out", str(out), *FAST])
    probe = tmp_path / "probe.csv"
    probe.write_text("a,b,c\n100,-100,100\n")
    sim = tmp_path / "sim"
    assert main(["simulate", "--model", str(out / "model.json"), "--data", str(probe),
                 "--out", str(sim)]) == 0
    model = StcnModel.load(out / "model.json")
    pred = np.loadtxt(sim / "predictions.csv", delimiter=",", skiprows=1)
    assert np.all(pred >= model.bounds[:, 0]) and np.all(pred <= model.bounds[:, 1])


def test_missing_file_is_data_error(tmp_path):
    assert main(["train", "--data", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 2


def test_bad_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["train", "--bogus"])
    assert exc.value.code == 1


def test_constant_column_is_data_error(tmp_path):
    path = tmp_path / "flat.csv"
    path.write_text("a,b\n1,2\n1,3\n1,5\n")
    assert main(["train", "--data", str(path), "--out", str(tmp_path / "o")]) == 2


def test_gradcheck_passes():
    report = gradcheck(200, seed=0)
    assert report["passed"] and report["instances"] == 200
    assert report["worst_relative_error"] < 1e-5


@pytest.mark.parametrize("param", ["lambda", "h", "q", "v"])
def test_gradcheck_catches_perturbed_partial(param):
    assert not gradcheck(50, seed=0, perturb=param)["passed"]


def test_gradcheck_exit_codes(tmp_path):
    assert main(["gradcheck", "--instances", "20", "--out", str(tmp_path / "g")]) == 0
    assert "worst_relative_error" in json.loads((tmp_path / "g" / "gradcheck.json").read_text())
    assert main(["gradcheck", "--instances", "20", "--perturb", "v"]) == 3


def test_stats_on_table(tmp_path, data_dir):
    out = tmp_path / "s"
    assert main(["stats", "--data", str(data_dir / "table2_mse.csv"), "--out", str(out)]) == 0
    rows = (out / "significance.csv").read_text().splitlines()
    assert rows[0] == "algorithm,p,bonferroni,holm,holland"
    assert len(rows) == 6
    summary = json.loads((out / "significance.json").read_text())
    assert summary["friedman_p"] == pytest.approx(1.16576e-16, rel=1e-4)


def test_stats_identical_columns(tmp_path):
    table = tmp_path / "t.csv"
    table.write_text("dataset,STCN,B\n" + "".join(f"d{i},0.{i + 1},0.{i + 1}\n" for i in range(8)))
    out = tmp_path / "s"
    assert main(["stats", "--data", str(table), "--out", str(out)]) == 0
    summary = json.loads((out / "significance.json").read_text())
    assert summary["rows"][0]["p"] == 1.0


def test_stats_pvalues_only(tmp_path):
    pv = tmp_path / "p.csv"
    pv.write_text("algorithm,p\nHopfield,2.477e-7\nFCM,5.278e-6\n")
    out = tmp_path / "s"
    assert main(["stats", "--pvalues", str(pv), "--out", str(out)]) == 0
    rows = json.loads((out / "significance.json").read_text())["rows"]
    assert rows[0]["holm"] == pytest.approx(4.954e-7)


def test_bounds_command(tmp_path, capsys):
    w = tmp_path / "w.json"
    w.write_text(json.dumps({"weights": [[0, 0, -1], [0, 0, -1], [0, 0, 0]]}))
    assert main(["bounds", "--weights", str(w)]) == 0
    line = capsys.readouterr().out.splitlines()[3]
    assert line.startswith("2,0.1192")


def test_plot_data(tmp_path, small_csv):
    out = tmp_path / "run"
    main(["train", "--data", str(small_csv), "--out", str(out), *FAST])
    plot = tmp_path / "plot"
    assert main(["plot-data", "--model", str(out / "model.json"), "--out", str(plot)]) == 0
    assert (plot / "shapes.csv").read_bytes() == (out / "shapes.csv").read_bytes()


def test_benchmark_command(tmp_path, small_csv):
    out = tmp_path / "b"
    assert main(["benchmark", "--data", str(small_csv), "--folds", "3", "--seed", "2",
                 "--out", str(out), *FAST]) == 0
    lines = (out / "report.csv").read_text().splitlines()
    assert lines[0] == "dataset,STCN,LREG"


def test_inputs_not_mutated(tmp_path, small_csv, data_dir):
    before = digest(small_csv)
    out = tmp_path / "run"
    main(["train", "--data", str(small_csv), "--out", str(out), *FAST])
    model_before = digest(out / "model.json")
    main(["simulate", "--model", str(out / "model.json"), "--data", str(small_csv),
          "--out", str(tmp_path / "sim")])
    main(["benchmark", "--data", str(small_csv), "--folds", "3", "--out", str(tmp_path / "b"), *FAST])
    assert digest(small_csv) == before
    assert digest(out / "model.json") == model_before
