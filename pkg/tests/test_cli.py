import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from levmap.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def test_simulate_writes_csv_and_envelope(runner, tmp_path):
    out = tmp_path / "traj.csv"
    result = runner.invoke(main, ["simulate", "--phi-star", "0.845",
                                  "--omega", "0.557", "--n", "1000",
                                  "--steps", "200", "--seed", "4",
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "t,value" and len(rows) == 202
    env = json.loads((tmp_path / "traj.csv.json").read_text())
    assert env["config"]["seed"] == 4
    assert env["version"]


def test_simulate_reproducible(runner, tmp_path):
    args = ["simulate", "--phi-star", "0.7", "--omega", "0.4", "--steps",
            "100", "--seed", "9"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert runner.invoke(main, args + ["--out", str(a)]).exit_code == 0
    assert runner.invoke(main, args + ["--out", str(b)]).exit_code == 0
    assert a.read_text() == b.read_text()


def test_stationary_density_output(runner, tmp_path):
    out = tmp_path / "dens.csv"
    result = runner.invoke(main, ["stationary", "--phi-star", "0.845",
                                  "--omega", "0.557", "--n", "1000",
                                  "--bins", "128", "--out", str(out)])
    assert result.exit_code == 0, result.output
    weights = [float(r.split(",")[1]) for r in
               out.read_text().strip().splitlines()[1:]]
    assert len(weights) == 128
    assert sum(weights) == pytest.approx(1.0, abs=1e-9)


def test_lyapunov_single_point(runner, tmp_path):
    out = tmp_path / "lyap.json"
    result = runner.invoke(main, ["lyapunov", "--phi-star", "0.845",
                                  "--omega", "0.557", "--realizations", "8",
                                  "--steps", "1000", "--n-values", "1",
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    doc = json.loads(out.read_text())
    row = doc["config"]["rows"][0]
    assert row["det"] == pytest.approx(0.340, abs=0.02)
    assert "1.0" in row["per_n"]


def test_bifurcation_csv(runner, tmp_path):
    out = tmp_path / "bif.csv"
    result = runner.invoke(main, ["bifurcation", "--omega", "0.5",
                                  "--phi-range", "0.82,0.84", "--points", "5",
                                  "--kept", "10", "--out", str(out)])
    assert result.exit_code == 0, result.output
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "phi_star,x" and len(rows) == 51


def test_sweep_flags_inadmissible(runner, tmp_path):
    out = tmp_path / "sweep.csv"
    result = runner.invoke(main, ["sweep", "--grid", "4x4", "--n", "1",
                                  "--realizations", "2", "--steps", "200",
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 16
    assert any(r["admissible"] == "False" for r in rows)
    env = json.loads((tmp_path / "sweep.csv.json").read_text())
    assert env["config"]["n_inadmissible"] >= 1


def test_classify_params_json(runner):
    result = runner.invoke(main, ["classify-params", "--phi-star", "0.845",
                                  "--omega", "0.557"])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["regime"] == "C3_DynamicalCore"
    assert doc["periodic"] is False


def test_chaos_test_batch(runner, tmp_path):
    rng = np.random.default_rng(0)
    src = tmp_path / "series.csv"
    with open(src, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "t", "value"])
        for t, v in enumerate(rng.standard_normal(200)):
            writer.writerow(["noise", t, v])
        x = 0.4
        for t in range(200):
            writer.writerow(["orbit", t, x])
            x = 4.0 * x * (1 - x) * 0.99 + 0.002
    out = tmp_path / "verdicts.csv"
    result = runner.invoke(main, ["chaos-test", "--input", str(src),
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    with open(out, newline="") as fh:
        rows = {r["id"]: r for r in csv.DictReader(fh)}
    assert rows["noise"]["label"] == "Stochastic"
    assert rows["noise"]["K"] == ""
    assert rows["orbit"]["label"] in ("Chaotic", "Periodic")


def test_chaos_study_cell(runner, tmp_path):
    out = tmp_path / "cell.json"
    result = runner.invoke(main, ["chaos-study", "--core", "--length", "59",
                                  "--n", "20", "--samples", "6",
                                  "--seed", "3", "--out", str(out)])
    assert result.exit_code == 0, result.output
    doc = json.loads(out.read_text())
    assert sum(doc["counts"].values()) == 6
    assert set(doc["fractions"]) == {"Stochastic", "Periodic", "Chaotic"}


def test_gen_dataset_contract(runner, tmp_path):
    out = tmp_path / "train.csv"
    result = runner.invoke(main, ["gen-dataset", "--count", "5",
                                  "--seed", "2", "--out", str(out)])
    assert result.exit_code == 0, result.output
    with open(out, newline="") as fh:
        header = next(csv.reader(fh))
    assert header[:2] == ["s0", "s1"]
    assert header[-5:] == ["s58", "k", "phi_star", "omega", "n"] or \
        header[-5:] == ["k", "phi_star", "omega", "n", "seed"]


def test_ingest_pipeline(runner, tmp_path):
    src = tmp_path / "banks.csv"
    lines = ["bank_id,quarter,leverage"]
    for t in range(59):
        lines.append(f"steady,q{t},{2.0 + 0.005 * t}")
    for t in range(59):
        lev = 3.0 if t != 30 else 9.0
        lines.append(f"spiky,q{t},{lev}")
    src.write_text("\n".join(lines) + "\n")
    out = tmp_path / "phi.csv"
    result = runner.invoke(main, ["ingest", "--input", str(src),
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "phi.csv.json").read_text())
    assert report["config"]["calibration"]["n_excluded"] == 1
    assert report["config"]["calibration"]["excluded_ids"] == ["spiky"]


def test_estimate_requires_estimator(runner, tmp_path):
    train = tmp_path / "in.csv"
    train.write_text("s0\n0.5\n")
    model_dir = tmp_path
    result = runner.invoke(main, ["estimate", "--model-dir", str(model_dir),
                                  "--input", str(train), "--out",
                                  str(tmp_path / "pred.csv"),
                                  "--predictor", "definitely-not-a-command"])
    assert result.exit_code == 2
