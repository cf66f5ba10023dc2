"""Command-line drivers over the analysis modules.

Every artifact embeds the full configuration, seed and package version so
runs can be reproduced from their outputs alone.
"""

from __future__ import annotations

import csv
import json
import math
import subprocess
import sys

import click
import numpy as np

from . import __version__
from .chaos import cdta_classify
from .datasets import estimate_n_for_series, gen_training_set, read_training_set
from .ingest import calibrate_gamma, ingest_csv, leverage_to_phi
from .lyapunov import (bifurcation_scan, lyap_slice, sweep_grid, table_row)
from .mapcore import classify as classify_params_op
from .mapcore import make_params
from .measure import (DEFAULT_BINS, DEFAULT_TOL, stationary_density,
                      support_interval, ulam_matrix)
from .noise import NoiseKernel
from .simulate import simulate_reduced

TABLE1_POINTS = [
    (0.845, 0.557), (0.795, 0.390), (0.904, 0.627),
    (0.821, 0.439), (0.944, 0.826), (0.766, 0.323),
    (0.258, 0.837), (0.908, 0.804), (0.541, 0.227),
]


def _envelope(command: str, config: dict) -> dict:
    return {"command": command, "config": config, "version": __version__}


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)


def _parse_n(value: str) -> float:
    if value.lower() in ("inf", "infinity"):
        return math.inf
    return float(value)


@click.group()
def main():
    """Workbench for the stochastic leverage map."""


@main.command()
@click.option("--phi-star", type=float, required=True)
@click.option("--omega", type=float, required=True)
@click.option("--n", "n_rebalance", default="1", help="rebalance time, or 'inf'")
@click.option("--steps", type=int, default=1000)
@click.option("--stride", type=int, default=1)
@click.option("--seed", type=int, default=0)
@click.option("--x0", type=float, default=0.5)
@click.option("--out", type=click.Path(), required=True)
def simulate(phi_star, omega, n_rebalance, steps, stride, seed, x0, out):
    """Simulate the reduced noisy map; writes CSV plus a JSON envelope."""
    n = _parse_n(n_rebalance)
    params = make_params(phi_star, omega, 1.0 if math.isinf(n) else n)
    traj = simulate_reduced(params, x0, steps, stride, seed,
                            noise=not math.isinf(n))
    traj.to_csv(out)
    _write_json(str(out) + ".json",
                _envelope("simulate", traj.envelope()))
    click.echo(f"wrote {len(traj.values)} states to {out}")


@main.command()
@click.option("--phi-star", type=float, required=True)
@click.option("--omega", type=float, required=True)
@click.option("--n", "n_rebalance", type=float, default=1000.0)
@click.option("--bins", type=int, default=DEFAULT_BINS)
@click.option("--tol", type=float, default=DEFAULT_TOL)
@click.option("--out", type=click.Path(), required=True)
def stationary(phi_star, omega, n_rebalance, bins, tol, out):
    """Stationary density via the Ulam-discretized Markov operator."""
    params = make_params(phi_star, omega, n_rebalance)
    kernel = NoiseKernel(params)
    support = support_interval(kernel)
    density = stationary_density(ulam_matrix(kernel, bins), tol=tol,
                                 support=support)
    density.to_csv(out)
    _write_json(str(out) + ".json", _envelope("stationary", {
        "phi_star": phi_star, "omega": omega, "n": n_rebalance,
        "bins": bins, "tol": tol, "support_interval": list(support)}))
    click.echo(f"wrote {bins}-bin density to {out}")


@main.command()
@click.option("--phi-star", type=float)
@click.option("--omega", type=float)
@click.option("--realizations", type=int, default=128)
@click.option("--steps", type=int, default=10000)
@click.option("--n-values", default="1,1e3,1e6,1e9")
@click.option("--seed", type=int, default=0)
@click.option("--table1", is_flag=True, help="run all nine benchmark rows")
@click.option("--out", type=click.Path(), required=True)
def lyapunov(phi_star, omega, realizations, steps, n_values, seed, table1, out):
    """Average/random/deterministic Lyapunov exponents."""
    ns = [float(v) for v in n_values.split(",")]
    points = TABLE1_POINTS if table1 else [(phi_star, omega)]
    if not table1 and (phi_star is None or omega is None):
        raise click.UsageError("--phi-star/--omega required without --table1")
    rows = []
    for ph, om in points:
        rep = table_row(ph, om, ns, realizations, steps, seed)
        row = {"phi_star": ph, "omega": om, "det": rep.det,
               "core": rep.regime.is_core, "periodic": rep.regime.periodic,
               "per_n": {str(k): v for k, v in rep.per_n.items()}}
        rows.append(row)
        click.echo(f"({ph}, {om}): det={rep.det:+.3f} "
                   + " ".join(f"ALE[{k:g}]={v['ale']:+.3f}"
                              for k, v in rep.per_n.items()))
    _write_json(out, _envelope("lyapunov", {
        "realizations": realizations, "steps": steps, "seed": seed,
        "n_values": ns, "rows": rows}))


@main.command()
@click.option("--omega", type=float, default=0.5)
@click.option("--phi-range", default="0.7,0.9")
@click.option("--points", type=int, default=400)
@click.option("--kept", type=int, default=100)
@click.option("--out", type=click.Path(), required=True)
def bifurcation(omega, phi_range, points, kept, out):
    """Bifurcation diagram data: kept iterates per phi_star (CSV)."""
    lo, hi = (float(v) for v in phi_range.split(","))
    phis, states, skipped = bifurcation_scan(omega, (lo, hi), points, kept)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["phi_star", "x"])
        for ph, row in zip(phis, states):
            for v in row:
                if np.isfinite(v):
                    writer.writerow([repr(float(ph)), repr(float(v))])
    _write_json(str(out) + ".json", _envelope("bifurcation", {
        "omega": omega, "phi_range": [lo, hi], "points": points,
        "iterates_kept": kept, "skipped": skipped}))
    click.echo(f"wrote bifurcation data for {points - len(skipped)} points")


@main.command()
@click.option("--grid", default="20x20", help="WxH cells over (phi_star, omega)")
@click.option("--n", "n_rebalance", default="1", help="rebalance time, or 'inf'")
@click.option("--realizations", type=int, default=16)
@click.option("--steps", type=int, default=2000)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), required=True)
def sweep(grid, n_rebalance, realizations, steps, seed, out):
    """Lyapunov exponent sweep over a parameter grid (CSV)."""
    w, h = (int(v) for v in grid.lower().split("x"))
    n = _parse_n(n_rebalance)
    phis = (np.arange(w) + 0.5) / w
    omegas = (np.arange(h) + 0.5) / h
    rows = sweep_grid(phis, omegas, n, realizations, steps, seed)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["phi_star", "omega", "n", "ale", "det",
                         "stderr", "regime", "admissible"])
        for r in rows:
            writer.writerow([r["phi_star"], r["omega"], r["n"],
                             r.get("ale", ""), r.get("det", ""),
                             r.get("stderr", ""), r.get("regime", ""),
                             r["admissible"]])
    _write_json(str(out) + ".json", _envelope("sweep", {
        "grid": grid, "n": str(n), "realizations": realizations,
        "steps": steps, "seed": seed,
        "n_inadmissible": sum(not r["admissible"] for r in rows)}))
    click.echo(f"wrote {len(rows)} cells to {out}")


@main.command("classify-params")
@click.option("--phi-star", type=float, required=True)
@click.option("--omega", type=float, required=True)
def classify_params(phi_star, omega):
    """Regime (C1/C2/C3) and periodicity of the deterministic map."""
    label = classify_params_op(make_params(phi_star, omega))
    click.echo(json.dumps({"phi_star": phi_star, "omega": omega,
                           "regime": label.regime.value,
                           "periodic": label.periodic}))


@main.command("chaos-test")
@click.option("--input", "input_path", type=click.Path(exists=True), required=True,
              help="CSV of series: long format id,t,value or one series per row")
@click.option("--order", type=int, default=5)
@click.option("--lag", type=int, default=1)
@click.option("--surrogates", type=int, default=100)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), required=True)
def chaos_test(input_path, order, lag, surrogates, seed, out):
    """Classify every series in a CSV as Stochastic/Periodic/Chaotic."""
    series = _read_series_csv(input_path)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label", "K", "cutoff", "downsample_factor",
                         "pe", "band_lo", "band_hi"])
        for i, (sid, values) in enumerate(series):
            v = cdta_classify(values, n_surrogates=surrogates, order=order,
                              lag=lag, seed=seed + i)
            band = v.surrogate_band_aaft or (float("nan"), float("nan"))
            writer.writerow([sid, v.label,
                             "" if v.K is None else repr(v.K),
                             "" if v.cutoff_used is None else repr(v.cutoff_used),
                             v.downsample_factor, repr(v.pe_original),
                             repr(band[0]), repr(band[1])])
    click.echo(f"classified {len(series)} series")


@main.command("chaos-study")
@click.option("--core/--outside", default=True,
              help="sample parameters inside or outside the dynamical core")
@click.option("--length", type=int, default=59)
@click.option("--n", "n_rebalance", type=float, default=20.0)
@click.option("--k", "stride_k", type=int, default=1)
@click.option("--samples", type=int, default=500)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), required=True)
def chaos_study(core, length, n_rebalance, stride_k, samples, seed, out):
    """Detection-rate study cell: simulate series, classify, report fractions."""
    from .study import detection_study
    cell = detection_study(core, length, n_rebalance, stride_k, samples, seed)
    doc = _envelope("chaos-study", {
        "core": core, "length": length, "n": n_rebalance, "k": stride_k,
        "samples": samples, "seed": seed})
    doc["counts"] = cell.counts
    doc["fractions"] = cell.fractions
    _write_json(out, doc)
    click.echo(json.dumps(cell.fractions))


@main.command("gen-dataset")
@click.option("--count", type=int, required=True)
@click.option("--length", type=int, default=59)
@click.option("--k", "k_set", default="1,2,3")
@click.option("--n-range", default="1,1e4")
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), required=True)
def gen_dataset(count, length, k_set, n_range, seed, out):
    """Generate a training CSV under the shared estimator contract."""
    ks = [int(v) for v in k_set.split(",")]
    lo, hi = (float(v) for v in n_range.split(","))
    gen_training_set(out, count, length, ks, (lo, hi), seed)
    _write_json(str(out) + ".json", _envelope("gen-dataset", {
        "count": count, "length": length, "k_set": ks,
        "n_range": [lo, hi], "seed": seed}))
    click.echo(f"wrote {count} records to {out}")


@main.command()
@click.option("--model-dir", type=click.Path(exists=True), required=True)
@click.option("--input", "input_path", type=click.Path(exists=True), required=True,
              help="series CSV under the shared contract (s0..s58 columns)")
@click.option("--out", type=click.Path(), required=True)
@click.option("--predictor", default=None,
              help="override the estimator command (default: estimator-predict)")
@click.option("--with-n/--no-with-n", default=False,
              help="append residual-matched noise-level estimates")
def estimate(model_dir, input_path, out, predictor, with_n):
    """Run the trained neural estimator on observed series.

    Invokes the separately installed estimator package through the shared
    file contract and optionally appends a noise-level column computed from
    the predicted parameters.
    """
    cmd = [predictor] if predictor else ["estimator-predict"]
    cmd += ["--model-dir", str(model_dir), "--input", str(input_path),
            "--out", str(out)]
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True)
    except FileNotFoundError:
        click.echo("estimator command not found; install the estimator "
                   "package or pass --predictor", err=True)
        sys.exit(2)
    if proc.returncode != 0:
        click.echo(proc.stderr, err=True)
        sys.exit(proc.returncode)
    if with_n:
        series, _, _, _, _ = read_training_set(input_path)
        rows = list(csv.DictReader(open(out, newline="")))
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row_id", "k_hat", "phi_star_hat",
                             "omega_hat", "n_hat"])
            for row in rows:
                i = int(row["row_id"])
                n_hat = estimate_n_for_series(
                    series[i], float(row["phi_star_hat"]),
                    float(row["omega_hat"]), int(float(row["k_hat"])))
                writer.writerow([row["row_id"], row["k_hat"],
                                 row["phi_star_hat"], row["omega_hat"],
                                 repr(n_hat)])
    click.echo(f"predictions written to {out}")


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True), required=True)
@click.option("--schema", default="long", type=click.Choice(["long", "wide"]))
@click.option("--out", type=click.Path(), required=True)
def ingest(input_path, schema, out):
    """Validate leverage CSVs, calibrate gamma, and emit phi series."""
    series = ingest_csv(input_path, schema)
    gamma, report = calibrate_gamma(series)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bank_id", "quarter", "phi"])
        for s in series.values():
            if not s.valid:
                continue
            leverage_to_phi(s, gamma)
            for q, v in zip(s.quarters, s.phi):
                writer.writerow([s.bank_id, q, repr(float(v))])
    report["n_invalid"] = sum(not s.valid for s in series.values())
    _write_json(str(out) + ".json", _envelope("ingest", {
        "schema": schema, "calibration": report}))
    click.echo(f"gamma = {gamma:.6g} ({report['n_excluded']} series excluded)")


def _read_series_csv(path):
    """Series CSV: long format (id,t,value) or one series per row."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if r]
    if [h.strip() for h in header[:3]] == ["id", "t", "value"]:
        acc = {}
        for r in rows:
            acc.setdefault(r[0], []).append((int(r[1]), float(r[2])))
        return [(sid, np.array([v for _, v in sorted(obs)]))
                for sid, obs in acc.items()]
    out = [(header[0], np.array([float(v) for v in header[1:]]))] \
        if _is_number(header[1] if len(header) > 1 else "") else []
    for r in rows:
        out.append((r[0], np.array([float(v) for v in r[1:]])))
    return out


def _is_number(text):
    try:
        float(text)
        return True
    except (TypeError, ValueError):
        return False


if __name__ == "__main__":
    main()
