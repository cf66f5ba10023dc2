"""Console entry points: estimator-train and estimator-predict."""

from __future__ import annotations

import json

import click

from .predict import predict_file
from .train import train_models


@click.command("estimator-train")
@click.option("--dataset", type=click.Path(exists=True), required=True,
              help="training CSV under the shared contract")
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--epochs", type=int, default=30)
@click.option("--seed", type=int, default=0)
@click.option("--only", type=click.Choice(["cnn1", "cnn2"]), default=None,
              help="train a single model family")
def train_cmd(dataset, out_dir, epochs, seed, only):
    kinds = (only,) if only else ("cnn1", "cnn2")
    card = train_models(dataset, out_dir, epochs=epochs, seed=seed, kinds=kinds)
    click.echo(json.dumps({k: {kk: vv for kk, vv in v.items() if kk != "history"}
                           for k, v in card["trained"].items()}, indent=2))


@click.command("estimator-predict")
@click.option("--model-dir", type=click.Path(exists=True), required=True)
@click.option("--input", "input_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
def predict_cmd(model_dir, input_path, out):
    count = predict_file(model_dir, input_path, out)
    click.echo(f"wrote {count} predictions to {out}")
