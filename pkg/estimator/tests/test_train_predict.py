import csv
import json
import pathlib

import numpy as np
import pytest

from leverage_estimator import (build_model, load_series_csv, predict_file,
                                train_models)
from leverage_estimator.data import DataContractError, LengthError


@pytest.fixture(scope="module")
def trained_dir(small_dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("models")
    train_models(small_dataset, out, epochs=4, seed=1)
    return out


def test_loss_decreases_early(small_dataset, tmp_path):
    card = train_models(small_dataset, tmp_path / "m", epochs=3, seed=2,
                        kinds=("cnn2",))
    k_key = next(k for k in card["trained"] if k.startswith("cnn2"))
    losses = card["trained"][k_key]["history"]["loss"]
    assert losses[-1] < losses[0]


def test_training_deterministic_given_seed(tiny_dataset, tmp_path):
    cards = []
    for tag in ("a", "b"):
        card = train_models(tiny_dataset, tmp_path / tag, epochs=2, seed=7,
                            kinds=("cnn2",))
        k_key = next(k for k in card["trained"] if k.startswith("cnn2"))
        cards.append(card["trained"][k_key]["history"]["loss"])
    assert cards[0] == pytest.approx(cards[1], rel=1e-6)


def test_model_card_written(trained_dir):
    card = json.loads((pathlib.Path(trained_dir) / "model_card.json").read_text())
    assert card["records"] > 0 and card["dataset_hash"]
    assert "cnn1" in card["trained"]
    assert card["trained"]["cnn1"]["conv_lengths"] == [58, 29, 15, 8, 4, 2, 1]


def test_predictions_respect_contract(trained_dir, small_dataset, tmp_path):
    out = tmp_path / "pred.csv"
    n = predict_file(trained_dir, small_dataset, out)
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == n
    k_hat = np.array([int(r["k_hat"]) for r in rows])
    phi_hat = np.array([float(r["phi_star_hat"]) for r in rows])
    omega_hat = np.array([float(r["omega_hat"]) for r in rows])
    assert set(np.unique(k_hat)) <= {1, 2, 3}
    assert np.all((phi_hat > 0) & (phi_hat < 1))
    assert np.all((omega_hat > 0) & (omega_hat < 1))


def test_train_beats_heldout_direction(trained_dir, small_dataset,
                                       tiny_dataset, tmp_path):
    # overfit sanity: in-sample MSE below held-out MSE
    series_tr, labels_tr = load_series_csv(small_dataset, require_labels=True)
    series_te, labels_te = load_series_csv(tiny_dataset, require_labels=True)
    out_tr, out_te = tmp_path / "tr.csv", tmp_path / "te.csv"
    predict_file(trained_dir, small_dataset, out_tr)
    predict_file(trained_dir, tiny_dataset, out_te)

    def mse(pred_path, labels):
        with open(pred_path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        phi = np.array([float(r["phi_star_hat"]) for r in rows])
        om = np.array([float(r["omega_hat"]) for r in rows])
        return float(np.mean((phi - labels[1]) ** 2 + (om - labels[2]) ** 2) / 2)

    assert mse(out_tr, labels_tr) <= mse(out_te, labels_te) * 1.5


def test_contract_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(DataContractError):
        load_series_csv(bad)
    short = tmp_path / "short.csv"
    short.write_text("s0,s1\n0.1,0.2\n")
    with pytest.raises(LengthError):
        load_series_csv(short)
