"""Training loops for the iterate classifier and the parameter regressors."""

from __future__ import annotations

import hashlib
import json
import pathlib
import time

import numpy as np

from .data import load_series_csv
from .model import (CNN1_PARAM_COUNT, CNN2_PARAM_COUNT, build_model,
                    check_shapes, trainable_parameter_count)

VALIDATION_FRACTION = 0.1
BATCH_SIZE = 32
PATIENCE = 5


def _dataset_hash(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()[:16]


def _fit(model, x, y, epochs, seed):
    import tensorflow as tf

    stop = tf.keras.callbacks.EarlyStopping(
        monitor="val_loss", patience=PATIENCE, restore_best_weights=True)
    history = model.fit(x, y, batch_size=BATCH_SIZE, epochs=epochs,
                        validation_split=VALIDATION_FRACTION,
                        callbacks=[stop], shuffle=True, verbose=2)
    return {k: [float(v) for v in vals] for k, vals in history.history.items()}


def train_models(dataset_path, out_dir, epochs: int = 30, seed: int = 0,
                 kinds=("cnn1", "cnn2")) -> dict:
    """Train the classifier and the per-iterate regressors from one CSV.

    Saves model weights plus a JSON model card per artifact under out_dir.
    cnn2 is trained separately for every iterate value present in the data.
    """
    import tensorflow as tf

    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    series, labels = load_series_csv(dataset_path, require_labels=True)
    k, phi, omega = labels
    card = {"dataset": str(dataset_path), "dataset_hash": _dataset_hash(dataset_path),
            "epochs": epochs, "seed": seed, "records": int(len(series)),
            "trained": {}}
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(series))
    series, k, phi, omega = series[order], k[order], phi[order], omega[order]

    if "cnn1" in kinds:
        t0 = time.time()
        model = build_model("cnn1", seed=seed)
        onehot = tf.keras.utils.to_categorical(k - 1, num_classes=3)
        history = _fit(model, series, onehot, epochs, seed)
        model.save(out / "cnn1.keras")
        card["trained"]["cnn1"] = {
            "params": trainable_parameter_count(model),
            "expected_params": CNN1_PARAM_COUNT,
            "conv_lengths": check_shapes(model),
            "final_val_accuracy": history["val_accuracy"][-1],
            "history": history, "seconds": round(time.time() - t0, 1)}

    if "cnn2" in kinds:
        targets = np.stack([phi, omega], axis=1).astype(np.float32)
        for kk in sorted(set(int(v) for v in k)):
            t0 = time.time()
            mask = k == kk
            model = build_model("cnn2", seed=seed + kk)
            history = _fit(model, series[mask], targets[mask], epochs, seed)
            model.save(out / f"cnn2_k{kk}.keras")
            card["trained"][f"cnn2_k{kk}"] = {
                "params": trainable_parameter_count(model),
                "expected_params": CNN2_PARAM_COUNT,
                "conv_lengths": check_shapes(model),
                "final_val_mse": history["val_mse"][-1],
                "history": history, "seconds": round(time.time() - t0, 1)}

    with open(out / "model_card.json", "w") as fh:
        json.dump(card, fh, indent=2)
    return card
