"""Batch prediction through the shared file contract."""

from __future__ import annotations

import pathlib

import numpy as np

from .data import load_series_csv, write_predictions


def load_models(model_dir):
    import tensorflow as tf

    model_dir = pathlib.Path(model_dir)
    cnn1 = tf.keras.models.load_model(model_dir / "cnn1.keras")
    cnn2 = {}
    for path in sorted(model_dir.glob("cnn2_k*.keras")):
        kk = int(path.stem.split("k")[-1])
        cnn2[kk] = tf.keras.models.load_model(path)
    if not cnn2:
        raise FileNotFoundError(f"no cnn2_k*.keras models in {model_dir}")
    return cnn1, cnn2


def predict_file(model_dir, input_path, output_path) -> int:
    """Classify the iterate, regress the parameters, write predictions."""
    series, _ = load_series_csv(input_path)
    cnn1, cnn2 = load_models(model_dir)
    probs = cnn1.predict(series, verbose=0)
    k_hat = probs.argmax(axis=1) + 1
    phi_hat = np.empty(len(series))
    omega_hat = np.empty(len(series))
    for kk, model in cnn2.items():
        mask = k_hat == kk
        if mask.any():
            pred = model.predict(series[mask], verbose=0)
            phi_hat[mask] = pred[:, 0]
            omega_hat[mask] = pred[:, 1]
    missing = ~np.isin(k_hat, list(cnn2))
    if missing.any():
        # fall back to the closest available regressor
        fallback = min(cnn2)
        pred = cnn2[fallback].predict(series[missing], verbose=0)
        phi_hat[missing] = pred[:, 0]
        omega_hat[missing] = pred[:, 1]
    eps = 1e-6
    phi_hat = np.clip(phi_hat, eps, 1.0 - eps)
    omega_hat = np.clip(omega_hat, eps, 1.0 - eps)
    write_predictions(output_path, k_hat, phi_hat, omega_hat)
    return len(series)
