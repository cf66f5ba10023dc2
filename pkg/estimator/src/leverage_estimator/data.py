"""Shared file contract with the workbench.

Training CSV: columns s0..s58, k, phi_star, omega, n, seed.
Prediction CSV: columns row_id, k_hat, phi_star_hat, omega_hat.
"""

from __future__ import annotations

import csv

import numpy as np

INPUT_LENGTH = 59


class DataContractError(Exception):
    """Input file does not match the shared CSV contract."""


class LengthError(Exception):
    """Series length differs from the models' input length."""


def load_series_csv(path, require_labels: bool = False):
    """Read a contract CSV; returns (series, labels-or-None).

    labels = (k, phi_star, omega) when the label columns are present.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataContractError("empty file")
        rows = [r for r in reader if r]
    series_cols = [i for i, h in enumerate(header)
                   if h.startswith("s") and h[1:].isdigit()]
    if not series_cols:
        raise DataContractError("no s<i> series columns found")
    if len(series_cols) != INPUT_LENGTH:
        raise LengthError(
            f"expected {INPUT_LENGTH} series columns, found {len(series_cols)}")
    name_to_idx = {h: i for i, h in enumerate(header)}
    series = np.array([[float(r[i]) for i in series_cols] for r in rows],
                      dtype=np.float32)
    labels = None
    if all(c in name_to_idx for c in ("k", "phi_star", "omega")):
        k = np.array([int(float(r[name_to_idx["k"]])) for r in rows])
        phi = np.array([float(r[name_to_idx["phi_star"]]) for r in rows])
        om = np.array([float(r[name_to_idx["omega"]]) for r in rows])
        labels = (k, phi, om)
    elif require_labels:
        raise DataContractError("label columns k, phi_star, omega required")
    return series, labels


def write_predictions(path, k_hat, phi_hat, omega_hat):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row_id", "k_hat", "phi_star_hat", "omega_hat"])
        for i, (k, p, o) in enumerate(zip(k_hat, phi_hat, omega_hat)):
            writer.writerow([i, int(k), repr(float(p)), repr(float(o))])
