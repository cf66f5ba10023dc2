"""Ingestion and calibration of bank leverage series."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyAfterFilterError, ParseError, SchemaError


@dataclass
class BankSeries:
    bank_id: str
    quarters: list
    leverage: np.ndarray
    phi: Optional[np.ndarray] = None
    valid: bool = True
    flags: list = field(default_factory=list)


def ingest_csv(path, schema: str = "long") -> dict[str, BankSeries]:
    """Read leverage series from CSV.

    Schemas: "long" expects a header `bank_id,quarter,leverage` (one row per
    observation); "wide" expects `bank_id,<q1>,<q2>,...` (one row per bank).
    Series containing non-finite values or leverage <= 1 are kept but flagged
    invalid; nothing is silently dropped.
    """
    if schema not in ("long", "wide"):
        raise SchemaError(f"unknown schema {schema!r}")
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return {}
        rows = [(i + 2, row) for i, row in enumerate(reader) if row]
    series: dict[str, BankSeries] = {}
    if schema == "long":
        if [h.strip() for h in header[:3]] != ["bank_id", "quarter", "leverage"]:
            raise SchemaError("long schema needs header bank_id,quarter,leverage")
        acc: dict[str, list] = {}
        for lineno, row in rows:
            if len(row) < 3:
                raise ParseError("expected 3 columns", line=lineno)
            try:
                lev = float(row[2])
            except ValueError:
                raise ParseError(f"bad leverage value {row[2]!r}", line=lineno)
            acc.setdefault(row[0], []).append((row[1], lev))
        for bank, obs in acc.items():
            quarters, lev = zip(*obs)
            series[bank] = BankSeries(bank, list(quarters),
                                      np.array(lev, dtype=float))
    else:
        if not header or header[0].strip() != "bank_id":
            raise SchemaError("wide schema needs leading bank_id column")
        quarters = [h.strip() for h in header[1:]]
        for lineno, row in rows:
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} columns, got {len(row)}", line=lineno)
            try:
                lev = np.array([float(v) for v in row[1:]], dtype=float)
            except ValueError:
                raise ParseError("bad leverage value", line=lineno)
            series[row[0]] = BankSeries(row[0], quarters, lev)
    for s in series.values():
        if not np.all(np.isfinite(s.leverage)):
            s.valid = False
            s.flags.append("non-finite leverage")
        if np.any(s.leverage <= 1.0):
            s.valid = False
            s.flags.append("leverage <= 1")
    return series


def calibrate_gamma(series_set) -> tuple[float, dict]:
    """Global liquidity scale from a set of leverage series.

    Series containing any value more than two per-series standard deviations
    from the per-series mean are excluded; gamma is the maximum of
    (leverage - 1) over the remaining series, which maps every kept phi into
    (0, 1].  Returns (gamma, report).
    """
    usable = [s for s in _as_list(series_set) if s.valid]
    if not usable:
        raise EmptyAfterFilterError("no valid series to calibrate on")
    kept, excluded = [], []
    for s in usable:
        mean = s.leverage.mean()
        std = s.leverage.std(ddof=1) if len(s.leverage) > 1 else 0.0
        if std > 0 and np.any(np.abs(s.leverage - mean) > 2.0 * std):
            excluded.append(s.bank_id)
        else:
            kept.append(s)
    if not kept:
        raise EmptyAfterFilterError("outlier filter removed every series")
    gamma = max(float(np.max(s.leverage - 1.0)) for s in kept)
    report = {"n_input": len(usable), "n_excluded": len(excluded),
              "n_kept": len(kept), "excluded_ids": excluded, "gamma": gamma}
    return gamma, report


def leverage_to_phi(series: BankSeries, gamma: float) -> BankSeries:
    """Fill the rescaled state phi = (leverage - 1) / gamma, clamped into (0, 1].

    Values above gamma + 1 are clamped to phi = 1 and counted in the flags.
    """
    phi = (series.leverage - 1.0) / gamma
    clamped = int(np.sum(phi > 1.0))
    if clamped:
        series.flags.append(f"{clamped} phi values clamped to 1")
    series.phi = np.clip(phi, None, 1.0)
    return series


def _as_list(series_set):
    if isinstance(series_set, dict):
        return list(series_set.values())
    return list(series_set)
