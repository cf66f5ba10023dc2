"""Deterministic, average and random Lyapunov exponents; parameter sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateError, DomainError, InadmissibleError
from .mapcore import (MapParams, RegimeLabel, _t_prime_raw, _t_raw, classify,
                      is_admissible, make_params)
from .noise import NoiseKernel
from .measure import Density

# Integrand floor: log|T'| is L1 but unbounded at the critical point; hits
# below the floor are counted and reported rather than silently clipped.
DERIV_FLOOR = 1e-15
DEFAULT_TRANSIENT = 1000
DEFAULT_REALIZATIONS = 128
DEFAULT_STEPS = 10_000


@dataclass
class LyapunovReport:
    params: MapParams
    ale: Optional[float] = None
    rle: Optional[float] = None
    det: Optional[float] = None
    n_realizations: int = 0
    steps_per_realization: int = 0
    std_error: float = 0.0
    rle_std_error: float = 0.0
    floor_hits: int = 0
    regime: Optional[RegimeLabel] = None
    per_n: dict = field(default_factory=dict)


def lyap_deterministic(params: MapParams, x0: Optional[float] = None,
                       steps: int = 1_000_000,
                       transient: int = DEFAULT_TRANSIENT) -> float:
    """Birkhoff average of log|T'| along the noiseless orbit."""
    if steps < 1000:
        raise DomainError("steps must be >= 1000")
    b, omega = params.b, params.omega
    x = params.critical + 1e-3 if x0 is None else float(x0)
    if not (0.0 < x < 1.0):
        raise DomainError("x0 must lie in (0, 1)")
    for _ in range(transient):
        x = abs(x * (1.0 - x)) / math.sqrt(b * x * x + omega * (1.0 - x) ** 2)
    total = 0.0
    for _ in range(steps):
        d = b * x * x + omega * (1.0 - x) ** 2
        deriv = abs(((1.0 - 2.0 * x) * d - x * (1.0 - x) * (b * x - omega * (1.0 - x)))
                    / d ** 1.5)
        if deriv < DERIV_FLOOR:
            raise DegenerateError("orbit landed on the critical point")
        total += math.log(deriv)
        x = abs(x * (1.0 - x)) / math.sqrt(d)
    return total / steps


def _mc_exponent(kernel: NoiseKernel, realizations: int, steps: int, seed: int,
                 transient: int, use_random_maps: bool):
    """Shared Monte Carlo engine for the average and random exponents.

    Chains advance in lockstep across realizations.  The average exponent
    accumulates log|T'(X_t)| with noise drawn by rejection sampling; the
    random exponent drives the chain through the quantile representation and
    accumulates the cocycle derivative log|T'(x) + q(eta) sigma_n'(x)|.
    Both use per-step standardized draws with the identical law.
    """
    p = kernel.params
    b, omega = p.b, p.omega
    sqn = math.sqrt(p.n_rebalance)
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.05, 0.95, realizations)
    acc = np.zeros(realizations)
    floor_hits = 0
    std = kernel.standardized()
    deterministic = np.isinf(p.n_rebalance)
    total = transient + steps
    if deterministic:
        draws = None
    elif use_random_maps:
        # the step noises are i.i.d., so the quantile map can be applied to
        # the whole block at once instead of once per step
        eta = np.clip(rng.random(total * realizations), 1e-16, 1 - 1e-16)
        draws = np.asarray(std.quantile(eta)).reshape(total, realizations)
    else:
        draws = std.sample(rng, total * realizations).reshape(total, realizations)
    for t in range(total):
        z = 0.0 if deterministic else draws[t]
        d = b * x * x + omega * (1.0 - x) ** 2
        if t >= transient:
            deriv = ((1.0 - 2.0 * x) * d
                     - x * (1.0 - x) * (b * x - omega * (1.0 - x))) / d ** 1.5
            if use_random_maps and not deterministic:
                sig_prime = kernel.sigma_n_prime(np.clip(x, 1e-12, 1 - 1e-12))
                deriv = deriv + z * sig_prime
            mag = np.abs(deriv)
            low = mag < DERIV_FLOOR
            if low.any():
                floor_hits += int(low.sum())
                mag = np.maximum(mag, DERIV_FLOOR)
            acc += np.log(mag)
        tx = np.abs(x * (1.0 - x)) / np.sqrt(d)
        sig = np.where((x > 0.0) & (x < 1.0),
                       b * x ** 3 * np.sqrt(np.clip(1.0 - x * x, 0.0, None))
                       / (d ** 1.5 * sqn), 0.0)
        x = tx + sig * z
    per = acc / steps
    mean = float(per.mean())
    se = float(per.std(ddof=1) / math.sqrt(realizations)) if realizations > 1 else 0.0
    return mean, se, floor_hits


def lyap_average(kernel: NoiseKernel, realizations: int = DEFAULT_REALIZATIONS,
                 steps: int = DEFAULT_STEPS, seed: int = 0,
                 transient: int = DEFAULT_TRANSIENT) -> LyapunovReport:
    """Average Lyapunov exponent: ensemble mean of Birkhoff sums of log|T'|."""
    if realizations < 1:
        raise DomainError("realizations must be >= 1")
    ale, se, hits = _mc_exponent(kernel, realizations, steps, seed, transient,
                                 use_random_maps=False)
    return LyapunovReport(params=kernel.params, ale=ale, std_error=se,
                          n_realizations=realizations,
                          steps_per_realization=steps, floor_hits=hits)


def lyap_random(kernel: NoiseKernel, realizations: int = DEFAULT_REALIZATIONS,
                steps: int = DEFAULT_STEPS, seed: int = 0,
                transient: int = DEFAULT_TRANSIENT) -> LyapunovReport:
    """Random (cocycle) Lyapunov exponent along random-map orbits."""
    if realizations < 1:
        raise DomainError("realizations must be >= 1")
    rle, se, hits = _mc_exponent(kernel, realizations, steps, seed, transient,
                                 use_random_maps=True)
    return LyapunovReport(params=kernel.params, rle=rle, rle_std_error=se,
                          n_realizations=realizations,
                          steps_per_realization=steps, floor_hits=hits)


def lyap_average_from_density(params: MapParams, density: Density) -> float:
    """Quadrature of log|T'| against a stationary density.

    The bin containing the critical point is integrated analytically: with a
    quadratic critical point, log|T'| ~ log(kappa |x - c|) there, whose bin
    average is log(kappa w_half) - 1 on each half-bin of width w_half.
    """
    c = params.critical
    centers = density.centers
    w = 1.0 / density.grid_bins
    i_crit = min(int(c * density.grid_bins), density.grid_bins - 1)
    out = 0.0
    # local slope of T' at c from the analytic derivative
    h = 1e-6
    kappa = abs(float(_t_prime_raw(c + h, params.b, params.omega))
                - float(_t_prime_raw(c - h, params.b, params.omega))) / (2 * h)
    for i, (x, wt) in enumerate(zip(centers, density.weights)):
        if wt == 0.0:
            continue
        if i == i_crit:
            # average of log(kappa |x-c|) over the bin, split at c
            left = c - i * w
            right = (i + 1) * w - c
            parts = []
            for seg in (left, right):
                if seg > 0:
                    parts.append(seg * (math.log(kappa * seg) - 1.0))
            out += wt * (sum(parts) / (left + right))
        else:
            d = abs(float(_t_prime_raw(min(max(x, 1e-12), 1 - 1e-12),
                                       params.b, params.omega)))
            out += wt * math.log(max(d, DERIV_FLOOR))
    return out


def bifurcation_scan(omega: float, phi_star_range: tuple[float, float],
                     n_points: int, iterates_kept: int = 100,
                     transient: int = 2000):
    """Last iterates of long noiseless orbits across a phi_star range.

    Returns (phi values, array of kept iterates per phi, skipped list); the
    skipped list records inadmissible parameter points.
    """
    lo, hi = phi_star_range
    phis = np.linspace(lo, hi, n_points)
    kept = np.full((n_points, iterates_kept), np.nan)
    skipped = []
    for i, ph in enumerate(phis):
        if not is_admissible(ph, omega):
            skipped.append(float(ph))
            continue
        p = make_params(ph, omega)
        x = p.critical + 1e-3
        b = p.b
        for _ in range(transient):
            x = abs(x * (1.0 - x)) / math.sqrt(b * x * x + omega * (1.0 - x) ** 2)
        for j in range(iterates_kept):
            kept[i, j] = x
            x = abs(x * (1.0 - x)) / math.sqrt(b * x * x + omega * (1.0 - x) ** 2)
    return phis, kept, skipped


def lyap_slice(omega: float, phi_star_values: Sequence[float], n_rebalance: float,
               realizations: int = 32, steps: int = 4000, seed: int = 0,
               transient: int = DEFAULT_TRANSIENT):
    """Average exponent along a phi_star slice (deterministic for n = inf).

    All (point, realization) chains advance together; per-point seeds derive
    from the master seed so the slice is reproducible point by point.
    """
    results = np.full(len(phi_star_values), np.nan)
    errors = np.full(len(phi_star_values), np.nan)
    seeds = np.random.SeedSequence(seed).spawn(len(phi_star_values))
    for i, ph in enumerate(phi_star_values):
        if not is_admissible(ph, omega):
            continue
        params = make_params(ph, omega, n_rebalance)
        if np.isinf(n_rebalance):
            results[i] = lyap_deterministic(params, steps=max(steps * 25, 200_000))
            errors[i] = 0.0
        else:
            rep = lyap_average(NoiseKernel(params), realizations, steps,
                               seed=int(seeds[i].generate_state(1)[0]),
                               transient=transient)
            results[i] = rep.ale
            errors[i] = rep.std_error
    return results, errors


def sweep_grid(phi_star_grid: Sequence[float], omega_grid: Sequence[float],
               n_rebalance: float, realizations: int = 16, steps: int = 2000,
               seed: int = 0, with_regime: bool = True):
    """ALE (or deterministic exponent for n = inf) over a parameter grid.

    Returns a list of row dicts (one per admissible cell); inadmissible cells
    are flagged rather than silently zeroed.
    """
    rows = []
    seeds = np.random.SeedSequence(seed).spawn(len(phi_star_grid) * len(omega_grid))
    idx = 0
    for om in omega_grid:
        for ph in phi_star_grid:
            cell = {"phi_star": float(ph), "omega": float(om),
                    "n": n_rebalance, "admissible": True}
            try:
                params = make_params(ph, om, n_rebalance if np.isfinite(n_rebalance) else 1.0)
            except (DomainError, InadmissibleError) as exc:
                cell.update(admissible=False, error=str(exc))
                rows.append(cell)
                idx += 1
                continue
            if with_regime:
                label = classify(params)
                cell["regime"] = label.regime.value
                cell["periodic"] = label.periodic
            if np.isinf(n_rebalance):
                cell["det"] = lyap_deterministic(params, steps=max(steps * 25, 100_000))
            else:
                rep = lyap_average(NoiseKernel(params), realizations, steps,
                                   seed=int(seeds[idx].generate_state(1)[0]))
                cell["ale"] = rep.ale
                cell["stderr"] = rep.std_error
            rows.append(cell)
            idx += 1
    return rows


def table_row(phi_star: float, omega: float, n_values: Sequence[float],
              realizations: int = DEFAULT_REALIZATIONS, steps: int = DEFAULT_STEPS,
              seed: int = 0) -> LyapunovReport:
    """Full report for one parameter pair: ALE/RLE per n plus deterministic."""
    params = make_params(phi_star, omega)
    report = LyapunovReport(params=params, n_realizations=realizations,
                            steps_per_realization=steps)
    report.det = lyap_deterministic(params)
    report.regime = classify(params)
    per_n = {}
    for j, n in enumerate(n_values):
        kernel = NoiseKernel(params.with_n(n))
        a = lyap_average(kernel, realizations, steps, seed=seed + 2 * j)
        r = lyap_random(kernel, realizations, steps, seed=seed + 2 * j + 1)
        per_n[n] = {"ale": a.ale, "ale_se": a.std_error,
                    "rle": r.rle, "rle_se": r.rle_std_error}
    report.per_n = per_n
    return report
