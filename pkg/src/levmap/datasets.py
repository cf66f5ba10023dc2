"""Training-set generation for the neural parameter estimator.

Shared file contract: training CSV columns `s0..s58,k,phi_star,omega,n,seed`;
prediction CSV columns `row_id,k_hat,phi_star_hat,omega_hat`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .mapcore import MapParams, is_admissible, make_params
from .noise import NoiseKernel
from .simulate import simulate_reduced

DEFAULT_LENGTH = 59
DEFAULT_N_RANGE = (1.0, 1e4)


@dataclass(frozen=True)
class TrainingRecord:
    series: np.ndarray
    k_iterate: int
    phi_star: float
    omega: float
    n_rebalance: float
    seed: int


def sample_admissible(rng: np.random.Generator) -> tuple[float, float]:
    """Uniform draw of (phi_star, omega) over the admissible region."""
    while True:
        phi_star = rng.uniform(0.0, 1.0)
        omega = rng.uniform(0.0, 1.0)
        if is_admissible(phi_star, omega):
            return phi_star, omega


def make_record(rng_seed: int, k_set: Sequence[int],
                n_range: tuple[float, float],
                length: int = DEFAULT_LENGTH) -> TrainingRecord:
    """One training record: admissible params, log-uniform n, uniform x0."""
    rng = np.random.default_rng(rng_seed)
    phi_star, omega = sample_admissible(rng)
    k = int(rng.choice(list(k_set)))
    n = float(np.exp(rng.uniform(math.log(n_range[0]), math.log(n_range[1]))))
    params = make_params(phi_star, omega, n)
    x0 = rng.uniform(0.0, 1.0)
    x0 = min(max(x0, 1e-9), 1.0 - 1e-9)
    traj = simulate_reduced(params, x0, steps=(length - 1) * k, stride_k=k,
                            seed=int(rng.integers(2 ** 31)))
    return TrainingRecord(series=traj.values, k_iterate=k, phi_star=phi_star,
                          omega=omega, n_rebalance=n, seed=rng_seed)


def gen_training_set(path, count: int, length: int = DEFAULT_LENGTH,
                     k_set: Sequence[int] = (1, 2, 3),
                     n_range: tuple[float, float] = DEFAULT_N_RANGE,
                     seed: int = 0) -> int:
    """Write `count` training records to CSV under the shared contract."""
    if count < 1:
        raise DomainError("count must be >= 1")
    seeds = np.random.SeedSequence(seed).spawn(count)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"s{i}" for i in range(length)]
                        + ["k", "phi_star", "omega", "n", "seed"])
        for i in range(count):
            rec = make_record(int(seeds[i].generate_state(1)[0] % (2 ** 31)), k_set,
                              n_range, length)
            writer.writerow([repr(float(v)) for v in rec.series]
                            + [rec.k_iterate, repr(rec.phi_star),
                               repr(rec.omega), repr(rec.n_rebalance), rec.seed])
    return count


def read_training_set(path):
    """Load a training CSV back into arrays (series, k, phi_star, omega, n)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n_series = sum(1 for h in header if h.startswith("s") and h[1:].isdigit())
        rows = list(reader)
    series = np.array([[float(v) for v in row[:n_series]] for row in rows])
    k = np.array([int(row[n_series]) for row in rows])
    phi = np.array([float(row[n_series + 1]) for row in rows])
    omega = np.array([float(row[n_series + 2]) for row in rows])
    n = np.array([float(row[n_series + 3]) for row in rows])
    return series, k, phi, omega, n


def admissible_area_profile(grid: int = 500):
    """Admissible-region indicator on a (phi_star, omega) grid.

    Used as the area oracle for the marginal-uniformity checks on generated
    datasets; evaluates the peak condition T(c) < 1 in closed form.
    """
    phis = (np.arange(grid) + 0.5) / grid
    omegas = (np.arange(grid) + 0.5) / grid
    pp, oo = np.meshgrid(phis, omegas, indexing="ij")
    b = (1.0 - oo) * ((1.0 - pp) / pp) ** 2
    c = 1.0 / (1.0 + (b / oo) ** (1.0 / 3.0))
    peak = c * (1.0 - c) / np.sqrt(b * c * c + oo * (1.0 - c) ** 2)
    mask = peak < 1.0 - 1e-12
    return phis, omegas, mask


def predicted_residual_variance(params: MapParams, states: np.ndarray,
                                k: int) -> float:
    """Model residual variance of x_{t+k} - T^k(x_t) along observed states.

    Noise injected j steps before the observation is amplified by the
    product of intermediate derivatives; contributions add in variance.
    """
    from .mapcore import _t_prime_raw, _t_raw
    kernel = NoiseKernel(params)
    z_var = kernel.standardized().variance()
    total = 0.0
    count = 0
    for x in states:
        x = float(min(max(x, 1e-9), 1 - 1e-9))
        path = [x]
        for _ in range(k - 1):
            path.append(float(_t_raw(path[-1], params.b, params.omega)))
        var = 0.0
        amp = 1.0
        for j in range(k - 1, -1, -1):
            sig = kernel.sigma_n(min(max(path[j], 0.0), 1.0))
            var += (amp * sig) ** 2 * z_var
            if j > 0:
                amp *= float(_t_prime_raw(
                    min(max(path[j], 1e-9), 1 - 1e-9), params.b, params.omega))
        total += var
        count += 1
    return total / max(count, 1)


def estimate_n_for_series(series: np.ndarray, phi_star: float, omega: float,
                          k: int, n_bounds: tuple[float, float] = (1.0, 1e9)) -> float:
    """Match observed k-step residual variance to the model by root finding.

    With (phi_star, omega, k) fixed, the returned n equates the predicted
    residual variance to the empirical variance of x_{t+1} - T^k(x_t) over
    the observed series.  Identifiability caveat: when the truncation cutoff
    sqrt(n) * s_scale / sigma_max stays below ~2, the noise law is close to
    the n-independent uniform on its support and the residual variance
    barely moves with n; the root can then sit anywhere in a wide flat
    region (it is clipped to n_bounds).
    """
    from .mapcore import _t_raw
    x = np.asarray(series, dtype=float)
    if len(x) < 3:
        raise DomainError("series too short for noise-level estimation")
    params1 = make_params(phi_star, omega, 1.0)
    pred = np.clip(x[:-1], 1e-9, 1 - 1e-9)
    for _ in range(k):
        pred = _t_raw(pred, params1.b, params1.omega)
    emp_var = float(np.mean((x[1:] - pred) ** 2))
    if emp_var <= 0.0:
        return n_bounds[1]
    states = np.clip(x[:-1], 1e-9, 1 - 1e-9)

    def gap(log_n):
        params = make_params(phi_star, omega, math.exp(log_n))
        return predicted_residual_variance(params, states, k) - emp_var

    lo, hi = math.log(n_bounds[0]), math.log(n_bounds[1])
    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo <= 0.0:
        return n_bounds[0]
    if g_hi >= 0.0:
        return n_bounds[1]
    return math.exp(brentq(gap, lo, hi, xtol=1e-10))
