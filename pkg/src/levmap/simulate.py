"""Trajectory generation: the reduced noisy map and the full slow-fast model."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .errors import DegenerateError, DomainError, NumericalError
from .mapcore import MapParams, make_params
from .noise import NoiseKernel


class TrajectoryKind(Enum):
    REDUCED = "Reduced"
    SLOW_FAST = "SlowFast"
    DETERMINISTIC = "Deterministic"


@dataclass
class Trajectory:
    values: np.ndarray
    seed: Optional[int]
    stride_k: int
    params: Optional[MapParams]
    kind: TrajectoryKind
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,value\n")
            for t, v in enumerate(self.values):
                fh.write(f"{t},{float(v)!r}\n")

    def envelope(self) -> dict:
        """Provenance record: everything needed to regenerate the series."""
        cfg = {"kind": self.kind.value, "seed": self.seed,
               "stride_k": self.stride_k, "length": len(self.values)}
        if self.params is not None:
            cfg["params"] = {"phi_star": self.params.phi_star,
                             "omega": self.params.omega,
                             "n_rebalance": self.params.n_rebalance}
        cfg.update(self.meta)
        return cfg

    def to_json(self, path):
        doc = self.envelope()
        doc["values"] = [float(v) for v in self.values]
        with open(path, "w") as fh:
            json.dump(doc, fh)


def _chain_scalar(params: MapParams, x0: float, n_steps: int,
                  noise_pool: np.ndarray) -> np.ndarray:
    """Full-resolution chain: x_{t+1} = T(x_t) + sigma_n(x_t) * Z_{t+1}.

    The standardized draws are pre-generated (they do not depend on the
    state), so the sequential loop is plain scalar arithmetic.
    """
    b, omega = params.b, params.omega
    sqn = math.sqrt(params.n_rebalance)
    out = np.empty(n_steps + 1)
    out[0] = x = float(x0)
    for t in range(n_steps):
        d = b * x * x + omega * (1.0 - x) ** 2
        tx = abs(x * (1.0 - x)) / math.sqrt(d)
        if 0.0 < x < 1.0:
            sig = b * x ** 3 * math.sqrt(max(1.0 - x * x, 0.0)) / (d * math.sqrt(d) * sqn)
        else:
            sig = 0.0
        x = tx + sig * noise_pool[t]
        out[t + 1] = x
    return out


def simulate_reduced(params: MapParams, x0: float, steps: int, stride_k: int = 1,
                     seed: int = 0, noise: bool = True,
                     kernel: Optional[NoiseKernel] = None) -> Trajectory:
    """Simulate the reduced chain and record every stride_k-th state.

    `steps` counts elementary chain steps; the recorded series is
    X_0, X_k, X_2k, ... (length floor(steps / k) + 1).  Recording is a
    subsample of the full-resolution chain, so stride-2 output equals every
    second element of the stride-1 output under the same seed.  With
    noise=False the chain is the deterministic orbit (the n -> infinity
    limit).
    """
    if not (0.0 < x0 < 1.0):
        raise DomainError("x0 must lie in (0, 1)")
    if steps < 1:
        raise DomainError("steps must be >= 1")
    if stride_k < 1:
        raise DomainError("stride_k must be >= 1")
    steps = int(steps)
    if noise and not np.isinf(params.n_rebalance):
        kernel = kernel or NoiseKernel(params)
        rng = np.random.default_rng(seed)
        pool = kernel.standardized().sample(rng, steps)
        kind = TrajectoryKind.REDUCED
    else:
        pool = np.zeros(steps)
        kind = TrajectoryKind.DETERMINISTIC
    full = _chain_scalar(params, x0, steps, pool)
    if not np.all(np.isfinite(full)):
        raise NumericalError("chain produced a non-finite state",
                             step=int(np.argmax(~np.isfinite(full))))
    values = full[::stride_k]
    return Trajectory(values=values, seed=seed, stride_k=int(stride_k),
                      params=params, kind=kind,
                      meta={"x0": x0, "steps": steps, "noise": bool(noise)})


def batch_chain(params_b, params_omega, n_rebalance, x0, n_steps, rng,
                kernels, record=None):
    """Step many chains at once; per-chain parameters are arrays.

    `kernels` maps chain index -> NoiseKernel (chains sharing a kernel share
    the standardized sampler).  `record(t, x)` is called after each step.
    Used by the Lyapunov sweeps where thousands of (parameter, realization)
    chains advance in lockstep.
    """
    x = np.array(x0, dtype=float)
    m = x.size
    b = np.broadcast_to(np.asarray(params_b, float), (m,))
    omega = np.broadcast_to(np.asarray(params_omega, float), (m,))
    sqn = np.sqrt(np.broadcast_to(np.asarray(n_rebalance, float), (m,)))
    groups = {}
    for i, k in enumerate(kernels):
        groups.setdefault(id(k), (k, []))[1].append(i)
    groups = [(k, np.array(idx)) for k, idx in groups.values()]
    z = np.empty(m)
    for t in range(n_steps):
        for k, idx in groups:
            z[idx] = k.standardized().sample(rng, idx.size)
        d = b * x * x + omega * (1.0 - x) ** 2
        tx = np.abs(x * (1.0 - x)) / np.sqrt(d)
        inside = (x > 0.0) & (x < 1.0)
        sig = np.where(
            inside,
            b * x ** 3 * np.sqrt(np.clip(1.0 - x * x, 0.0, None)) / (d ** 1.5 * sqn),
            0.0)
        x = tx + sig * z
        if record is not None:
            record(t, x)
    return x


# ---------------------------------------------------------------------------
# slow-fast model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SlowFastConfig:
    """Full model: VaR-constrained leverage with AR(1) fast returns."""

    alpha_var: float            # VaR multiplier
    sigma_eps_sq_agg: float     # Sigma_eps = sigma_eps^2 * n, scale-invariant
    gamma_liq: float
    omega: float
    n_rebalance: int
    lambda0: float

    def __post_init__(self):
        if self.alpha_var <= 0 or self.sigma_eps_sq_agg <= 0 or self.gamma_liq <= 0:
            raise DomainError("alpha_var, Sigma_eps and gamma_liq must be positive")
        # omega = 1 is the degenerate frozen-expectations case (leverage
        # stays constant); the reduced map itself needs omega < 1
        if not (0.0 < self.omega <= 1.0):
            raise DomainError("omega must lie in (0, 1]")
        if self.n_rebalance < 1:
            raise DomainError("n_rebalance must be >= 1")
        if self.lambda0 <= 1.0:
            raise DomainError("lambda0 must exceed 1")
        if not (0.0 < self.implied_phi_star() < 1.0):
            raise DomainError("implied phi_star outside (0, 1)")

    def implied_phi_star(self) -> float:
        a, g = self.alpha_var, self.gamma_liq
        root = math.sqrt(self.sigma_eps_sq_agg)
        return (1.0 - a * root) / (1.0 + a * g * root)

    def reduced_params(self) -> MapParams:
        return make_params(self.implied_phi_star(), self.omega,
                           self.n_rebalance, gamma_liq=self.gamma_liq)


def slowfast_config_for(phi_star: float, omega: float, n_rebalance: int,
                        gamma_liq: float = 100.0, alpha_var: float = 1.64,
                        lambda0: Optional[float] = None) -> SlowFastConfig:
    """Config whose implied fixed point equals the requested phi_star."""
    root = (1.0 - phi_star) / (alpha_var * (1.0 + gamma_liq * phi_star))
    if lambda0 is None:
        lambda0 = 1.0 + gamma_liq * phi_star
    return SlowFastConfig(alpha_var=alpha_var, sigma_eps_sq_agg=root * root,
                          gamma_liq=gamma_liq, omega=omega,
                          n_rebalance=int(n_rebalance), lambda0=lambda0)


def ar1_mle(series) -> tuple[float, float]:
    """Conditional maximum likelihood for a zero-mean AR(1).

    phi_hat regresses each value on its predecessor; sigma_hat is the root
    mean squared residual over the same pairs.
    """
    r = np.asarray(series, dtype=float)
    if len(r) < 3:
        raise DegenerateError("AR(1) estimation needs at least 3 values")
    prev, cur = r[:-1], r[1:]
    denom = float(prev @ prev)
    if denom == 0.0:
        raise DegenerateError("AR(1) regressor has zero energy")
    phi_hat = float(prev @ cur) / denom
    resid = cur - phi_hat * prev
    sigma_hat = math.sqrt(float(resid @ resid) / len(resid))
    return phi_hat, sigma_hat


def aggregated_variance(phi_hat: float, sigma_hat: float, n_rebalance: int) -> float:
    """Variance of the n-step sum of a stationary AR(1).

    Bracketed correction times n sigma^2 / (1 - phi^2); reduces to n sigma^2
    at phi = 0 and to the stationary variance at n = 1.
    """
    if not abs(phi_hat) < 1.0:
        raise DomainError("aggregated variance needs |phi_hat| < 1")
    n = int(n_rebalance)
    p = phi_hat
    bracket = (1.0
               + 2.0 * p * (1.0 - p ** n) / (1.0 - p)
               - 2.0 * ((n * p - n - 1.0) * p ** (n + 1) + p) / (n * (1.0 - p) ** 2))
    return bracket * n * sigma_hat ** 2 / (1.0 - p * p)


def _simulate_fast_interval(phi: float, sigma_eps: float, n: int,
                            rng: np.random.Generator) -> np.ndarray:
    """One slow interval of AR(1) returns, started from stationarity.

    Returns n + 1 values: the stationary initial return followed by the n
    within-interval returns.
    """
    r0 = rng.normal(0.0, sigma_eps / math.sqrt(max(1.0 - phi * phi, 1e-300)))
    eps = rng.normal(0.0, sigma_eps, n)
    r = lfilter([1.0], [1.0, -phi], eps, zi=np.array([phi * r0]))[0]
    return np.concatenate([[r0], r])


def simulate_slowfast(config: SlowFastConfig, steps: int, seed: int = 0) -> Trajectory:
    """Simulate the two-scale model and record the slow leverage series.

    Per slow step: simulate n AR(1) returns at the current autoregression
    phi = (lambda - 1) / gamma, re-estimate (phi_hat, sigma_hat) by
    conditional MLE, aggregate to an n-step variance, and update lambda
    through the VaR rule.  Updates that would push lambda to 1 or below are
    clamped to phi = 1e-6 and counted.
    """
    if steps < 1:
        raise DomainError("steps must be >= 1")
    rng = np.random.default_rng(seed)
    n = config.n_rebalance
    sigma_eps = math.sqrt(config.sigma_eps_sq_agg / n)
    lam = config.lambda0
    out = np.empty(steps + 1)
    out[0] = lam
    clamped = 0
    for t in range(1, steps + 1):
        phi = (lam - 1.0) / config.gamma_liq
        returns = _simulate_fast_interval(phi, sigma_eps, n, rng)
        phi_hat, sigma_hat = ar1_mle(returns)
        if abs(phi_hat) >= 1.0:
            phi_hat = math.copysign(1.0 - 1e-9, phi_hat)
        var_agg = aggregated_variance(phi_hat, sigma_hat, n)
        inv_sq = config.omega / (lam * lam) \
            + (1.0 - config.omega) * config.alpha_var ** 2 * var_agg
        if not (inv_sq > 0.0 and math.isfinite(inv_sq)):
            raise NumericalError("leverage update became non-finite", step=t)
        lam = inv_sq ** -0.5
        if lam <= 1.0:
            lam = 1.0 + config.gamma_liq * 1e-6
            clamped += 1
        out[t] = lam
    return Trajectory(values=out, seed=seed, stride_k=1, params=None,
                      kind=TrajectoryKind.SLOW_FAST,
                      meta={"config": {
                          "alpha_var": config.alpha_var,
                          "Sigma_eps": config.sigma_eps_sq_agg,
                          "gamma_liq": config.gamma_liq,
                          "omega": config.omega,
                          "n_rebalance": config.n_rebalance,
                          "lambda0": config.lambda0},
                          "clamped_updates": clamped})


def leverage_to_phi_values(values, gamma_liq: float) -> np.ndarray:
    """Transform a leverage series to the reduced-map state phi."""
    return (np.asarray(values, dtype=float) - 1.0) / gamma_liq
