"""Stationary densities of the noisy chain via Ulam discretization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import sparse

from .errors import ConvergenceError, DomainError
from .mapcore import MapParams, orbit
from .noise import NoiseKernel, _sigma1_raw
from .simulate import Trajectory

DEFAULT_BINS = 2048
DEFAULT_TOL = 1e-12
MAX_POWER_ITER = 100_000
# Below this noise scale a transition row is numerically a point mass.
_DELTA_SIGMA = 1e-13


@dataclass
class Density:
    """Piecewise-constant probability density on a uniform grid over [0, 1]."""

    grid_bins: int
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise DomainError("density weights must be finite and nonnegative")
        total = self.weights.sum()
        if abs(total - 1.0) > 1e-10:
            raise DomainError(f"density weights sum to {total}, expected 1")

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.grid_bins + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """Midpoint quadrature of f against the density."""
        return float(self.weights @ np.asarray(f(self.centers), dtype=float))

    def l1_distance(self, other: "Density") -> float:
        a, b = self, other
        if a.grid_bins != b.grid_bins:
            if a.grid_bins > b.grid_bins:
                a, b = b, a
            factor = b.grid_bins // a.grid_bins
            if factor * a.grid_bins != b.grid_bins:
                raise DomainError("grids are not nested")
            a = Density(b.grid_bins, np.repeat(a.weights, factor) / factor)
        return float(np.abs(a.weights - b.weights).sum())

    def to_csv(self, path):
        e = self.edges
        with open(path, "w") as fh:
            fh.write("bin_left,weight\n")
            for left, w in zip(e[:-1], self.weights):
                fh.write(f"{float(left)!r},{float(w)!r}\n")


def support_interval(kernel: NoiseKernel, grid_n: int = 400_001) -> tuple[float, float]:
    """Confinement interval [eps, 1 - gap/2] of every stationary density.

    eps is the largest grid value such that T - s stays above the diagonal on
    (0, eps) and above eps itself on [eps, 1 - gap/2]; it depends on the map
    geometry only (the support radius s is shared by all rebalance times).
    """
    p = kernel.params
    hi = 1.0 - p.gap / 2.0
    grid = np.linspace(1e-9, hi, grid_n)
    from .mapcore import _t_raw
    margin = _t_raw(grid, p.b, p.omega) - kernel.support_radius(grid)
    above_diag = margin > grid
    no_fail_yet = np.cumsum(~above_diag) == 0
    suffix_min = np.minimum.accumulate(margin[::-1])[::-1]
    ok = no_fail_yet & (suffix_min >= grid)
    eps = float(grid[ok][-1]) if ok.any() else float(grid[0])
    return eps, hi


def ulam_matrix(kernel: NoiseKernel, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Row-stochastic transition matrix on a uniform bin grid over [0, 1].

    Row i is the exact kernel CDF of the move from the bin midpoint,
    differenced across bin edges.  Near-degenerate noise rows collapse to a
    point mass at T(x_i).  Rows whose support sticks out of [0, 1] (only the
    few bins above 1 - gap/2, which the chain never re-enters) are
    conditioned on [0, 1] so every row sums to one.
    """
    if bins < 16:
        raise DomainError("bins must be >= 16")
    p = kernel.params
    edges = np.linspace(0.0, 1.0, bins + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    from .mapcore import _t_raw
    tx = _t_raw(mids, p.b, p.omega)
    sig = kernel.sigma_n(mids)
    std = kernel.standardized()
    mat = np.zeros((bins, bins))
    for i in range(bins):
        if sig[i] < _DELTA_SIGMA:
            mat[i, min(int(tx[i] * bins), bins - 1)] = 1.0
        else:
            row = np.diff(std.cdf((edges - tx[i]) / sig[i]))
            mat[i] = row / row.sum()
    return mat


def stationary_density(matrix: np.ndarray, tol: float = DEFAULT_TOL,
                       start: Optional[np.ndarray] = None,
                       support: Optional[tuple[float, float]] = None,
                       rng: Optional[np.random.Generator] = None) -> Density:
    """Left fixed vector of the Ulam matrix by power iteration.

    The default start is uniform on the confinement interval when `support`
    is given, else uniform on [0, 1] excluding the first bin: the grid point
    at the origin is an artificial absorbing state (image of the fixed point
    0, unreachable from (0, 1)) that would otherwise trap starting mass.
    """
    bins = matrix.shape[0]
    if matrix.shape != (bins, bins):
        raise DomainError("matrix must be square")
    row_err = np.abs(matrix.sum(axis=1) - 1.0).max()
    if row_err > 1e-8:
        raise DomainError(f"matrix is not row-stochastic (error {row_err:.2e})")
    op = sparse.csr_matrix(matrix.T)
    mids = (np.arange(bins) + 0.5) / bins
    if start is not None:
        rho = np.asarray(start, dtype=float).copy()
    else:
        if support is not None:
            mask = (mids >= support[0]) & (mids <= support[1])
        else:
            mask = mids > 1.0 / bins
        rho = (rng.random(bins) if rng is not None else np.ones(bins)) * mask
    if rho.sum() <= 0:
        raise DomainError("starting vector has no mass")
    rho /= rho.sum()
    for _ in range(MAX_POWER_ITER):
        new = op @ rho
        new /= new.sum()
        change = float(np.abs(new - rho).sum())
        rho = new
        if change < tol:
            return Density(bins, rho)
    raise ConvergenceError(
        f"power iteration did not reach tol={tol} in {MAX_POWER_ITER} iterations",
        residual=change)


def invariance_residual(density: Density, matrix: np.ndarray) -> float:
    """L1 norm of rho M - rho."""
    rho = density.weights
    return float(np.abs(rho @ matrix - rho).sum())


def empirical_density(trajectory: Trajectory, bins: int = DEFAULT_BINS,
                      transient: int = 0) -> Density:
    """Normalized histogram of a trajectory after discarding a transient."""
    vals = np.asarray(trajectory.values, dtype=float)[transient:]
    if len(vals) < bins:
        raise DomainError("trajectory shorter than the bin count")
    counts, _ = np.histogram(vals, bins=bins, range=(0.0, 1.0))
    return Density(bins, counts / counts.sum())


def weak_star_convergence(params_base: MapParams, n_list: Sequence[float],
                          probe: Callable[[np.ndarray], np.ndarray],
                          bins: int = DEFAULT_BINS, tol: float = 1e-6,
                          birkhoff_steps: int = 2_000_000,
                          birkhoff_transient: int = 10_000):
    """Probe integrals against the stationary density along increasing n.

    Returns (values per n, deterministic reference) where the reference is a
    long noiseless Birkhoff average of the probe started near the critical
    point.  The density tolerance is laxer than the stationary default: at
    very large n the discretized operator is nearly deterministic and its
    peripheral spectrum stalls power iteration around 1e-7, far below what
    probe integrals resolve anyway.
    """
    if list(n_list) != sorted(n_list):
        raise DomainError("n_list must be increasing")
    vals = []
    for n in n_list:
        kernel = NoiseKernel(params_base.with_n(float(n)))
        dens = stationary_density(ulam_matrix(kernel, bins), tol=tol,
                                  support=support_interval(kernel))
        vals.append(dens.integrate(probe))
    xs = orbit(params_base, params_base.critical + 1e-3, birkhoff_steps,
               transient=birkhoff_transient)
    reference = float(np.mean(probe(xs)))
    return np.array(vals), reference
