"""State-dependent noise kernel of the perturbed map.

The one-step transition from x is T(x) + Y where Y has the smoothed truncated
Gaussian density

    g_x(y) = c_x * chi_{s(x)}(y) * exp(-y^2 / (2 sigma_n(x)^2)),

supported on [-s(x), s(x)] with

    sigma_n(x) = b x^3 sqrt(1 - x^2) / (sqrt(n) (b x^2 + omega (1-x)^2)^(3/2)),
    s(x)       = sigma_1(x) / sigma_max * min(gap/2, T(1 - gap/2)).

Because chi_a(y) depends on y/a only, the standardized variable
Z = Y / sigma_n(x) has an x-independent law: a smoothed truncated standard
normal with cutoff b_n = sqrt(n) * s_scale / sigma_max.  All sampling,
densities, CDFs and quantiles factor through that single standardized law,
which keeps the Markov-chain and random-map views of the process in exact
agreement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad
from scipy.optimize import minimize_scalar
from scipy.special import ndtr, ndtri

from .errors import ConvergenceError, DomainError
from .mapcore import MapParams, _t_raw

SQRT2PI = np.sqrt(2.0 * np.pi)
DEFAULT_BUMP_EPS = 0.1
# Quantile bisection tolerance (absolute, in standardized units).
QUANTILE_TOL = 1e-12
# Cutoff above which the smoothed truncation is numerically invisible and the
# standardized law coincides with N(0,1) to double precision.
_GAUSSIAN_SHORTCUT = 12.0


def bump_chi(a: float, bump_eps: float, y):
    """Smooth plateau bump: 1 on |y| <= (1-eps)a, C-infinity shoulder, 0 outside.

    The shoulder is Psi(t) = exp(1 - 1/(1 - t^2)) with t the normalized
    distance into the shoulder, so the function is exactly 1 at the plateau
    edge and exactly 0 at |y| = a.
    """
    if a <= 0.0:
        raise DomainError("bump support radius must be positive")
    t = np.abs(np.asarray(y, dtype=float)) / a
    out = np.zeros_like(t)
    out[t <= 1.0 - bump_eps] = 1.0
    sh = (t > 1.0 - bump_eps) & (t < 1.0)
    u = (t[sh] - (1.0 - bump_eps)) / bump_eps
    out[sh] = np.exp(1.0 - 1.0 / (1.0 - u * u))
    return float(out) if np.ndim(y) == 0 else out


class _StdNoise:
    """Standardized smoothed truncated normal with cutoff b > 0.

    Density proportional to chi(z/b) exp(-z^2/2) on [-b, b].  The CDF is
    analytic (erf) on the plateau and tabulated by fine-grid quadrature on the
    two shoulders; the quantile is a bracketed bisection on that CDF.
    """

    _SHOULDER_PTS = 4097

    def __init__(self, cutoff: float, bump_eps: float):
        self.cutoff = float(cutoff)
        self.bump_eps = float(bump_eps)
        self.plateau_edge = (1.0 - bump_eps) * self.cutoff
        a, b = self.plateau_edge, self.cutoff
        zs = np.linspace(a, b, self._SHOULDER_PTS)
        vals = bump_chi(b, bump_eps, zs) * np.exp(-0.5 * zs * zs)
        cum = np.concatenate([[0.0], cumulative_trapezoid(vals, zs)])
        self._sh_z = zs
        self._sh_cum = cum
        self._shoulder_mass = cum[-1]
        self._plateau_mass = SQRT2PI * (ndtr(a) - ndtr(-a))
        self.total = self._plateau_mass + 2.0 * self._shoulder_mass
        self._gaussian_ok = a >= _GAUSSIAN_SHORTCUT
        self._q_z = None
        self._q_F = None

    def _quantile_table(self):
        # bracketing table for quantile bisection, built on first use: CDF
        # sampled on a z-grid mixing shoulder and probability-spaced plateau
        # points
        if self._q_z is None:
            a, b = self.plateau_edge, self.cutoff
            probs = np.linspace(ndtr(-a), ndtr(a), 2049)[1:-1]
            ztab = np.unique(np.concatenate([
                np.linspace(-b, -a, 257), ndtri(probs),
                np.linspace(a, b, 257)]))
            self._q_z = ztab
            self._q_F = self.cdf(ztab)
        return self._q_z, self._q_F

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        inside = np.abs(z) < self.cutoff
        zi = z[inside]
        out[inside] = bump_chi(self.cutoff, self.bump_eps, zi) * \
            np.exp(-0.5 * zi * zi) / self.total
        return out

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        a, b = self.plateau_edge, self.cutoff
        out = np.empty(z.shape)
        out[z <= -b] = 0.0
        out[z >= b] = 1.0
        m = (z > -b) & (z < -a)
        if m.any():
            out[m] = (self._shoulder_mass
                      - np.interp(-z[m], self._sh_z, self._sh_cum)) / self.total
        m = (z >= -a) & (z <= a)
        if m.any():
            out[m] = (self._shoulder_mass
                      + SQRT2PI * (ndtr(z[m]) - ndtr(-a))) / self.total
        m = (z > a) & (z < b)
        if m.any():
            out[m] = (self._shoulder_mass + self._plateau_mass
                      + np.interp(z[m], self._sh_z, self._sh_cum)) / self.total
        return out

    def quantile(self, eta):
        eta_arr = np.atleast_1d(np.asarray(eta, dtype=float))
        if np.any(eta_arr <= 0.0) or np.any(eta_arr >= 1.0):
            raise DomainError("quantile argument must lie in (0, 1)")
        if self._gaussian_ok:
            out = np.clip(ndtri(eta_arr), -self.cutoff, self.cutoff)
        else:
            q_z, q_F = self._quantile_table()
            idx = np.searchsorted(q_F, eta_arr)
            lo = q_z[np.clip(idx - 1, 0, len(q_z) - 1)]
            hi = q_z[np.clip(idx, 0, len(q_z) - 1)]
            lo = np.minimum(lo, hi - 0.0)
            width = float(np.max(hi - lo))
            n_iter = int(np.ceil(np.log2(max(width, 1e-15) / QUANTILE_TOL))) + 2
            if n_iter > 200:
                raise ConvergenceError("quantile bisection failed to bracket",
                                       residual=width)
            for _ in range(max(n_iter, 1)):
                mid = 0.5 * (lo + hi)
                below = self.cdf(mid) < eta_arr
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
            out = 0.5 * (lo + hi)
        return float(out[0]) if np.ndim(eta) == 0 else out

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Exact draws: inverse-transform truncated normal, bump-rejected."""
        b = self.cutoff
        lo, hi = ndtr(-b), ndtr(b)
        out = np.empty(size)
        need = np.arange(size)
        while need.size:
            z = ndtri(lo + rng.random(need.size) * (hi - lo))
            accept = rng.random(need.size) <= bump_chi(b, self.bump_eps, z)
            out[need[accept]] = z[accept]
            need = need[~accept]
        return out

    def variance(self) -> float:
        """Second moment by quadrature (plateau analytic, shoulders numeric)."""
        a, b = self.plateau_edge, self.cutoff
        # plateau: int z^2 e^{-z^2/2} = sqrt(2pi) Phi' stuff; use quad for clarity
        plateau, _ = quad(lambda z: z * z * np.exp(-0.5 * z * z), -a, a,
                          epsabs=1e-12, limit=200)
        shoulder, _ = quad(
            lambda z: z * z * float(bump_chi(b, self.bump_eps, z))
            * np.exp(-0.5 * z * z), a, b, epsabs=1e-12, limit=200)
        return (plateau + 2.0 * shoulder) / self.total


def _sigma1_raw(x, b, omega):
    """sigma_1(x), vectorized, zero outside (0, 1)."""
    x = np.asarray(x, dtype=float)
    d = b * x * x + omega * (1.0 - x) ** 2
    return b * x ** 3 * np.sqrt(np.clip(1.0 - x * x, 0.0, None)) / d ** 1.5


def _sigma1_prime_raw(x, b, omega):
    """d sigma_1 / dx on (0, 1), via logarithmic differentiation."""
    x = np.asarray(x, dtype=float)
    d = b * x * x + omega * (1.0 - x) ** 2
    s = _sigma1_raw(x, b, omega)
    return s * (3.0 / x - x / (1.0 - x * x) - 3.0 * (b * x - omega * (1.0 - x)) / d)


def _sigma_max(b: float, omega: float) -> float:
    """max over [0, 1] of sigma_1, grid-bracketed then locally refined."""
    xs = np.linspace(0.0, 1.0, 4001)
    vals = _sigma1_raw(xs, b, omega)
    i = int(np.argmax(vals))
    lo, hi = xs[max(i - 2, 0)], xs[min(i + 2, len(xs) - 1)]
    res = minimize_scalar(lambda x: -_sigma1_raw(x, b, omega),
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return float(max(-res.fun, vals[i]))


@dataclass
class NoiseKernel:
    """Transition kernel p(x, y) of the noisy map, with sampling and quantiles."""

    params: MapParams
    bump_eps: float = DEFAULT_BUMP_EPS
    sigma_max: float = field(init=False)
    s_scale: float = field(init=False)
    cutoff: float = field(init=False)  # b_n, support radius in sigma_n units
    _std: _StdNoise = field(init=False, repr=False)

    def __post_init__(self):
        if not (0.0 < self.bump_eps < 0.5):
            raise DomainError("bump_eps must lie in (0, 0.5)")
        p = self.params
        self.sigma_max = _sigma_max(p.b, p.omega)
        self.s_scale = min(p.gap / 2.0,
                           float(_t_raw(1.0 - p.gap / 2.0, p.b, p.omega)))
        n = p.n_rebalance
        if np.isinf(n):
            self.cutoff = np.inf
            self._std = None
        else:
            self.cutoff = float(np.sqrt(n) * self.s_scale / self.sigma_max)
            self._std = _StdNoise(self.cutoff, self.bump_eps)

    # -- scale functions ---------------------------------------------------

    def sigma_n(self, x):
        """Nominal noise scale sigma_n(x) at state x in [0, 1]."""
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < 0.0) or np.any(x_arr > 1.0):
            raise DomainError("sigma_n defined on [0, 1]")
        if np.isinf(self.params.n_rebalance):
            out = np.zeros_like(x_arr)
        else:
            out = _sigma1_raw(x_arr, self.params.b, self.params.omega) \
                / np.sqrt(self.params.n_rebalance)
        return float(out) if np.ndim(x) == 0 else out

    def sigma_n_prime(self, x):
        """Derivative of sigma_n, needed for the random-map cocycle."""
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr <= 0.0) or np.any(x_arr >= 1.0):
            raise DomainError("sigma_n_prime defined on (0, 1)")
        if np.isinf(self.params.n_rebalance):
            out = np.zeros_like(x_arr)
        else:
            out = _sigma1_prime_raw(x_arr, self.params.b, self.params.omega) \
                / np.sqrt(self.params.n_rebalance)
        return float(out) if np.ndim(x) == 0 else out

    def support_radius(self, x):
        """s(x): half-width of the noise support; zero for x <= 0."""
        x_arr = np.asarray(x, dtype=float)
        out = np.where(
            x_arr > 0.0,
            _sigma1_raw(np.clip(x_arr, 0.0, 1.0), self.params.b, self.params.omega)
            / self.sigma_max * self.s_scale,
            0.0)
        return float(out) if np.ndim(x) == 0 else out

    # -- densities and distribution functions -------------------------------

    def normalizer(self, x: float) -> float:
        """c_x: reciprocal of the unnormalized density integral at state x."""
        sig = self.sigma_n(x)
        if sig <= 0.0:
            raise DomainError("normalizer undefined where sigma_n vanishes")
        return 1.0 / (sig * self._std.total)

    def kernel_density(self, x: float, y):
        """Transition density p(x, y) of the one-step move from x."""
        if not (0.0 < x < 1.0):
            raise DomainError("kernel_density needs x in (0, 1)")
        tx = float(_t_raw(x, self.params.b, self.params.omega))
        sig = self.sigma_n(x)
        y_arr = np.asarray(y, dtype=float)
        out = self._std.pdf((y_arr - tx) / sig) / sig
        return float(out) if np.ndim(y) == 0 else out

    def step_cdf(self, x: float, y):
        """CDF of X_{t+1} given X_t = x, evaluated at y (vectorized)."""
        if not (0.0 < x < 1.0):
            raise DomainError("step_cdf needs x in (0, 1)")
        tx = float(_t_raw(x, self.params.b, self.params.omega))
        sig = self.sigma_n(x)
        return self._std.cdf((np.asarray(y, dtype=float) - tx) / sig)

    def quantile(self, x: float, eta):
        """Standardized noise quantile: inverse CDF of Z = Y / sigma_n(x).

        Strictly increasing in eta with quantile(x, 1/2) = 0; multiply by
        sigma_n(x) for the physical noise.  The law of Z does not depend on
        x, but x is validated to keep the state-kernel interface uniform.
        """
        if not (0.0 < x < 1.0):
            raise DomainError("quantile needs x in (0, 1)")
        return self._std.quantile(eta)

    # -- process views -------------------------------------------------------

    def sample_noise(self, x: float, rng: np.random.Generator, size=None):
        """Draw the physical noise Y at state x; |Y| <= s(x) always."""
        if not (0.0 < x < 1.0):
            raise DomainError("sample_noise needs x in (0, 1)")
        draws = self._std.sample(rng, 1 if size is None else int(size))
        out = self.sigma_n(x) * draws
        return float(out[0]) if size is None else out

    def random_map_eval(self, eta: float, x: float) -> float:
        """Random transformation view: T_eta(x) = T(x) + q(eta) sigma_n(x)."""
        if not (0.0 < x < 1.0):
            raise DomainError("random_map_eval needs x in (0, 1)")
        tx = float(_t_raw(x, self.params.b, self.params.omega))
        return tx + float(self._std.quantile(eta)) * self.sigma_n(x)

    def random_map_derivative(self, eta, x):
        """d/dx of T_eta: the cocycle derivative T'(x) + q(eta) sigma_n'(x)."""
        from .mapcore import _t_prime_raw
        q = self._std.quantile(eta)
        return _t_prime_raw(np.asarray(x, float), self.params.b, self.params.omega) \
            + q * self.sigma_n_prime(x)

    def standardized(self) -> _StdNoise:
        """The x-independent law of Z = Y / sigma_n(x)."""
        return self._std
