"""Closed-form unimodal map, its derivatives, and parameter-regime classification.

The map on [0, 1] is

    T(x) = |x (1 - x)| / sqrt(b x^2 + omega (1 - x)^2),

with b = (1 - omega) ((1 - phi_star) / phi_star)^2, so that phi_star is the
nontrivial fixed point.  T is strictly unimodal with quadratic critical point
c = (1 + (b / omega)^(1/3))^(-1) and peak value T(c) < 1 for admissible
parameters.  The domain is extended to [-gap, 0) by mirroring (values there
are only visited transiently by the noisy chain).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DomainError, InadmissibleError, SingularError

# Admissibility margin for the peak value T(c) < 1.
PEAK_MARGIN = 1e-12


class Regime(Enum):
    """Parameter regime of the deterministic map."""

    C1_FIXED_POINT = "C1_FixedPoint"
    C2_TWO_CYCLE = "C2_TwoCycle"
    C3_DYNAMICAL_CORE = "C3_DynamicalCore"


@dataclass(frozen=True)
class RegimeLabel:
    regime: Regime
    # Only meaningful inside the dynamical core: whether an attracting cycle
    # was found (C1/C2 always have one by construction).
    periodic_attractor: Optional[bool] = None

    @property
    def is_core(self) -> bool:
        return self.regime is Regime.C3_DYNAMICAL_CORE

    @property
    def periodic(self) -> bool:
        """True when the deterministic map has an attracting cycle."""
        if self.regime is Regime.C3_DYNAMICAL_CORE:
            return bool(self.periodic_attractor)
        return True


@dataclass(frozen=True)
class MapParams:
    """Identity of the model: (phi_star, omega, n_rebalance) plus derived geometry."""

    phi_star: float
    omega: float
    n_rebalance: float
    b: float
    critical: float       # critical point c
    peak: float           # T(c)
    gap: float            # 1 - T(c)
    gamma_liq: Optional[float] = None

    def with_n(self, n_rebalance: float) -> "MapParams":
        """Same map, different rebalance time."""
        return make_params(self.phi_star, self.omega, n_rebalance,
                           gamma_liq=self.gamma_liq)


def _b_from(phi_star: float, omega: float) -> float:
    return (1.0 - omega) * ((1.0 - phi_star) / phi_star) ** 2


def make_params(phi_star: float, omega: float, n_rebalance: float = 1.0,
                gamma_liq: Optional[float] = None) -> MapParams:
    """Validate parameters and compute the derived map geometry.

    Raises
    ------
    DomainError
        If phi_star or omega is outside (0, 1), or n_rebalance < 1.
    InadmissibleError
        If the peak value T(c) reaches 1 (the noise construction needs
        a positive gap).
    """
    if not (0.0 < phi_star < 1.0):
        raise DomainError(f"phi_star must lie in (0, 1), got {phi_star}")
    if not (0.0 < omega < 1.0):
        raise DomainError(f"omega must lie in (0, 1), got {omega}")
    if not (n_rebalance >= 1.0):
        raise DomainError(f"n_rebalance must be >= 1, got {n_rebalance}")
    if gamma_liq is not None and not (gamma_liq > 0.0):
        raise DomainError(f"gamma_liq must be positive, got {gamma_liq}")
    b = _b_from(phi_star, omega)
    c = 1.0 / (1.0 + (b / omega) ** (1.0 / 3.0))
    peak = float(_t_raw(c, b, omega))
    if not peak < 1.0 - PEAK_MARGIN:
        raise InadmissibleError(
            f"T(c) = {peak:.6f} >= 1 for (phi_star={phi_star}, omega={omega})")
    return MapParams(phi_star=phi_star, omega=omega, n_rebalance=float(n_rebalance),
                     b=b, critical=c, peak=peak, gap=1.0 - peak,
                     gamma_liq=gamma_liq)


def is_admissible(phi_star: float, omega: float) -> bool:
    """True when (phi_star, omega) passes make_params validation."""
    try:
        make_params(phi_star, omega)
        return True
    except (DomainError, InadmissibleError):
        return False


def _t_raw(x, b, omega):
    """T on [0, 1] without domain checks; vectorized."""
    x = np.asarray(x, dtype=float)
    return np.abs(x * (1.0 - x)) / np.sqrt(b * x * x + omega * (1.0 - x) ** 2)


def _t_prime_raw(x, b, omega):
    """Analytic T' on (0, 1); vectorized, signed."""
    x = np.asarray(x, dtype=float)
    d = b * x * x + omega * (1.0 - x) ** 2
    num = (1.0 - 2.0 * x) * d - x * (1.0 - x) * (b * x - omega * (1.0 - x))
    return num / d ** 1.5


def eval_T(params: MapParams, x):
    """Evaluate the map on [-gap, 1]; mirror extension on the negative side.

    For x in [-gap, 0) the value is T(min(-x, c)): continuous at 0, positive
    and decreasing, clamped at the critical point when gap > c.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < -params.gap - 1e-12) or np.any(x_arr > 1.0 + 1e-12):
        raise DomainError(f"x outside [-{params.gap:.6g}, 1]")
    arg = np.where(x_arr < 0.0, np.minimum(-x_arr, params.critical),
                   np.clip(x_arr, 0.0, 1.0))
    out = _t_raw(arg, params.b, params.omega)
    return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out


def eval_T_prime(params: MapParams, x):
    """Signed derivative of T on (0, 1); zero exactly at the critical point."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0) or np.any(x_arr >= 1.0):
        raise DomainError("derivative defined on the open interval (0, 1)")
    out = _t_prime_raw(x_arr, params.b, params.omega)
    return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out


def schwarzian(params: MapParams, x: float, step: float = 1e-4) -> float:
    """Schwarzian derivative T'''/T' - 1.5 (T''/T')^2 by finite differences.

    T'' and T''' come from 5-point central stencils applied to the analytic
    first derivative, so only two orders are differenced numerically.
    """
    if not (0.0 < x < 1.0):
        raise DomainError("Schwarzian defined on (0, 1)")
    if abs(x - params.critical) < 1e-8:
        raise SingularError("Schwarzian is singular at the critical point")
    h = min(step, 0.25 * min(x, 1.0 - x))
    pts = x + h * np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    d1 = _t_prime_raw(pts, params.b, params.omega)
    t2 = (d1[0] - 8.0 * d1[1] + 8.0 * d1[3] - d1[4]) / (12.0 * h)
    t3 = (-d1[0] + 16.0 * d1[1] - 30.0 * d1[2] + 16.0 * d1[3] - d1[4]) / (12.0 * h * h)
    t1 = d1[2]
    return float(t3 / t1 - 1.5 * (t2 / t1) ** 2)


def iterate_T(params: MapParams, x0: float, steps: int):
    """steps-fold composition of T starting at x0 in [0, 1]."""
    if not (0.0 <= x0 <= 1.0):
        raise DomainError("x0 must lie in [0, 1]")
    b, omega = params.b, params.omega
    x = float(x0)
    for _ in range(int(steps)):
        x = abs(x * (1.0 - x)) / math.sqrt(b * x * x + omega * (1.0 - x) ** 2)
    return x


def orbit(params: MapParams, x0: float, steps: int, transient: int = 0) -> np.ndarray:
    """Noiseless orbit of length `steps` recorded after `transient` burn-in."""
    if not (0.0 <= x0 <= 1.0):
        raise DomainError("x0 must lie in [0, 1]")
    b, omega = params.b, params.omega
    x = float(x0)
    for _ in range(int(transient)):
        x = abs(x * (1.0 - x)) / math.sqrt(b * x * x + omega * (1.0 - x) ** 2)
    out = np.empty(int(steps))
    for t in range(int(steps)):
        out[t] = x
        x = abs(x * (1.0 - x)) / math.sqrt(b * x * x + omega * (1.0 - x) ** 2)
    return out


def find_attracting_cycle(params: MapParams, max_period: int = 64,
                          transient: int = 10_000, tol: float = 1e-9):
    """Search for an attracting cycle along the critical orbit.

    Returns (period, multiplier) or None.  The critical orbit converges to
    any attracting cycle of an S-unimodal map, which makes x0 = c the right
    probe point.  The multiplier |(T^p)'| < 1 is verified along the cycle.
    """
    x = iterate_T(params, params.critical, transient)
    pts = np.empty(max_period + 1)
    pts[0] = x
    for i in range(1, max_period + 1):
        x = iterate_T(params, x, 1)
        pts[i] = x
    for p in range(1, max_period + 1):
        if abs(pts[p] - pts[0]) < tol:
            mult = 1.0
            y = pts[0]
            degenerate = False
            for _ in range(p):
                if not (0.0 < y < 1.0):
                    degenerate = True
                    break
                mult *= float(_t_prime_raw(y, params.b, params.omega))
                y = iterate_T(params, y, 1)
            if degenerate:
                continue
            if abs(mult) < 1.0:
                return p, mult
    return None


def classify(params: MapParams, detect_cycles: bool = True) -> RegimeLabel:
    """C1/C2/C3 regime of the deterministic map.

    C1: peak <= c (globally attracting fixed point).
    C2: c < T(peak) < peak (attracting fixed point or 2-cycle above c).
    C3: T(peak) < c < peak (dynamical core [T(peak), peak] maps onto itself);
        the label also records whether an attracting cycle exists inside the
        core, found by orbit search from the critical point (skipped when
        detect_cycles is false, leaving the sub-flag unset).
    """
    c, peak = params.critical, params.peak
    if peak <= c:
        return RegimeLabel(Regime.C1_FIXED_POINT)
    t_peak = eval_T(params, peak)
    if t_peak >= c:
        return RegimeLabel(Regime.C2_TWO_CYCLE)
    if not detect_cycles:
        return RegimeLabel(Regime.C3_DYNAMICAL_CORE)
    cycle = find_attracting_cycle(params)
    return RegimeLabel(Regime.C3_DYNAMICAL_CORE, periodic_attractor=cycle is not None)
