"""Traffic-model closures for the inhomogeneous ARZ system.

Equilibrium flow Q(rho) (smoothed Newell-Daganzo), desired speed
U(rho) = Q(rho)/rho, hesitation h(rho), their closed-form derivatives,
characteristic speeds, and the sub-characteristic (linear stability)
condition.  All quantities are SI: meters, seconds, vehicles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq


class DomainError(ValueError):
    """Argument outside the physical domain of a model closure."""


class MultipleViolationIntervalsError(RuntimeError):
    """Stability margin changes sign more than twice; lists all intervals."""

    def __init__(self, intervals):
        self.intervals = list(intervals)
        super().__init__(
            f"expected a single SCC violation interval, found {len(self.intervals)}: "
            f"{self.intervals}"
        )


@dataclass(frozen=True)
class ModelParams:
    """Physical constants and closure parameters.

    ``c`` defaults to the calibrated flow scale 0.078 * u_max * rho_max
    when not given explicitly.  Instances are immutable and safe to share
    across workers.
    """

    u_max: float = 20.0            # free-road speed [m/s]
    rho_max: float = 1.0 / 7.5     # bumper-to-bumper density [veh/m]
    b: float = 1.0 / 3.0           # flow-shape parameter
    c: float | None = None         # flow scale [veh/s]
    lambda_fd: float = 0.1         # flow smoothing parameter
    beta: float = 8.0              # hesitation scale [m/s]
    gamma: float = 0.5             # hesitation exponent
    tau: float = 5.0               # relaxation time [s]

    def __post_init__(self):
        if self.c is None:
            object.__setattr__(self, "c", 0.078 * self.u_max * self.rho_max)
        if not (self.u_max > 0 and self.rho_max > 0 and self.c > 0):
            raise ValueError("u_max, rho_max and c must be positive")
        if not (self.lambda_fd > 0 and self.beta > 0):
            raise ValueError("lambda_fd and beta must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    def with_tau(self, tau: float) -> "ModelParams":
        return ModelParams(self.u_max, self.rho_max, self.b, self.c,
                           self.lambda_fd, self.beta, self.gamma, tau)

    @classmethod
    def from_file(cls, path) -> "ModelParams":
        """Load parameters from a plain-text ``key = value`` file.

        Keys are exactly the field names; unknown keys raise ValueError.
        Lines starting with ``#`` and blank lines are ignored.
        """
        return cls(**read_config(path, allowed=cls.__dataclass_fields__.keys()))


def read_config(path, allowed=None) -> dict:
    """Parse a flat ``key = value`` config file into a dict of floats/strings."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            if allowed is not None and key not in allowed:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = float(val)
            except ValueError:
                out[key] = val
    return out


def _prep(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


# -- fundamental diagram ----------------------------------------------------

def _g(y, p: ModelParams):
    return np.sqrt(1.0 + ((y - p.b) / p.lambda_fd) ** 2)


def _dg(y, p: ModelParams):
    return (y - p.b) / (p.lambda_fd ** 2 * _g(y, p))


def _d2g(y, p: ModelParams):
    return 1.0 / (p.lambda_fd ** 2 * _g(y, p) ** 3)


def _check_range(rho, p, lo=0.0, hi=None, lo_open=False, hi_open=False, what="rho"):
    hi = p.rho_max if hi is None else hi
    bad_lo = np.any(rho <= lo) if lo_open else np.any(rho < lo)
    bad_hi = np.any(rho >= hi) if hi_open else np.any(rho > hi)
    if bad_lo or bad_hi:
        lob = "(" if lo_open else "["
        hib = ")" if hi_open else "]"
        raise DomainError(f"{what} outside {lob}{lo}, {hi}{hib}")


def _flow(rho, p: ModelParams):
    y = rho / p.rho_max
    g0 = _g(0.0, p)
    g1 = _g(1.0, p)
    return p.c * (g0 + (g1 - g0) * y - _g(y, p))


def _mu(rho, p: ModelParams):
    g0 = _g(0.0, p)
    g1 = _g(1.0, p)
    return p.c / p.rho_max * ((g1 - g0) - _dg(rho / p.rho_max, p))


def flow_Q(rho, p: ModelParams):
    """Smoothed Newell-Daganzo equilibrium flow; zero at rho = 0 and rho_max."""
    rho, scalar = _prep(rho)
    _check_range(rho, p)
    return _ret(_flow(rho, p), scalar)


def nd_flow(rho, p: ModelParams):
    """Piecewise-linear Newell-Daganzo flow with critical density rho_max/3."""
    rho, scalar = _prep(rho)
    _check_range(rho, p)
    rho_c = p.rho_max / 3.0
    q_max = p.u_max * rho_c
    out = np.where(
        rho < rho_c,
        q_max * rho / rho_c,
        q_max * (p.rho_max - rho) / (p.rho_max - rho_c),
    )
    return _ret(out, scalar)


def greenshields_flow(rho, p: ModelParams):
    """Quadratic flow u_max * rho * (1 - rho/rho_max)."""
    rho, scalar = _prep(rho)
    _check_range(rho, p)
    return _ret(p.u_max * rho * (1.0 - rho / p.rho_max), scalar)


def mu(rho, p: ModelParams):
    """First-order (LWR) characteristic speed Q'(rho)."""
    rho, scalar = _prep(rho)
    _check_range(rho, p)
    return _ret(_mu(rho, p), scalar)


def d2Q(rho, p: ModelParams):
    """Second derivative of the flow; strictly negative (Q concave)."""
    rho, scalar = _prep(rho)
    _check_range(rho, p)
    return _ret(-p.c / p.rho_max ** 2 * _d2g(rho / p.rho_max, p), scalar)


# -- desired speed and hesitation -------------------------------------------

def desired_speed_U(rho, p: ModelParams):
    """Equilibrium speed Q(rho)/rho, extended to rho = 0 by its limit Q'(0)."""
    rho, scalar = _prep(rho)
    _check_range(rho, p)
    pos = rho > 0.0
    out = np.where(pos, _flow(rho, p) / np.where(pos, rho, 1.0), _mu(0.0, p))
    return _ret(out, scalar)


def dU(rho, p: ModelParams):
    """U'(rho) = Q'(rho)/rho - Q(rho)/rho^2; negative on (0, rho_max)."""
    rho, scalar = _prep(rho)
    _check_range(rho, p, lo_open=True)
    return _ret(_mu(rho, p) / rho - _flow(rho, p) / rho ** 2, scalar)


def hesitation_h(rho, p: ModelParams):
    """Hesitation beta * (rho/(rho_max - rho))^gamma; pole at rho_max."""
    rho, scalar = _prep(rho)
    _check_range(rho, p, hi_open=True)
    return _ret(p.beta * (rho / (p.rho_max - rho)) ** p.gamma, scalar)


def dh(rho, p: ModelParams):
    rho, scalar = _prep(rho)
    _check_range(rho, p, lo_open=True, hi_open=True)
    z = rho / (p.rho_max - rho)
    dz = p.rho_max / (p.rho_max - rho) ** 2
    return _ret(p.beta * p.gamma * z ** (p.gamma - 1.0) * dz, scalar)


def d2h(rho, p: ModelParams):
    rho, scalar = _prep(rho)
    _check_range(rho, p, lo_open=True, hi_open=True)
    z = rho / (p.rho_max - rho)
    dz = p.rho_max / (p.rho_max - rho) ** 2
    d2z = 2.0 * p.rho_max / (p.rho_max - rho) ** 3
    out = p.beta * p.gamma * ((p.gamma - 1.0) * z ** (p.gamma - 2.0) * dz ** 2
                              + z ** (p.gamma - 1.0) * d2z)
    return _ret(out, scalar)


# -- characteristic structure ------------------------------------------------

def char_speeds(rho, u, p: ModelParams):
    """Eigenvalues (u - rho*h'(rho), u); coincide on the empty road."""
    rho, scalar_r = _prep(rho)
    u, scalar_u = _prep(u)
    _check_range(rho, p, hi_open=True)
    pos = rho > 0.0
    rho_safe = np.where(pos, rho, 0.5 * p.rho_max)
    lam1 = np.where(pos, u - rho_safe * dh(rho_safe, p), u)
    lam2 = u * np.ones_like(lam1)
    scalar = scalar_r and scalar_u
    return _ret(lam1, scalar), _ret(lam2, scalar)


def scc_margin(rho, p: ModelParams):
    """Stability margin U'(rho) + h'(rho); uniform states are stable iff > 0."""
    rho, scalar = _prep(rho)
    _check_range(rho, p, lo_open=True, hi_open=True)
    return _ret(dU(rho, p) + dh(rho, p), scalar)


def scc_violated(rho, p: ModelParams):
    rho, scalar = _prep(rho)
    out = scc_margin(rho, p) < 0.0
    return bool(out) if scalar else np.asarray(out)


def scc_violation_interval(p: ModelParams, n_scan: int = 4096):
    """Endpoints of the density interval where the stability margin is negative.

    Returns None when no violation exists.  The margin diverges to +inf at
    both ends of (0, rho_max), so any violation interval is interior; the
    endpoints are bisected to 1e-12 * rho_max.  A margin with more than one
    negative run raises MultipleViolationIntervalsError.
    """
    eps = 1e-9 * p.rho_max
    grid = np.linspace(eps, p.rho_max - eps, n_scan)
    neg = scc_margin(grid, p) < 0.0
    if not neg.any():
        return None

    # contiguous negative runs on the scan grid
    edges = np.flatnonzero(np.diff(neg.astype(int)))
    starts = [e for e in edges if not neg[e]]           # False -> True
    ends = [e for e in edges if neg[e]]                 # True -> False
    if neg[0]:
        starts = [-1] + starts
    if neg[-1]:
        ends = ends + [n_scan - 1]

    f = lambda r: scc_margin(r, p)
    xtol = 1e-12 * p.rho_max
    intervals = []
    for i0, i1 in zip(starts, ends):
        lo = brentq(f, grid[i0], grid[i0 + 1], xtol=xtol) if i0 >= 0 else eps
        hi = brentq(f, grid[i1], grid[i1 + 1], xtol=xtol) if i1 + 1 < n_scan else grid[-1]
        intervals.append((lo, hi))
    if len(intervals) > 1:
        raise MultipleViolationIntervalsError(intervals)
    return intervals[0]


# -- Lagrangian (specific-volume) closures -----------------------------------

def _check_v(v, p: ModelParams):
    if np.any(np.asarray(v) <= 1.0 / p.rho_max):
        raise DomainError("specific volume must exceed 1/rho_max")


def U_hat(v, p: ModelParams):
    """Desired speed as a function of specific volume v = 1/rho."""
    v, scalar = _prep(v)
    _check_v(v, p)
    return _ret(desired_speed_U(1.0 / v, p), scalar)


def h_hat(v, p: ModelParams):
    v, scalar = _prep(v)
    _check_v(v, p)
    return _ret(hesitation_h(1.0 / v, p), scalar)


def dU_hat(v, p: ModelParams):
    v, scalar = _prep(v)
    _check_v(v, p)
    return _ret(-dU(1.0 / v, p) / v ** 2, scalar)


def dh_hat(v, p: ModelParams):
    v, scalar = _prep(v)
    _check_v(v, p)
    return _ret(-dh(1.0 / v, p) / v ** 2, scalar)


def d2h_hat(v, p: ModelParams):
    v, scalar = _prep(v)
    _check_v(v, p)
    return _ret(d2h(1.0 / v, p) / v ** 4 + 2.0 * dh(1.0 / v, p) / v ** 3, scalar)
