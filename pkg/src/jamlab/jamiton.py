"""Exact jamiton traveling-wave construction for the ARZ model.

A jamiton is parametrized by its sonic density rho_s (which must violate
the sub-characteristic condition) and the specific volume v_minus at the
upstream edge of its shock.  The smooth profile solves

    dv/dchi = w(v) / r'(v),   w(v) = U_hat(v) - (m v + s),
                              r(v) = m h_hat(v) + m^2 v,

with the mass flux m and wave speed s fixed by the crossing condition
U_hat(v_s) = m v_s + s at the sonic point v_s = 1/rho_s.  The profile is
integrated here in the road coordinate x, where dx/dv = tau v r'(v)/w(v)
with a removable singularity at v_s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from jamlab import model
from jamlab.model import ModelParams

# relative root tolerance in v; w and r are smooth and cheap
_V_RTOL = 1e-13
# bracket-growth cutoff for the second root of w
_BRACKET_LIMIT = 1e6
# half-width of the L'Hopital patch around the sonic point
_PATCH_REL = 1e-9


class JamitonError(ValueError):
    """Construction rejected: no jamiton exists for the requested data."""


class BracketError(RuntimeError):
    """Root bracketing failed while growing the search interval."""


@dataclass(frozen=True)
class SonicData:
    """Sonic-point quantities of a jamiton family member.

    ``m`` is the vehicle flux through the wave (the wave moves at -m in
    mass coordinates); ``s`` is the road-frame propagation speed.
    """

    rho_s: float
    v_s: float
    m: float
    s: float
    params: ModelParams


@dataclass(frozen=True)
class JamitonSpec:
    """A fully bracketed jamiton: sonic data plus jump endpoints.

    v_plus < v_s < v_minus <= v_M and r(v_plus) = r(v_minus); the maximal
    jamiton (v_minus = v_M) is representable only through v_M/v_R queries,
    never as a spec.
    """

    sonic: SonicData
    v_M: float
    v_R: float
    v_minus: float
    v_plus: float
    r_min: float
    r_max: float

    @property
    def rho_minus(self) -> float:
        return 1.0 / self.v_minus

    @property
    def rho_plus(self) -> float:
        return 1.0 / self.v_plus


@dataclass(frozen=True)
class JamitonProfile:
    """One period of the traveling wave sampled on a uniform road grid.

    x runs over [0, L] with the shock at the periodic seam: v rises from
    v_plus at x = 0 to v_minus at x = L and jumps back.  ``chi`` holds the
    Lagrangian wave coordinate of each sample (diagnostic).
    """

    x: np.ndarray
    v: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    chi: np.ndarray
    L: float
    N_veh: float
    A: float
    spec: JamitonSpec


# -- sonic data ---------------------------------------------------------------

def sonic_data(rho_s: float, p: ModelParams) -> SonicData:
    """Mass flux and wave speed for the jamiton anchored at sonic density rho_s.

    Rejects densities satisfying the stability condition: jamitons with
    jumps exist only where it is violated.
    """
    if not model.scc_violated(rho_s, p):
        raise JamitonError(
            f"rho_s = {rho_s} is linearly stable; no jamiton exists there"
        )
    v_s = 1.0 / rho_s
    m = -model.dh_hat(v_s, p)
    s = model.U_hat(v_s, p) - m * v_s
    return SonicData(rho_s=rho_s, v_s=v_s, m=m, s=s, params=p)


def w_func(v, sonic: SonicData):
    """Numerator of the profile ODE; vanishes at the sonic point."""
    return model.U_hat(v, sonic.params) - (sonic.m * np.asarray(v, float) + sonic.s)


def r_func(v, sonic: SonicData):
    """Quantity conserved across admissible jumps; strictly convex in v."""
    return sonic.m * model.h_hat(v, sonic.params) + sonic.m ** 2 * np.asarray(v, float)


def dr_func(v, sonic: SonicData):
    """r'(v); vanishes at the sonic point by the choice of m."""
    return sonic.m * model.dh_hat(v, sonic.params) + sonic.m ** 2


# -- brackets -----------------------------------------------------------------

def find_v_M(sonic: SonicData) -> float:
    """Second root of w beyond the sonic point, bracketed by doubling."""
    v_s = sonic.v_s
    f = lambda v: w_func(v, sonic)
    hi = 2.0 * v_s
    while f(hi) > 0.0:
        hi *= 2.0
        if hi > _BRACKET_LIMIT * v_s:
            raise BracketError(
                f"w has no second root below {_BRACKET_LIMIT:g}*v_s for "
                f"rho_s = {sonic.rho_s}; sonic density too close to the "
                "edge of the instability interval"
            )
    if f(hi) == 0.0:
        return hi
    # w(v_s) = 0 only up to round-off; walk the left end outward until the
    # bracket sign is clean (fails only for degenerate near-edge densities)
    eps = 1e-12
    lo = v_s * (1.0 + eps)
    while f(lo) <= 0.0:
        eps *= 4.0
        lo = v_s * (1.0 + eps)
        if lo >= hi:
            raise BracketError(
                f"degenerate sonic point at rho_s = {sonic.rho_s}: "
                "w has no positive lobe above v_s"
            )
    return brentq(f, lo, hi, rtol=_V_RTOL)


def find_v_R(sonic: SonicData) -> float:
    """Volume below the sonic point with r(v_R) = r(v_M)."""
    p = sonic.params
    v_floor = 1.0 / p.rho_max
    r_max = r_func(find_v_M(sonic), sonic)
    f = lambda v: r_func(v, sonic) - r_max
    # halve the gap to the pole at 1/rho_max until r exceeds r_max
    k = 1
    lo = v_floor + (sonic.v_s - v_floor) / 2.0 ** k
    while f(lo) < 0.0:
        k += 1
        lo = v_floor + (sonic.v_s - v_floor) / 2.0 ** k
        if k > 60:
            raise BracketError(f"could not bracket v_R for rho_s = {sonic.rho_s}")
    eps = 1e-12
    hi = sonic.v_s * (1.0 - eps)
    while f(hi) >= 0.0:
        eps *= 4.0
        hi = sonic.v_s * (1.0 - eps)
        if hi <= lo:
            raise BracketError(
                f"degenerate sonic point at rho_s = {sonic.rho_s}: "
                "r has no dip below r_max"
            )
    return brentq(f, lo, hi, rtol=_V_RTOL)


def make_spec(sonic: SonicData, v_minus: float) -> JamitonSpec:
    """Close the jamiton at v_minus by solving r(v_plus) = r(v_minus).

    v_minus must lie strictly between v_s and v_M; the boundary case
    v_minus = v_M is the infinitely long maximal jamiton and is rejected.
    """
    v_M = find_v_M(sonic)
    if v_minus <= sonic.v_s:
        raise JamitonError(
            f"v_minus = {v_minus} is below sonic (v_s = {sonic.v_s:.6g}); "
            "the jump must start above the sonic volume"
        )
    if v_minus >= v_M:
        raise JamitonError(
            f"v_minus = {v_minus} is beyond maximal (v_M = {v_M:.6g}); "
            "only the infinite maximal jamiton lives there"
        )
    v_R = find_v_R(sonic)
    r_minus = r_func(v_minus, sonic)
    f = lambda v: r_func(v, sonic) - r_minus
    v_plus = brentq(f, v_R, sonic.v_s * (1.0 - 1e-12), rtol=_V_RTOL)
    return JamitonSpec(
        sonic=sonic,
        v_M=v_M,
        v_R=v_R,
        v_minus=v_minus,
        v_plus=v_plus,
        r_min=float(r_func(sonic.v_s, sonic)),
        r_max=float(r_func(v_M, sonic)),
    )


# -- profile integration ------------------------------------------------------

def ode_ratio(v, spec: JamitonSpec):
    """r'(v)/w(v) with the removable singularity at v_s patched.

    Within |v - v_s| < 1e-9 v_s the ratio is replaced by its L'Hopital
    value r''(v_s)/w'(v_s) = m h_hat''(v_s) / (U_hat'(v_s) - m).
    """
    sonic = spec.sonic
    p = sonic.params
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    near = np.abs(v - sonic.v_s) < _PATCH_REL * sonic.v_s
    lim = sonic.m * model.d2h_hat(sonic.v_s, p) / (model.dU_hat(sonic.v_s, p) - sonic.m)
    out[near] = lim
    vv = v[~near]
    out[~near] = dr_func(vv, sonic) / w_func(vv, sonic)
    return out


def _dx_dv(v, spec: JamitonSpec):
    return spec.sonic.params.tau * np.asarray(v, float) * ode_ratio(v, spec)


def _dn_dv(v, spec: JamitonSpec):
    return spec.sonic.params.tau * ode_ratio(v, spec)


def _quad(fun, spec: JamitonSpec) -> float:
    val, _ = quad(
        lambda v: float(fun(np.asarray([v]), spec)[0]),
        spec.v_plus,
        spec.v_minus,
        points=[spec.sonic.v_s],
        limit=400,
        epsabs=0.0,
        epsrel=1e-12,
    )
    if not np.isfinite(val):
        raise FloatingPointError("profile quadrature returned a non-finite value")
    return val


def length(spec: JamitonSpec) -> float:
    """Wavelength of one period: tau * integral of v r'/w over [v_plus, v_minus]."""
    return _quad(_dx_dv, spec)


def vehicle_count(spec: JamitonSpec) -> float:
    """Vehicles carried by one period: tau * integral of r'/w."""
    return _quad(_dn_dv, spec)


def amplitude(spec: JamitonSpec) -> float:
    """Density drop across the shock, rho_plus - rho_minus."""
    return spec.rho_plus - spec.rho_minus


def integrate_profile(spec: JamitonSpec, n_samples: int = 1024) -> JamitonProfile:
    """Sample one wave period on a uniform road grid.

    The monotone map x(v) is accumulated on a dense v-grid (Simpson) and
    inverted by monotone cubic interpolation; u follows from u = s + m v.
    """
    if n_samples < 64:
        raise ValueError("n_samples must be at least 64")
    sonic = spec.sonic
    n_dense = max(4 * n_samples, 8192) + 1
    v_grid = np.linspace(spec.v_plus, spec.v_minus, n_dense)
    integrand = _dx_dv(v_grid, spec)
    if not np.all(np.isfinite(integrand)):
        raise FloatingPointError("non-finite profile integrand; check tolerances")
    x_of_v = cumulative_simpson(integrand, x=v_grid, initial=0.0)

    L = length(spec)
    N = vehicle_count(spec)
    # map [0, L] exactly onto the accumulated table (relative mismatch ~1e-12)
    v_interp = PchipInterpolator(x_of_v, v_grid)
    x = np.linspace(0.0, L, n_samples)
    v = np.clip(v_interp(x * (x_of_v[-1] / L)), spec.v_plus, spec.v_minus)
    v[0] = spec.v_plus
    v[-1] = spec.v_minus
    rho = 1.0 / v
    u = sonic.s + sonic.m * v
    # Lagrangian coordinate: dchi = dx/(tau v)
    tau = sonic.params.tau
    chi = np.concatenate(
        [[0.0], np.cumsum(0.5 * (1.0 / v[1:] + 1.0 / v[:-1]) * np.diff(x)) / tau]
    )
    return JamitonProfile(
        x=x, v=v, rho=rho, u=u, chi=chi,
        L=L, N_veh=N, A=amplitude(spec), spec=spec,
    )


def profile_sampler(profile: JamitonProfile):
    """Periodic (rho, u) evaluator for arbitrary road positions.

    The returned callable wraps x modulo the wavelength, so it also serves
    as the translated exact solution via x - s*t.
    """
    spec = profile.spec
    interp = PchipInterpolator(profile.x, profile.v)

    def sample(x):
        x = np.asarray(x, dtype=float)
        v = np.clip(interp(np.mod(x, profile.L)), spec.v_plus, spec.v_minus)
        return 1.0 / v, spec.sonic.s + spec.sonic.m * v

    return sample


# -- fundamental-diagram geometry ---------------------------------------------

def fd_segment(sonic: SonicData) -> tuple[float, float]:
    """(slope, intercept) of the wave's chord q = s rho + m in the (rho, q) plane."""
    return sonic.s, sonic.m


def maximal_segment(sonic: SonicData):
    """Endpoints ((rho_M, q_M), (rho_R, q_R)) of the maximal jamiton chord."""
    v_M = find_v_M(sonic)
    v_R = find_v_R(sonic)
    rho_M, rho_R = 1.0 / v_M, 1.0 / v_R
    return (
        (rho_M, sonic.m + sonic.s * rho_M),
        (rho_R, sonic.m + sonic.s * rho_R),
    )


@dataclass(frozen=True)
class Envelopes:
    """Jamiton-region geometry sampled over the instability interval.

    ``skipped`` flags densities where the lower-envelope slope s'(rho_s)
    degenerates (|s'| < 1e-14) and the envelope point is undefined.
    """

    rho_s: np.ndarray
    m: np.ndarray
    s: np.ndarray
    rho_M: np.ndarray
    q_M: np.ndarray
    rho_R: np.ndarray
    q_R: np.ndarray
    rho_star: np.ndarray
    q_star: np.ndarray
    skipped: np.ndarray


def envelopes(p: ModelParams, n: int = 64, inset: float = 0.01) -> Envelopes:
    """Maximal segments plus upper/lower envelope points for n sonic densities.

    Densities sample the instability interval with a relative inset so the
    near-degenerate edges (where v_M -> v_s) stay well conditioned.  The
    derivatives m'(rho_s), s'(rho_s) for the lower envelope use central
    differences with step 1e-6 rho_max.
    """
    lo, hi = model.scc_violation_interval(p)
    width = hi - lo
    rho_grid = np.linspace(lo + inset * width, hi - inset * width, n)
    step = 1e-6 * p.rho_max

    m_arr = np.empty(n)
    s_arr = np.empty(n)
    rho_M = np.empty(n)
    q_M = np.empty(n)
    rho_R = np.empty(n)
    q_R = np.empty(n)
    rho_star = np.full(n, np.nan)
    q_star = np.full(n, np.nan)
    skipped = np.zeros(n, dtype=bool)

    for i, rho_s in enumerate(rho_grid):
        son = sonic_data(rho_s, p)
        m_arr[i], s_arr[i] = son.m, son.s
        (rho_M[i], q_M[i]), (rho_R[i], q_R[i]) = maximal_segment(son)
        son_lo = sonic_data(rho_s - step, p)
        son_hi = sonic_data(rho_s + step, p)
        dm = (son_hi.m - son_lo.m) / (2.0 * step)
        ds = (son_hi.s - son_lo.s) / (2.0 * step)
        if abs(ds) < 1e-14:
            skipped[i] = True
            continue
        rho_star[i] = -dm / ds
        q_star[i] = son.m + son.s * rho_star[i]

    return Envelopes(
        rho_s=rho_grid, m=m_arr, s=s_arr,
        rho_M=rho_M, q_M=q_M, rho_R=rho_R, q_R=q_R,
        rho_star=rho_star, q_star=q_star, skipped=skipped,
    )
