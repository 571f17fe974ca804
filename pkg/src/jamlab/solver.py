"""Finite-volume solver for the inhomogeneous ARZ system on a circular road.

Conservative variables Q = (rho, y) with y = rho*(u + h(rho)).  Each time
step advances the homogeneous system with an HLL flux and then relaxes y
implicitly toward the equilibrium rho*(U(rho) + h(rho)); the density carries
no source term, so vehicle mass is conserved to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from jamlab import model
from jamlab.model import ModelParams

# conversion guard against near-vacuum division blow-up
RHO_FLOOR_REL = 1e-10
# the scheme's stability bound on s_max * dt / dx
CFL_BOUND = 0.5


class FloorError(FloatingPointError):
    """Density at or below the conversion floor."""


class PositivityError(FloatingPointError):
    """A cell density left (0, rho_max) during a step."""


class CFLError(ValueError):
    """Requested time step violates the CFL bound."""


@dataclass(frozen=True)
class GridConfig:
    """Uniform periodic grid and run controls."""

    n_cells: int
    domain_length: float
    t_final: float
    cfl: float = 0.5

    def __post_init__(self):
        if self.n_cells < 4:
            raise ValueError("n_cells must be at least 4")
        if self.domain_length <= 0:
            raise ValueError("domain_length must be positive")
        if not 0.0 < self.cfl <= CFL_BOUND:
            raise ValueError(f"cfl must lie in (0, {CFL_BOUND}]")
        if self.t_final < 0:
            raise ValueError("t_final must be nonnegative")

    @property
    def dx(self) -> float:
        return self.domain_length / self.n_cells

    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass(frozen=True)
class GridState:
    """Cell averages of the conservative variables at time t."""

    t: float
    rho: np.ndarray
    y: np.ndarray

    def frozen_view(self) -> "GridState":
        rho = self.rho.copy()
        y = self.y.copy()
        rho.flags.writeable = False
        y.flags.writeable = False
        return GridState(self.t, rho, y)


# -- conversions and fluxes ----------------------------------------------------

def to_conservative(rho, u, p: ModelParams):
    rho = np.asarray(rho, dtype=float)
    _check_floor(rho, p)
    return rho, rho * (np.asarray(u, float) + model.hesitation_h(rho, p))


def from_conservative(rho, y, p: ModelParams):
    rho = np.asarray(rho, dtype=float)
    _check_floor(rho, p)
    return rho, np.asarray(y, float) / rho - model.hesitation_h(rho, p)


def _check_floor(rho, p: ModelParams):
    floor = RHO_FLOOR_REL * p.rho_max
    below = rho <= floor
    if np.any(below):
        raise FloorError(
            f"{int(np.count_nonzero(below))} cell(s) at or below the density "
            f"floor {floor:.3e}"
        )


def flux_F(rho, y, p: ModelParams):
    """Exact flux (y - rho h(rho), y^2/rho - y h(rho))."""
    rho = np.asarray(rho, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_floor(rho, p)
    h = model.hesitation_h(rho, p)
    return y - rho * h, y * y / rho - y * h


def hll_flux(q_l, q_r, p: ModelParams):
    """HLL interface flux between left/right states (rho, y).

    Wave-speed estimates: s_L = min(lambda_1 of both sides), s_R =
    max(lambda_2 of both sides).  When both signed estimates vanish the
    left exact flux is returned (degenerate case).
    """
    rho_l, y_l = (np.asarray(a, dtype=float) for a in q_l)
    rho_r, y_r = (np.asarray(a, dtype=float) for a in q_r)
    _check_floor(rho_l, p)
    _check_floor(rho_r, p)
    h_l = model.hesitation_h(rho_l, p)
    h_r = model.hesitation_h(rho_r, p)
    u_l = y_l / rho_l - h_l
    u_r = y_r / rho_r - h_r
    lam1_l, lam2_l = model.char_speeds(rho_l, u_l, p)
    lam1_r, lam2_r = model.char_speeds(rho_r, u_r, p)
    return _hll_core(rho_l, y_l, h_l, lam1_l, rho_r, y_r, h_r, lam1_r,
                     np.asarray(lam2_l, float), np.asarray(lam2_r, float))


def _hll_core(rho_l, y_l, h_l, lam1_l, rho_r, y_r, h_r, lam1_r, lam2_l, lam2_r):
    s_l = np.minimum(lam1_l, lam1_r)
    s_r = np.maximum(lam2_l, lam2_r)
    s_l_minus = np.minimum(s_l, 0.0)
    s_r_plus = np.maximum(s_r, 0.0)
    span = s_r_plus - s_l_minus
    degenerate = span < 1e-14
    span = np.where(degenerate, 1.0, span)
    f1_l, f2_l = y_l - rho_l * h_l, y_l * y_l / rho_l - y_l * h_l
    f1_r, f2_r = y_r - rho_r * h_r, y_r * y_r / rho_r - y_r * h_r
    f1 = (s_r_plus * f1_l - s_l_minus * f1_r + s_r_plus * s_l_minus * (rho_r - rho_l)) / span
    f2 = (s_r_plus * f2_l - s_l_minus * f2_r + s_r_plus * s_l_minus * (y_r - y_l)) / span
    # pure upwind cases reduce to the exact one-sided flux; return it bitwise
    left_only = (s_l_minus == 0.0) & ~degenerate
    right_only = (s_r_plus == 0.0) & ~degenerate
    f1 = np.where(degenerate | left_only, f1_l, np.where(right_only, f1_r, f1))
    f2 = np.where(degenerate | left_only, f2_l, np.where(right_only, f2_r, f2))
    return f1, f2


# -- split steps -----------------------------------------------------------------

def max_wave_speed(state: GridState, p: ModelParams) -> float:
    _, u = from_conservative(state.rho, state.y, p)
    lam1, lam2 = model.char_speeds(state.rho, u, p)
    return float(max(np.max(np.abs(lam1)), np.max(np.abs(lam2))))


def step_hyperbolic(state: GridState, dt: float, grid: GridConfig, p: ModelParams) -> GridState:
    """One explicit HLL update with periodic neighbors.

    Interface i + 1/2 couples cells i and i+1 (mod n); the update is
    conservative, so the cell sum of rho is preserved exactly.
    """
    rho, y = state.rho, state.y
    _check_floor(rho, p)
    h = model.hesitation_h(rho, p)
    u = y / rho - h
    lam1, lam2 = model.char_speeds(rho, u, p)
    smax = float(max(np.max(np.abs(lam1)), np.max(np.abs(lam2))))
    if dt * smax / grid.dx > CFL_BOUND + 1e-9:
        raise CFLError(
            f"dt = {dt:.3e} violates the CFL bound at t = {state.t:.6g} "
            f"(s_max dt/dx = {dt * smax / grid.dx:.4f} > {CFL_BOUND})"
        )
    roll = lambda a: np.roll(a, -1)
    f1, f2 = _hll_core(
        rho, y, h, lam1,
        roll(rho), roll(y), roll(h), roll(lam1),
        np.asarray(lam2, float), roll(lam2),
    )
    lam = dt / grid.dx
    rho_new = rho - lam * (f1 - np.roll(f1, 1))
    y_new = y - lam * (f2 - np.roll(f2, 1))
    check_positivity(rho_new, p, state.t)
    return GridState(state.t + dt, rho_new, y_new)


def check_positivity(rho: np.ndarray, p: ModelParams, t: float):
    """Hard error when any cell density leaves (0, rho_max)."""
    bad = ~((rho > 0.0) & (rho < p.rho_max))
    if np.any(bad):
        idx = np.flatnonzero(bad)
        raise PositivityError(
            f"density left (0, rho_max) at t = {t:.6g} in cell(s) "
            f"{idx[:8].tolist()}{'...' if idx.size > 8 else ''}"
        )


def step_relaxation(state: GridState, dt: float, p: ModelParams) -> GridState:
    """Implicit relaxation of y toward rho*(U(rho) + h(rho)); rho untouched."""
    rho = state.rho
    alpha = dt / p.tau
    y_eq = rho * (model.desired_speed_U(rho, p) + model.hesitation_h(rho, p))
    y_new = (alpha * y_eq + state.y) / (alpha + 1.0)
    return GridState(state.t, rho, y_new)


def step_once(state: GridState, grid: GridConfig, p: ModelParams,
              dt_max: float | None = None) -> tuple[GridState, float]:
    """One full split step with the CFL-limited dt (optionally clipped)."""
    dt = grid.cfl * grid.dx / max_wave_speed(state, p)
    if dt_max is not None:
        dt = min(dt, dt_max)
    state = step_hyperbolic(state, dt, grid, p)
    state = step_relaxation(state, dt, p)
    return state, dt


def vehicle_count(state: GridState, grid: GridConfig) -> float:
    """Total vehicles on the ring: cell sum of rho times dx."""
    return float(np.sum(state.rho)) * grid.dx


# -- initial conditions ----------------------------------------------------------

def initial_state(ic: Callable, grid: GridConfig, p: ModelParams) -> GridState:
    """Midpoint-sample an (x -> (rho, u)) initial condition onto the grid."""
    rho0, u0 = ic(grid.cell_centers())
    rho0 = np.asarray(rho0, dtype=float)
    u0 = np.broadcast_to(np.asarray(u0, dtype=float), rho0.shape).copy()
    if not np.all((rho0 > 0.0) & (rho0 < p.rho_max)):
        raise ValueError("initial density must lie strictly inside (0, rho_max)")
    rho, y = to_conservative(rho0, u0, p)
    return GridState(0.0, rho, y)


def gaussian_ic(p: ModelParams, rho_bar: float, amp: float, center: float, width: float):
    """Density bump rho_bar + amp*exp(-(x-center)^2/(2 width^2)) at equilibrium speed."""

    def ic(x):
        rho = rho_bar + amp * np.exp(-((np.asarray(x, float) - center) ** 2) / (2.0 * width ** 2))
        return rho, model.desired_speed_U(rho, p)

    return ic


# -- time loop --------------------------------------------------------------------

@dataclass(frozen=True)
class Observer:
    """Callback invoked every `stride` steps (and on the final state)."""

    fn: Callable[[GridState], None]
    stride: int = 1


@dataclass
class Trajectory:
    times: list
    states: list

    def final(self) -> GridState:
        return self.states[-1]


def run(ic: Callable, grid: GridConfig, p: ModelParams,
        observers: Sequence[Observer] = (),
        record_stride: int | None = None) -> Trajectory:
    """March the split scheme to t_final, clipping the last step.

    dt is recomputed each step from the current max wave speed.  Recorded
    snapshots (initial, every record_stride steps, final) and observer
    snapshots are read-only copies.
    """
    state = initial_state(ic, grid, p)
    traj = Trajectory([0.0], [state.frozen_view()])
    n_step = 0
    last_fired = [0] * len(observers)
    try:
        while state.t < grid.t_final - 1e-13:
            state, _ = step_once(state, grid, p, dt_max=grid.t_final - state.t)
            n_step += 1
            snap = None
            for k, obs in enumerate(observers):
                if n_step % obs.stride == 0:
                    snap = state.frozen_view() if snap is None else snap
                    obs.fn(snap)
                    last_fired[k] = n_step
            if record_stride is not None and n_step % record_stride == 0:
                traj.times.append(state.t)
                traj.states.append(snap if snap is not None else state.frozen_view())
    except (PositivityError, FloorError) as err:
        raise type(err)(f"{err} (after {n_step} steps)") from err
    final = traj.states[-1] if traj.times[-1] == state.t else state.frozen_view()
    if traj.times[-1] != state.t:
        traj.times.append(state.t)
        traj.states.append(final)
    for k, obs in enumerate(observers):
        if last_fired[k] != n_step or n_step == 0:
            obs.fn(final)
    return traj
