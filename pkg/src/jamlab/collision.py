"""Wave-collision experiments on a circular road.

Two compatible jamitons (same v_minus, hence same density rho_minus at
their shock tails) are chained into one periodic initial condition and
evolved until a single wave survives.  The surviving wave is measured and
compared against both inputs; batches sweep the compatible sonic-density
range, optionally in parallel.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from multiprocessing import Pool

import numpy as np
from scipy.optimize import minimize_scalar

from jamlab import analysis, jamiton, model, solver
from jamlab.jamiton import BracketError, JamitonError, JamitonSpec
from jamlab.model import ModelParams
from jamlab.solver import GridConfig

SETTLE_CHECKS = 10          # consecutive single-jump checks before settling
CHECK_STRIDE = 50           # steps between jump-count checks
NO_COLLISION_CHECKS = 100   # window length for the stalled-pair test
T_MAX_FACTOR = 5000.0       # timeout at T_MAX_FACTOR * tau

CSV_COLUMNS = ("rho_s_in", "tau", "s_out", "m_out", "L_out", "A_out",
               "rho_plus_out", "E_L", "t_settle", "status")


class IncompatibleError(ValueError):
    """The two waves do not share v_minus and cannot be chained."""


@dataclass(frozen=True)
class CompatibilitySet:
    """Densities whose jamitons can join the fixed test jamiton."""

    test: JamitonSpec
    candidates: np.ndarray
    excluded: list

    @property
    def v_minus(self) -> float:
        return self.test.v_minus


@dataclass(frozen=True)
class CollisionRecord:
    """Inputs and measured outputs of one collision experiment."""

    rho_s_in: float
    tau: float
    s_out: float
    m_out: float
    L_out: float
    A_out: float
    rho_plus_out: float
    E_L: float
    t_settle: float
    status: str
    mass_drift: float = float("nan")
    resid_rms: float = float("nan")
    rho_s_est_out: float = float("nan")
    q_max_out: float = float("nan")


# -- test jamiton and compatibility ----------------------------------------------

def _v_gap(rho_s: float, p: ModelParams) -> float:
    """Width of the admissible (v_s, v_M) window; -inf where construction fails."""
    try:
        son = jamiton.sonic_data(rho_s, p)
        return jamiton.find_v_M(son) - son.v_s
    except (JamitonError, BracketError):
        return -math.inf


def choose_test_jamiton(p: ModelParams, n_scan: int = 200) -> tuple[float, float]:
    """Sonic density maximizing the v_minus selection window, and its midpoint.

    A coarse scan over the instability interval is refined by golden
    section around the best sample.
    """
    interval = model.scc_violation_interval(p)
    if interval is None:
        raise JamitonError("no SCC violation interval; no jamitons exist")
    lo, hi = interval
    width = hi - lo
    grid = np.linspace(lo + 1e-6 * width, hi - 1e-6 * width, n_scan)
    gaps = np.array([_v_gap(r, p) for r in grid])
    i = int(np.nanargmax(gaps))
    i = min(max(i, 1), n_scan - 2)
    res = minimize_scalar(
        lambda r: -_v_gap(r, p),
        bracket=(grid[i - 1], grid[i], grid[i + 1]),
        method="golden",
        options={"xtol": 1e-12},
    )
    rho_s_test = float(res.x)
    son = jamiton.sonic_data(rho_s_test, p)
    v_M = jamiton.find_v_M(son)
    return rho_s_test, 0.5 * (son.v_s + v_M)


def compatible_densities(v_minus_test: float, p: ModelParams, n_scan: int = 200,
                         rho_s_test: float | None = None) -> CompatibilitySet:
    """Scan the instability interval for densities that admit v_minus_test.

    A density is a candidate iff v_s < v_minus_test < v_M, the constructive
    condition under which make_spec succeeds.  Densities where v_minus_test
    only falls in the looser maximal-jamiton interval [v_R, v_M] (i.e. at or
    below the sonic volume) are reported as excluded with reason
    "below-sonic"; the rest carry "not-contained" or "construction-failed".
    """
    if rho_s_test is None:
        rho_s_test, _ = choose_test_jamiton(p)
    test_spec = jamiton.make_spec(jamiton.sonic_data(rho_s_test, p), v_minus_test)

    lo, hi = model.scc_violation_interval(p)
    width = hi - lo
    grid = np.linspace(lo + 1e-4 * width, hi - 1e-4 * width, n_scan)
    candidates = []
    excluded = []
    for rho_s in grid:
        try:
            son = jamiton.sonic_data(rho_s, p)
            v_M = jamiton.find_v_M(son)
        except (JamitonError, BracketError) as err:
            excluded.append((float(rho_s), f"construction-failed: {err}"))
            continue
        if son.v_s < v_minus_test < v_M:
            candidates.append(float(rho_s))
        elif v_minus_test <= son.v_s and jamiton.find_v_R(son) <= v_minus_test:
            excluded.append((float(rho_s), "below-sonic"))
        else:
            excluded.append((float(rho_s), "not-contained"))
    return CompatibilitySet(
        test=test_spec,
        candidates=np.array(candidates),
        excluded=excluded,
    )


def select_candidates(cset: CompatibilitySet, n: int) -> np.ndarray:
    """Evenly spaced desk-scale subset of the candidate range.

    The sample nearest the test jamiton's own sonic density is snapped to
    it exactly: the identical pair is the limiting member of the family and
    anchors the no-collision cluster.
    """
    if cset.candidates.size == 0:
        raise ValueError("empty candidate set")
    lo, hi = cset.candidates.min(), cset.candidates.max()
    picks = np.linspace(lo, hi, n)
    rho_test = cset.test.sonic.rho_s
    if lo <= rho_test <= hi:
        picks[int(np.argmin(np.abs(picks - rho_test)))] = rho_test
    return picks


# -- chained initial condition -----------------------------------------------------

def two_jamiton_ic(spec_a: JamitonSpec, spec_b: JamitonSpec, p: ModelParams,
                   n_samples: int = 4096):
    """Chain two compatible waves into one periodic initial condition.

    Wave a occupies [0, L_a), wave b occupies [L_a, L_a + L_b); the shared
    rho_minus tails jump to the other wave's rho_plus at the two seams.
    Returns (domain_length, ic) with ic(x) -> (rho, u).
    """
    if abs(spec_a.v_minus - spec_b.v_minus) > 1e-12 * max(spec_a.v_minus, spec_b.v_minus):
        raise IncompatibleError(
            f"waves are incompatible: v_minus = {spec_a.v_minus!r} vs {spec_b.v_minus!r}"
        )
    prof_a = jamiton.integrate_profile(spec_a, n_samples)
    prof_b = jamiton.integrate_profile(spec_b, n_samples)
    sample_a = jamiton.profile_sampler(prof_a)
    sample_b = jamiton.profile_sampler(prof_b)
    L_a, L_b = prof_a.L, prof_b.L
    domain_length = L_a + L_b

    def ic(x):
        x = np.asarray(x, dtype=float)
        rho = np.empty_like(x)
        u = np.empty_like(x)
        in_a = np.mod(x, domain_length) < L_a
        rho[in_a], u[in_a] = sample_a(np.mod(x[in_a], domain_length))
        rho[~in_a], u[~in_a] = sample_b(np.mod(x[~in_a], domain_length) - L_a)
        return rho, u

    return domain_length, ic


# -- single collision ---------------------------------------------------------------

def _jump_gap(jumps: np.ndarray, n_cells: int) -> int:
    """Nearest periodic distance (in cells) between two jump interfaces."""
    d = int(abs(jumps[1] - jumps[0]))
    return min(d, n_cells - d)


def run_collision(spec_test: JamitonSpec, spec_other: JamitonSpec, p: ModelParams,
                  n_cells: int = 160, cfl: float = 0.5) -> CollisionRecord:
    """Collide two compatible waves and measure the survivor.

    The run advances until a single (upward) shock persists for
    SETTLE_CHECKS consecutive checks, then continues for a settle window of
    10 tau before measuring.  A pair whose two shocks stop approaching
    (periodic gap non-decreasing over NO_COLLISION_CHECKS checks) is
    declared no-collision; everything else times out at 5000 tau.
    """
    L_test = jamiton.length(spec_test)
    L_other = jamiton.length(spec_other)
    domain_length, ic = two_jamiton_ic(spec_test, spec_other, p)
    t_max = T_MAX_FACTOR * p.tau
    grid = GridConfig(n_cells=n_cells, domain_length=domain_length,
                      t_final=t_max, cfl=cfl)
    state = solver.initial_state(ic, grid, p)
    n_start = solver.vehicle_count(state, grid)

    rho_s_in = spec_other.sonic.rho_s
    base = dict(rho_s_in=rho_s_in, tau=p.tau, s_out=math.nan, m_out=math.nan,
                L_out=math.nan, A_out=math.nan, rho_plus_out=math.nan,
                E_L=math.nan, t_settle=math.nan)

    streak = 0
    streak_t0 = math.nan
    gaps: list[int] = []
    status = "timeout"
    t_settle = math.nan
    while state.t < t_max:
        for _ in range(CHECK_STRIDE):
            state, _ = solver.step_once(state, grid, p)
        jumps = analysis.detect_jump_interfaces(state.rho, p, positive_only=True)
        if jumps.size == 1:
            if streak == 0:
                streak_t0 = state.t
            streak += 1
            gaps.clear()
            if streak >= SETTLE_CHECKS:
                status = "settled"
                t_settle = streak_t0
                break
        else:
            streak = 0
            if jumps.size == 2:
                gaps.append(_jump_gap(jumps, n_cells))
                if len(gaps) > NO_COLLISION_CHECKS and \
                        gaps[-1] >= gaps[-1 - NO_COLLISION_CHECKS] - 1:
                    status = "no-collision"
                    break
            else:
                gaps.clear()

    if status == "no-collision":
        return CollisionRecord(status=status, mass_drift=_drift(state, grid, n_start), **base)

    if status == "settled":
        t_end = state.t + 10.0 * p.tau
        while state.t < t_end:
            state, _ = solver.step_once(state, grid, p, dt_max=t_end - state.t)

    try:
        meas = analysis.measure_jamiton(state, grid, p)
    except analysis.MultiJumpError:
        return CollisionRecord(status="timeout", mass_drift=_drift(state, grid, n_start), **base)

    base.update(
        s_out=meas.estimate.s_est,
        m_out=meas.estimate.m_est,
        L_out=meas.L_meas,
        A_out=meas.A_meas,
        rho_plus_out=meas.rho_plus_meas,
        E_L=analysis.length_additivity_error(meas.L_meas, L_other, L_test,
                                             norm=L_other + L_test),
        t_settle=t_settle,
    )
    _, u_final = solver.from_conservative(state.rho, state.y, p)
    return CollisionRecord(status=status, mass_drift=_drift(state, grid, n_start),
                           resid_rms=meas.estimate.residual_rms,
                           rho_s_est_out=meas.estimate.rho_s_est,
                           q_max_out=float(np.max(state.rho * u_final)), **base)


def _drift(state, grid, n_start: float) -> float:
    return abs(solver.vehicle_count(state, grid) - n_start) / n_start


# -- batches -------------------------------------------------------------------------

def _batch_task(args) -> CollisionRecord:
    spec_test, rho_s, v_minus, p, n_cells, cfl = args
    try:
        spec_other = jamiton.make_spec(jamiton.sonic_data(rho_s, p), v_minus)
        return run_collision(spec_test, spec_other, p, n_cells=n_cells, cfl=cfl)
    except Exception as err:  # record the failure, keep the batch running
        return CollisionRecord(
            rho_s_in=float(rho_s), tau=p.tau, s_out=math.nan, m_out=math.nan,
            L_out=math.nan, A_out=math.nan, rho_plus_out=math.nan, E_L=math.nan,
            t_settle=math.nan, status=f"failed: {err}",
        )


def batch_collide(cset: CompatibilitySet, p: ModelParams, candidates=None,
                  n_cells: int = 160, cfl: float = 0.5,
                  workers: int = 1) -> list[CollisionRecord]:
    """Collide every candidate with the test jamiton; embarrassingly parallel.

    Results are ordered by candidate density and are independent of the
    worker count.  E_L is renormalized by the batch-wide maximum of
    L + L_test after all runs finish.
    """
    if candidates is None:
        candidates = cset.candidates
    candidates = np.sort(np.asarray(candidates, dtype=float))
    if candidates.size == 0:
        raise ValueError("no candidates to collide")
    tasks = [(cset.test, rho_s, cset.v_minus, p, n_cells, cfl) for rho_s in candidates]
    if workers > 1:
        with Pool(workers) as pool:
            records = pool.map(_batch_task, tasks)
    else:
        records = [_batch_task(t) for t in tasks]
    return _renormalize_el(records, cset.test, p)


def _renormalize_el(records, spec_test, p) -> list[CollisionRecord]:
    L_test = jamiton.length(spec_test)
    sums = {}
    for rec in records:
        try:
            spec = jamiton.make_spec(
                jamiton.sonic_data(rec.rho_s_in, p.with_tau(rec.tau)), spec_test.v_minus)
            sums[rec.rho_s_in] = jamiton.length(spec) + L_test * rec.tau / p.tau
        except (JamitonError, BracketError):
            sums[rec.rho_s_in] = math.nan
    norm = np.nanmax(list(sums.values()))
    out = []
    for rec in records:
        if math.isnan(rec.L_out):
            out.append(rec)
        else:
            out.append(replace(rec, E_L=(rec.L_out - sums[rec.rho_s_in]) / norm))
    return out


def tau_sweep(cset: CompatibilitySet, p: ModelParams, taus=(1.0, 5.0, 10.0),
              candidates=None, n_cells: int = 160, cfl: float = 0.5,
              workers: int = 1) -> dict[float, list[CollisionRecord]]:
    """Repeat the batch for several relaxation times, aligned by candidate.

    The wave brackets (v_M, v_R, v_plus) are independent of tau; only the
    wavelength scales, so each tau rebuilds its specs with the same sonic
    densities and v_minus.
    """
    if candidates is None:
        candidates = cset.candidates
    out = {}
    for tau in taus:
        p_tau = p.with_tau(tau)
        test_tau = jamiton.make_spec(
            jamiton.sonic_data(cset.test.sonic.rho_s, p_tau), cset.v_minus)
        cset_tau = CompatibilitySet(test=test_tau, candidates=np.asarray(candidates),
                                    excluded=[])
        out[float(tau)] = batch_collide(cset_tau, p_tau, candidates=candidates,
                                        n_cells=n_cells, cfl=cfl, workers=workers)
    return out


# -- CSV ------------------------------------------------------------------------------

def write_records_csv(records, path):
    """Write collision records with the documented column layout."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([getattr(rec, col) for col in CSV_COLUMNS])


def read_records_csv(path) -> list[CollisionRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        records = []
        for row in reader:
            kwargs = {col: row[col] for col in CSV_COLUMNS}
            for col in CSV_COLUMNS[:-1]:
                kwargs[col] = float(kwargs[col])
            records.append(CollisionRecord(**kwargs))
    return records
