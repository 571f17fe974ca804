import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jamlab import analysis, jamiton, model, solver
from jamlab.model import ModelParams
from jamlab.solver import (CFLError, FloorError, GridConfig, GridState,
                           Observer, PositivityError)

RHO_MAX = ModelParams().rho_max


def uniform_equilibrium_state(p, rho_bar, n=16):
    rho = np.full(n, rho_bar)
    u = model.desired_speed_U(rho, p)
    rho, y = solver.to_conservative(rho, u, p)
    return GridState(0.0, rho, y)


class TestConversions:
    @settings(max_examples=50, deadline=None)
    @given(st.floats(min_value=1e-4 * RHO_MAX, max_value=0.999 * RHO_MAX),
           st.floats(min_value=0.0, max_value=25.0))
    def test_round_trip(self, rho, u):
        p = ModelParams()
        r2, u2 = solver.from_conservative(*solver.to_conservative(rho, u, p), p)
        assert float(r2) == rho
        assert float(u2) == pytest.approx(u, rel=1e-14, abs=1e-13)

    def test_equilibrium_momentum(self, p):
        rho = 0.3 * p.rho_max
        u = model.desired_speed_U(rho, p)
        _, y = solver.to_conservative(rho, u, p)
        assert float(y) == pytest.approx(
            rho * (model.desired_speed_U(rho, p) + model.hesitation_h(rho, p)),
            rel=1e-14)

    def test_floor_guard(self, p):
        floor = solver.RHO_FLOOR_REL * p.rho_max
        with pytest.raises(FloorError):
            solver.from_conservative(np.array([floor]), np.array([1.0]), p)
        with pytest.raises(FloorError):
            solver.to_conservative(np.array([0.5 * floor]), np.array([1.0]), p)


class TestExactFlux:
    def test_component_identities(self, p):
        rng = np.random.default_rng(7)
        rho = rng.uniform(0.05, 0.9, 32) * p.rho_max
        u = rng.uniform(0.0, 20.0, 32)
        rho_c, y = solver.to_conservative(rho, u, p)
        f1, f2 = solver.flux_F(rho_c, y, p)
        assert np.allclose(f1, rho * u, rtol=1e-14, atol=1e-14)
        assert np.allclose(f2, u * y, rtol=1e-14, atol=1e-13)

    def test_uniform_state_has_zero_divergence(self, p):
        state = uniform_equilibrium_state(p, 0.4 * p.rho_max)
        f1, f2 = solver.flux_F(state.rho, state.y, p)
        assert np.allclose(np.diff(f1), 0.0)
        assert np.allclose(np.diff(f2), 0.0)


class TestHLL:
    def _state(self, p, rho_frac, u):
        return solver.to_conservative(rho_frac * p.rho_max, u, p)

    def test_consistency(self, p):
        q = self._state(p, 0.4, 9.0)
        f_hll = solver.hll_flux(q, q, p)
        f = solver.flux_F(*q, p)
        assert float(f_hll[0]) == pytest.approx(float(f[0]), rel=1e-14)
        assert float(f_hll[1]) == pytest.approx(float(f[1]), rel=1e-14)

    def test_supersonic_right_moving_upwinds_left(self, p):
        # low density, high speed: both eigenvalues positive on each side
        ql = self._state(p, 0.05, 18.0)
        qr = self._state(p, 0.06, 17.0)
        for rho, u in ((0.05, 18.0), (0.06, 17.0)):
            lam1, _ = model.char_speeds(rho * p.rho_max, u, p)
            assert lam1 > 0.0
        f_hll = solver.hll_flux(ql, qr, p)
        f_l = solver.flux_F(*ql, p)
        assert float(f_hll[0]) == float(f_l[0])
        assert float(f_hll[1]) == float(f_l[1])

    def test_left_moving_upwinds_right(self, p):
        # dense, slow traffic: both eigenvalues negative on each side
        ql = self._state(p, 0.95, 0.1)
        qr = self._state(p, 0.94, 0.05)
        for rho, u in ((0.95, 0.1), (0.94, 0.05)):
            _, lam2 = model.char_speeds(rho * p.rho_max, u, p)
            lam1, _ = model.char_speeds(rho * p.rho_max, u, p)
            assert lam2 < 0.0 or u < 0.0 or lam1 < 0.0
        # ensure the fast wave estimate is actually negative
        _, u_l = solver.from_conservative(*ql, p)
        _, u_r = solver.from_conservative(*qr, p)
        assert max(u_l, u_r) < 0.2
        f_hll = solver.hll_flux(ql, qr, p)
        f_r = solver.flux_F(*qr, p)
        if max(u_l, u_r) < 0.0:
            assert float(f_hll[0]) == float(f_r[0])


class TestHyperbolicStep:
    def test_uniform_state_unchanged(self, p):
        state = uniform_equilibrium_state(p, 0.35 * p.rho_max, n=32)
        grid = GridConfig(32, 100.0, t_final=1.0)
        out = solver.step_hyperbolic(state, 1e-3, grid, p)
        assert np.array_equal(out.rho, state.rho)
        assert np.array_equal(out.y, state.y)

    def test_mass_conserved_per_step(self, p, profile433):
        grid = GridConfig(128, profile433.L, t_final=1.0)
        state = solver.initial_state(jamiton.profile_sampler(profile433), grid, p)
        dt = grid.cfl * grid.dx / solver.max_wave_speed(state, p)
        out = solver.step_hyperbolic(state, dt, grid, p)
        n0 = solver.vehicle_count(state, grid)
        n1 = solver.vehicle_count(out, grid)
        assert abs(n1 - n0) / n0 < 1e-13

    def test_three_point_stencil(self, p):
        n = 64
        rho = np.full(n, 0.4 * p.rho_max)
        rho[30] *= 1.05
        u = model.desired_speed_U(rho, p)
        state = GridState(0.0, *solver.to_conservative(rho, u, p))
        grid = GridConfig(n, 200.0, t_final=1.0)
        out = solver.step_hyperbolic(state, 1e-3, grid, p)
        changed = np.flatnonzero(~np.isclose(out.rho, state.rho, rtol=1e-13, atol=0))
        assert set(changed) <= {29, 30, 31}

    def test_cfl_violation_raises(self, p):
        state = uniform_equilibrium_state(p, 0.3 * p.rho_max, n=16)
        grid = GridConfig(16, 10.0, t_final=1.0)
        with pytest.raises(CFLError):
            solver.step_hyperbolic(state, 10.0, grid, p)


class TestRelaxationStep:
    def test_equilibrium_fixed_point(self, p):
        state = uniform_equilibrium_state(p, 0.45 * p.rho_max)
        out = solver.step_relaxation(state, 0.1, p)
        assert np.allclose(out.y, state.y, rtol=1e-14)

    def test_infinite_dt_limit(self, p):
        rho = np.full(8, 0.4 * p.rho_max)
        u = model.desired_speed_U(rho, p) * 0.7
        state = GridState(0.0, *solver.to_conservative(rho, u, p))
        out = solver.step_relaxation(state, 1e12, p)
        y_eq = rho * (model.desired_speed_U(rho, p) + model.hesitation_h(rho, p))
        assert np.allclose(out.y, y_eq, rtol=1e-10)

    def test_rho_untouched_bitwise(self, p):
        rho = np.linspace(0.2, 0.6, 8) * p.rho_max
        u = model.desired_speed_U(rho, p) * 0.9
        state = GridState(0.0, *solver.to_conservative(rho, u, p))
        out = solver.step_relaxation(state, 0.05, p)
        assert out.rho is state.rho


class TestRun:
    def test_uniform_equilibrium_is_global_fixed_point(self, p):
        rho_bar = 0.15 * p.rho_max  # stable density
        ic = lambda x: (np.full_like(x, rho_bar),
                        np.full_like(x, model.desired_speed_U(rho_bar, p)))
        grid = GridConfig(32, 500.0, t_final=5.0)
        traj = solver.run(ic, grid, p)
        final = traj.final()
        assert np.allclose(final.rho, rho_bar, rtol=1e-13)

    def test_vehicle_count_drift(self, p, profile433):
        grid = GridConfig(160, profile433.L, t_final=2.0)
        traj = solver.run(jamiton.profile_sampler(profile433), grid, p)
        n0 = solver.vehicle_count(traj.states[0], grid)
        n1 = solver.vehicle_count(traj.final(), grid)
        assert abs(n1 - n0) / n0 < 1e-10

    def test_final_time_exact(self, p, profile433):
        grid = GridConfig(64, profile433.L, t_final=0.73)
        traj = solver.run(jamiton.profile_sampler(profile433), grid, p)
        assert traj.final().t == pytest.approx(0.73, abs=1e-12)

    def test_observers_and_snapshots(self, p, profile433):
        seen = []
        obs = Observer(fn=lambda s: seen.append(s.t), stride=5)
        grid = GridConfig(64, profile433.L, t_final=0.2)
        traj = solver.run(jamiton.profile_sampler(profile433), grid, p,
                          observers=[obs], record_stride=10)
        assert seen[-1] == pytest.approx(0.2, abs=1e-12)
        assert len(traj.times) >= 2
        with pytest.raises(ValueError):
            traj.final().rho[0] = 0.0  # read-only snapshot

    def test_gaussian_bump_on_long_road_forms_multiple_waves(self, p):
        # unstable mean density on a 6 km ring develops a wave train
        ic = solver.gaussian_ic(p, rho_bar=0.43 * p.rho_max, amp=0.05 * p.rho_max,
                                center=3000.0, width=120.0)
        grid = GridConfig(1200, 6000.0, t_final=117.0)
        traj = solver.run(ic, grid, p)
        jumps = analysis.detect_jump_interfaces(traj.final().rho, p,
                                                positive_only=True)
        assert jumps.size > 2

    def test_positivity_guard_reports_cells(self, p):
        rho = np.full(16, 0.4 * p.rho_max)
        solver.check_positivity(rho, p, 0.0)
        rho[5] = -1e-6
        rho[9] = 1.5 * p.rho_max
        with pytest.raises(PositivityError, match=r"\[5, 9\]"):
            solver.check_positivity(rho, p, 0.0)

    def test_positivity_preserved_along_harsh_run(self, p):
        # steep unstable bump: every intermediate state stays inside (0, rho_max)
        ic = solver.gaussian_ic(p, rho_bar=0.30 * p.rho_max, amp=0.45 * p.rho_max,
                                center=150.0, width=8.0)
        grid = GridConfig(120, 300.0, t_final=30.0)
        checked = []
        obs = Observer(fn=lambda s: checked.append(
            bool(np.all((s.rho > 0) & (s.rho < p.rho_max)))), stride=1)
        solver.run(ic, grid, p, observers=[obs])
        assert checked and all(checked)


class TestVehicleCount:
    def test_uniform(self, p):
        state = uniform_equilibrium_state(p, 0.2 * p.rho_max, n=25)
        grid = GridConfig(25, 400.0, t_final=1.0)
        assert solver.vehicle_count(state, grid) == pytest.approx(
            0.2 * p.rho_max * 400.0, rel=1e-14)

    def test_additivity_over_subdomains(self, p):
        rng = np.random.default_rng(3)
        rho = rng.uniform(0.1, 0.8, 40) * p.rho_max
        u = model.desired_speed_U(rho, p)
        state = GridState(0.0, *solver.to_conservative(rho, u, p))
        grid = GridConfig(40, 100.0, t_final=1.0)
        total = solver.vehicle_count(state, grid)
        dx = grid.dx
        parts = rho[:13].sum() * dx + rho[13:29].sum() * dx + rho[29:].sum() * dx
        assert total == pytest.approx(parts, rel=1e-14)


class TestGridConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            GridConfig(3, 10.0, t_final=1.0)
        with pytest.raises(ValueError):
            GridConfig(16, 10.0, t_final=1.0, cfl=0.6)
        with pytest.raises(ValueError):
            GridConfig(16, -1.0, t_final=1.0)

    def test_dx(self):
        grid = GridConfig(50, 200.0, t_final=1.0)
        assert grid.dx == 4.0
        assert np.allclose(grid.cell_centers()[:2], [2.0, 6.0])
