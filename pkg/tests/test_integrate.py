import math

import numpy as np
import pytest

from vortexsheet.integrate import (
    AmplitudeProblem,
    GraphProblem,
    IntegratorConfig,
    LinearProblem,
    NonFiniteError,
    SheetProblem,
    adapt_dt,
    integrate_amplitude_fields,
    picard_iterate,
    rk4_step,
    run_simulation,
)
from vortexsheet.linearized import LinearState, linear_exact
from vortexsheet.sheet import SheetCurve, SheetState, VortexAmplitude
from vortexsheet.spectral import PeriodicGrid, RealField

from conftest import cos_field, random_mean_zero


def flat_cos_state(n=128):
    g = PeriodicGrid(n)
    return SheetState(SheetCurve.flat(g), VortexAmplitude(RealField(g, np.cos(g.nodes))))


class TestConfig:
    def test_defaults_valid(self):
        IntegratorConfig()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"dt_init": 0.0},
            {"cfl_safety": 0.0},
            {"cfl_safety": 1.5},
            {"filter_threshold": 0.0},
            {"arc_chord_floor": -1.0},
            {"strip_floor": -0.1},
            {"t_end": 0.0},
            {"method": "euler"},
            {"picard_tol": 0.0},
            {"picard_max_iter": 0},
            {"dt_fixed": -1e-3},
        ],
    )
    def test_rejects_bad_bounds(self, kwargs):
        with pytest.raises(ValueError):
            IntegratorConfig(**kwargs)


class TestRk4Step:
    def test_zero_rhs_identity(self):
        y = np.linspace(0.0, 1.0, 16)
        out = rk4_step(y, lambda v: np.zeros_like(v), 0.1)
        assert np.array_equal(out, y)

    def test_global_fourth_order_vs_linear_exact(self):
        g = PeriodicGrid(64)
        s0 = LinearState(cos_field(g, 2), RealField.zero(g))
        prob = LinearProblem(s0, IntegratorConfig())
        exact = linear_exact(s0, 1.0)

        def final_error(dt):
            # per-step filtering keeps round-off out of the growing modes,
            # leaving pure truncation error
            y = prob.initial()
            for _ in range(int(round(1.0 / dt))):
                y = rk4_step(y, prob.rhs, dt, postprocess=prob.filter_fields)
            out = prob.unpack(y, 1.0)
            return max(
                float(np.max(np.abs(out.eps1.values - exact.eps1.values))),
                float(np.max(np.abs(out.eps2.values - exact.eps2.values))),
            )

        e1 = final_error(0.02)
        e2 = final_error(0.01)
        assert 12.0 < e1 / e2 < 20.0

    def test_local_richardson_fifth_order(self):
        g = PeriodicGrid(128)
        prob = AmplitudeProblem(
            VortexAmplitude(RealField(g, np.cos(g.nodes))), IntegratorConfig()
        )
        y0 = prob.initial()

        def defect(dt):
            one = rk4_step(y0, prob.rhs, dt)
            half = rk4_step(rk4_step(y0, prob.rhs, dt / 2), prob.rhs, dt / 2)
            return float(np.max(np.abs(one - half)))

        d1 = defect(0.02)
        d2 = defect(0.01)
        # halving dt divides the one-step defect by ~2^5
        assert 24.0 < d1 / d2 < 40.0

    def test_nonfinite_stage_identified(self):
        y = np.ones(4)

        def bad_rhs(v):
            return np.full_like(v, np.inf)

        with pytest.raises(NonFiniteError, match="stage k1"):
            rk4_step(y, bad_rhs, 0.1)


class TestAdaptDt:
    def test_flat_cos_closed_form(self):
        state = flat_cos_state(128)
        cfg = IntegratorConfig(dt_init=1.0, cfl_safety=0.5)
        prob = SheetProblem(state, cfg)
        got = adapt_dt(prob, prob.initial())
        expected = 0.5 * state.grid.h / math.sqrt(1.25)
        assert abs(got - expected) < 1e-12

    def test_zero_amplitude_clamps_to_dt_init(self):
        g = PeriodicGrid(128)
        state = SheetState(SheetCurve.flat(g), VortexAmplitude(RealField.zero(g)))
        cfg = IntegratorConfig(dt_init=0.05)
        prob = SheetProblem(state, cfg)
        assert adapt_dt(prob, prob.initial()) == 0.05

    def test_doubling_n_halves_dt(self):
        cfg = IntegratorConfig(dt_init=1.0, cfl_safety=0.5)
        dts = []
        for n in (128, 256):
            prob = SheetProblem(flat_cos_state(n), cfg)
            dts.append(adapt_dt(prob, prob.initial()))
        assert abs(dts[0] / dts[1] - 2.0) < 1e-6


class TestPicard:
    def test_zero_rhs_converges_first_iteration(self):
        g = PeriodicGrid(128)
        prob = AmplitudeProblem(VortexAmplitude(RealField.zero(g)), IntegratorConfig())
        times, traj, converged, deltas = picard_iterate(prob, 0.5)
        assert converged and len(deltas) == 1
        assert all(np.array_equal(y, traj[0]) for y in traj)

    def test_linear_system_matches_exact(self):
        g = PeriodicGrid(64)
        s0 = LinearState(cos_field(g, 2, amp=0.1), RealField.zero(g))
        cfg = IntegratorConfig(dt_fixed=0.1 / 64, picard_tol=1e-12, picard_max_iter=80)
        prob = LinearProblem(s0, cfg)
        times, traj, converged, _ = picard_iterate(prob, 0.1)
        assert converged
        exact = linear_exact(s0, 0.1)
        out = prob.unpack(traj[-1], 0.1)
        err = max(
            float(np.max(np.abs(out.eps1.values - exact.eps1.values))),
            float(np.max(np.abs(out.eps2.values - exact.eps2.values))),
        )
        # limited by the trapezoid time quadrature
        assert err < 1e-6

    def test_sheet_picard_agrees_with_rk4(self):
        g = PeriodicGrid(64)
        state0 = SheetState(
            SheetCurve(RealField.zero(g), RealField(g, 1e-3 * np.cos(g.nodes))),
            VortexAmplitude(RealField(g, np.cos(g.nodes))),
        )
        T = 0.05
        cfg_p = IntegratorConfig(
            method="picard", t_end=T, dt_fixed=T / 32, picard_tol=1e-12, picard_max_iter=60
        )
        rec_p = run_simulation(SheetProblem(state0, cfg_p))
        assert rec_p.stop_reason == "t_end"
        cfg_r = IntegratorConfig(t_end=T, dt_fixed=T / 128, filter_threshold=1e-300)
        rec_r = run_simulation(SheetProblem(state0, cfg_r))
        end_p, end_r = rec_p.states[-1], rec_r.states[-1]
        err = max(
            float(np.max(np.abs(end_p.curve.p1.values - end_r.curve.p1.values))),
            float(np.max(np.abs(end_p.curve.p2.values - end_r.curve.p2.values))),
            float(np.max(np.abs(end_p.amplitude.w.values - end_r.amplitude.w.values))),
        )
        assert err < 1e-6

    def test_divergence_reported(self):
        g = PeriodicGrid(128)
        prob = AmplitudeProblem(
            VortexAmplitude(RealField(g, 2.0 * np.cos(g.nodes))),
            IntegratorConfig(method="picard", t_end=3.0, dt_fixed=0.25, picard_max_iter=4),
        )
        record = run_simulation(prob)
        assert record.stop_reason == "picard_diverged"
        assert record.meta["picard_iterations"] >= 1


class TestRunSimulation:
    def test_zero_amplitude_constant_run(self):
        g = PeriodicGrid(128)
        state = SheetState(SheetCurve.flat(g), VortexAmplitude(RealField.zero(g)))
        cfg = IntegratorConfig(t_end=0.2, dt_fixed=0.02)
        rec = run_simulation(SheetProblem(state, cfg))
        assert rec.stop_reason == "t_end"
        last = rec.states[-1]
        assert last.curve.p1.max_norm() == 0.0
        assert last.curve.p2.max_norm() == 0.0
        assert last.amplitude.w.max_norm() == 0.0

    def test_near_self_intersection_halts(self):
        g = PeriodicGrid(128)
        curve = SheetCurve(
            RealField(g, -0.9 * np.sin(g.nodes)), RealField(g, 0.02 * np.sin(2 * g.nodes))
        )
        state = SheetState(curve, VortexAmplitude(RealField(g, np.cos(g.nodes))))
        cfg = IntegratorConfig(t_end=1.0, dt_fixed=2e-3, arc_chord_floor=1e-2)
        rec = run_simulation(SheetProblem(state, cfg))
        assert rec.stop_reason == "arc_chord_floor"
        assert rec.t_final < 0.2

    def test_mean_preserved_every_snapshot(self):
        # rough O(1) random amplitude steepens fast; whatever stops the run,
        # the recorded mean never drifts
        g = PeriodicGrid(128)
        state = SheetState(
            SheetCurve(RealField.zero(g), RealField(g, 0.05 * np.cos(g.nodes))),
            VortexAmplitude(random_mean_zero(g, seed=12)),
        )
        cfg = IntegratorConfig(t_end=0.15, dt_fixed=5e-3)
        rec = run_simulation(SheetProblem(state, cfg))
        assert rec.times.size >= 3
        assert np.max(np.abs(rec.diagnostics["mean_w"])) < 1e-12

    def test_deterministic_reruns(self):
        g = PeriodicGrid(64)
        state = SheetState(
            SheetCurve(RealField.zero(g), RealField(g, 0.01 * np.cos(g.nodes))),
            VortexAmplitude(RealField(g, np.cos(g.nodes))),
        )
        cfg = IntegratorConfig(t_end=0.1, dt_fixed=5e-3)
        rec1 = run_simulation(SheetProblem(state, cfg))
        rec2 = run_simulation(SheetProblem(state, cfg))
        assert np.array_equal(rec1.times, rec2.times)
        for key in rec1.diagnostics:
            assert np.array_equal(
                rec1.diagnostics[key], rec2.diagnostics[key], equal_nan=True
            )
        assert np.array_equal(
            rec1.states[-1].amplitude.w.values, rec2.states[-1].amplitude.w.values
        )

    def test_blowup_run_strip_decay(self):
        # cos amplitude data: strip width falls monotonically and extrapolates
        # to the trace singularity near 2/e ~ 0.736
        g = PeriodicGrid(1024)
        prob = AmplitudeProblem(
            VortexAmplitude(RealField(g, np.cos(g.nodes))),
            IntegratorConfig(t_end=1.8, dt_init=5e-3, snapshot_stride=4),
        )
        rec = run_simulation(prob)
        assert rec.stop_reason == "strip_floor"
        assert 0.6 < rec.t_final < 0.78
        widths = rec.diagnostics["strip_w"]
        finite = np.isfinite(widths)
        w = widths[finite]
        t = rec.times[finite]
        assert np.all(np.diff(w) < 1e-12)  # monotone decreasing once finite
        # linear tail extrapolation of the vanishing time
        tail = slice(max(0, len(t) - 12), len(t))
        coef = np.polyfit(t[tail], w[tail], 1)
        t_vanish = -coef[1] / coef[0]
        assert 0.70 < t_vanish < 0.80

    def test_linear_mode_runs(self):
        g = PeriodicGrid(128)
        s0 = LinearState(cos_field(g, 2, amp=1e-6), cos_field(g, 2, amp=-1e-6))
        cfg = IntegratorConfig(t_end=1.0, dt_fixed=0.02)
        rec = run_simulation(LinearProblem(s0, cfg))
        assert rec.stop_reason == "t_end"
        # difference mode grows like e^{t}
        growth = rec.diagnostics["l2_eps1"][-1] / rec.diagnostics["l2_eps1"][0]
        assert abs(growth - math.e) < 0.01

    def test_graph_mode_runs(self):
        g = PeriodicGrid(64)
        prob = GraphProblem(
            RealField(g, 1e-3 * np.cos(g.nodes)),
            VortexAmplitude(RealField(g, np.cos(g.nodes))),
            IntegratorConfig(t_end=0.1, dt_fixed=5e-3),
        )
        rec = run_simulation(prob)
        assert rec.stop_reason == "t_end"
        assert np.max(np.abs(rec.diagnostics["mean_w"])) < 1e-12


class TestIntegrateAmplitudeFields:
    def test_rejects_nondivisible_dt(self, grid128):
        f = RealField.zero(grid128)
        with pytest.raises(ValueError, match="divide"):
            integrate_amplitude_fields(f, t_end=0.1, dt=0.03)

    def test_zero_stays_zero(self, grid128):
        times, fields, halted = integrate_amplitude_fields(
            RealField.zero(grid128), t_end=0.1, dt=0.01
        )
        assert not halted
        assert fields[-1].max_norm() == 0.0
