"""Deterministic time integration with floor-based stop criteria.

Two drivers are provided: classical RK4 with Krasny filtering once per step,
and Picard iteration of the integral map on a whole time interval (the
successive-approximation construction behind the analytic local-existence
argument, with composite-trapezoid time quadrature).  Runs halt when the
arc-chord functional or the measured analyticity-strip width falls through
its configured floor, when a state goes nonfinite, or when Picard fails to
contract; the stop reason is always recorded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .amplitude import amplitude_rhs
from .linearized import LinearState, linear_rhs
from .sheet import (
    ArcChordError,
    SheetCurve,
    SheetState,
    VortexAmplitude,
    arc_chord,
    bernoulli_residual,
    duchon_robert_rhs,
    sheet_rhs,
)
from .spectral import (
    NonFiniteFieldError,
    RealField,
    derivative,
    hilbert_transform,
    krasny_filter,
    strip_width,
)

STOP_REASONS = ("t_end", "arc_chord_floor", "strip_floor", "nonfinite", "picard_diverged")

METHODS = ("rk4", "picard")

DT_MIN = 1e-8
SPEED_FLOOR = 1e-10


class NonFiniteError(RuntimeError):
    def __init__(self, stage: str):
        super().__init__(f"nonfinite values produced at {stage}")
        self.stage = stage


@dataclass(frozen=True)
class IntegratorConfig:
    dt_init: float = 1e-2
    cfl_safety: float = 0.5
    filter_threshold: float = 1e-13  # relative to the largest coefficient per field
    arc_chord_floor: float = 1e-4
    strip_floor: float | None = None  # None resolves to 3 h at run time
    t_end: float = 1.0
    method: str = "rk4"
    picard_tol: float = 1e-10
    picard_max_iter: int = 50
    dt_fixed: float | None = None
    snapshot_stride: int = 1
    store_stride: int = 1
    sobolev_orders: tuple = (0.0, 1.0, 2.0, 3.0)

    def __post_init__(self):
        if self.dt_init <= 0:
            raise ValueError("dt_init must be > 0")
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.filter_threshold <= 0:
            raise ValueError("filter_threshold must be > 0")
        if self.arc_chord_floor <= 0:
            raise ValueError("arc_chord_floor must be > 0")
        if self.strip_floor is not None and self.strip_floor < 0:
            raise ValueError("strip_floor must be >= 0")
        if self.t_end <= 0:
            raise ValueError("t_end must be > 0")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.picard_tol <= 0:
            raise ValueError("picard_tol must be > 0")
        if self.picard_max_iter < 1:
            raise ValueError("picard_max_iter must be >= 1")
        if self.dt_fixed is not None and self.dt_fixed <= 0:
            raise ValueError("dt_fixed must be > 0")
        if self.snapshot_stride < 1 or self.store_stride < 1:
            raise ValueError("strides must be >= 1")


@dataclass
class RunRecord:
    config: IntegratorConfig
    mode: str
    times: np.ndarray
    diagnostics: dict
    state_times: np.ndarray
    states: list
    stop_reason: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.stop_reason not in STOP_REASONS:
            raise ValueError(f"unknown stop reason {self.stop_reason!r}")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")

    @property
    def t_final(self) -> float:
        return float(self.times[-1])


def rk4_step(y: np.ndarray, rhs, dt: float, postprocess=None) -> np.ndarray:
    """One classical four-stage explicit step; postprocess runs once after it.

    Raises NonFiniteError naming the first stage that produced nonfinite
    values.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    k1 = rhs(y)
    _check_finite(k1, "stage k1")
    k2 = rhs(y + 0.5 * dt * k1)
    _check_finite(k2, "stage k2")
    k3 = rhs(y + 0.5 * dt * k2)
    _check_finite(k3, "stage k3")
    k4 = rhs(y + dt * k3)
    _check_finite(k4, "stage k4")
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _check_finite(out, "step result")
    if postprocess is not None:
        out = postprocess(out)
    return out


def _check_finite(arr, stage):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(stage)


# ---------------------------------------------------------------------------
# Problems: flat-vector adapters for each evolution mode
# ---------------------------------------------------------------------------


class _Problem:
    """Mode adapter: flattening, right-hand side, filtering, diagnostics."""

    mode = "abstract"

    def __init__(self, grid, config: IntegratorConfig):
        self.grid = grid
        self.config = config

    # interface: pack(state)->y, unpack(y, t)->state, rhs(y)->ydot,
    # speed(y)->float, diagnostics(state)->dict, stop_check(state)->reason|None

    def filter_fields(self, y: np.ndarray) -> np.ndarray:
        parts = []
        for v in self.split(y):
            f = RealField(self.grid, v)
            scale = float(np.max(np.abs(f.spectrum)))
            if scale > 0.0:
                f = krasny_filter(f, self.config.filter_threshold * scale)
            parts.append(f.values)
        return np.concatenate(parts)

    def split(self, y: np.ndarray):
        n = self.grid.n
        return [y[i * n : (i + 1) * n] for i in range(y.size // n)]

    def strip_floor(self) -> float:
        if self.config.strip_floor is not None:
            return self.config.strip_floor
        return 3.0 * self.grid.h


class AmplitudeProblem(_Problem):
    mode = "amplitude_only"

    def __init__(self, w0: VortexAmplitude, config):
        super().__init__(w0.grid, config)
        self.w0 = w0
        self.background = w0.background

    def pack(self, state: VortexAmplitude) -> np.ndarray:
        return state.w.values.copy()

    def unpack(self, y, t) -> VortexAmplitude:
        return VortexAmplitude(RealField(self.grid, y), self.background)

    def initial(self):
        return self.pack(self.w0)

    def rhs(self, y):
        return amplitude_rhs(RealField(self.grid, y)).values

    def speed(self, y):
        f = RealField(self.grid, y)
        return 0.5 * hilbert_transform(f).max_norm() + 0.5 * f.max_norm()

    def diagnostics(self, state: VortexAmplitude) -> dict:
        w = state.w
        diag = strip_width(w, sobolev_orders=self.config.sobolev_orders)
        out = {
            "mean_w": w.mean(),
            "l2_w": w.l2_norm(),
            "max_w": w.max_norm(),
            "strip_w": diag.strip_width,
        }
        for s, v in diag.sobolev.items():
            out[f"sobolev_w_{s:g}"] = v
        return out

    def stop_check(self, state: VortexAmplitude, diag: dict):
        if diag["strip_w"] < self.strip_floor():
            return "strip_floor"
        return None


class SheetProblem(_Problem):
    mode = "full_sheet"

    def __init__(self, state0: SheetState, config):
        super().__init__(state0.grid, config)
        self.state0 = state0
        self.background = state0.amplitude.background

    def pack(self, state: SheetState) -> np.ndarray:
        return np.concatenate(
            [state.curve.p1.values, state.curve.p2.values, state.amplitude.w.values]
        )

    def unpack(self, y, t) -> SheetState:
        p1, p2, w = self.split(y)
        return SheetState(
            SheetCurve(RealField(self.grid, p1), RealField(self.grid, p2)),
            VortexAmplitude(RealField(self.grid, w), self.background),
            time=t,
        )

    def initial(self):
        return self.pack(self.state0)

    def rhs(self, y):
        p1, p2, w = self.split(y)
        state = SheetState(
            SheetCurve(RealField(self.grid, p1), RealField(self.grid, p2)),
            VortexAmplitude(RealField(self.grid, w), self.background),
        )
        f1, f2, fw = sheet_rhs(state, arc_chord_floor=self.config.arc_chord_floor)
        return np.concatenate([f1.values, f2.values, fw.values])

    def speed(self, y):
        p1, p2, w = self.split(y)
        state = SheetState(
            SheetCurve(RealField(self.grid, p1), RealField(self.grid, p2)),
            VortexAmplitude(RealField(self.grid, w), self.background),
        )
        f1, f2, _ = sheet_rhs(state)
        return float(np.max(np.hypot(f1.values, f2.values)))

    def diagnostics(self, state: SheetState) -> dict:
        w = state.amplitude.w
        diag_w = strip_width(w, sobolev_orders=self.config.sobolev_orders)
        diag_p2 = strip_width(state.curve.p2, sobolev_orders=())
        out = {
            "mean_w": w.mean(),
            "l2_w": w.l2_norm(),
            "arc_chord": arc_chord(state.curve),
            "strip_w": diag_w.strip_width,
            "strip_p2": diag_p2.strip_width,
        }
        for s, v in diag_w.sobolev.items():
            out[f"sobolev_w_{s:g}"] = v
        return out

    def stop_check(self, state: SheetState, diag: dict):
        if diag["arc_chord"] < self.config.arc_chord_floor:
            return "arc_chord_floor"
        if min(diag["strip_w"], diag["strip_p2"]) < self.strip_floor():
            return "strip_floor"
        return None


class GraphProblem(_Problem):
    """Graph-form evolution: z1 frozen, so the curve is (alpha, y(alpha)).

    The amplitude moves with the same tangential speed that freezes z1:
    dw/dt = d/dalpha (c w) with c = -BR1.
    """

    mode = "graph"

    def __init__(self, y0: RealField, w0: VortexAmplitude, config):
        super().__init__(y0.grid, config)
        self.y0 = y0
        self.w0 = w0
        self.background = w0.background

    def pack(self, state) -> np.ndarray:
        y_field, w = state
        return np.concatenate([y_field.values, w.w.values])

    def unpack(self, y, t):
        yv, wv = self.split(y)
        return (RealField(self.grid, yv), VortexAmplitude(RealField(self.grid, wv), self.background))

    def initial(self):
        return self.pack((self.y0, self.w0))

    def rhs(self, y):
        yv, wv = self.split(y)
        yf = RealField(self.grid, yv)
        w = VortexAmplitude(RealField(self.grid, wv), self.background)
        dy, c = duchon_robert_rhs(yf, w)
        dw = derivative(c * w.w, 1)
        return np.concatenate([dy.values, dw.values])

    def speed(self, y):
        yv, wv = self.split(y)
        dy, c = duchon_robert_rhs(
            RealField(self.grid, yv),
            VortexAmplitude(RealField(self.grid, wv), self.background),
        )
        return max(dy.max_norm(), c.max_norm())

    def diagnostics(self, state) -> dict:
        yf, w = state
        diag_w = strip_width(w.w, sobolev_orders=self.config.sobolev_orders)
        out = {
            "mean_w": w.w.mean(),
            "l2_w": w.w.l2_norm(),
            "max_y": yf.max_norm(),
            "strip_w": diag_w.strip_width,
            "strip_y": strip_width(yf, sobolev_orders=()).strip_width,
        }
        for s, v in diag_w.sobolev.items():
            out[f"sobolev_w_{s:g}"] = v
        return out

    def stop_check(self, state, diag: dict):
        if min(diag["strip_w"], diag["strip_y"]) < self.strip_floor():
            return "strip_floor"
        return None


class LinearProblem(_Problem):
    mode = "linear_kh"

    def __init__(self, state0: LinearState, config):
        super().__init__(state0.grid, config)
        self.state0 = state0

    def pack(self, state: LinearState) -> np.ndarray:
        return np.concatenate([state.eps1.values, state.eps2.values])

    def unpack(self, y, t) -> LinearState:
        e1, e2 = self.split(y)
        return LinearState(RealField(self.grid, e1), RealField(self.grid, e2))

    def initial(self):
        return self.pack(self.state0)

    def rhs(self, y):
        out = linear_rhs(self.unpack(y, 0.0))
        return np.concatenate([out.eps1.values, out.eps2.values])

    def speed(self, y):
        return float(np.max(np.abs(self.rhs(y))))

    def diagnostics(self, state: LinearState) -> dict:
        return {
            "l2_eps1": state.eps1.l2_norm(),
            "l2_eps2": state.eps2.l2_norm(),
        }

    def stop_check(self, state, diag):
        return None


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------


def adapt_dt(problem: _Problem, y: np.ndarray) -> float:
    """CFL-style step: cfl_safety * h / node speed, clamped to [1e-8, dt_init]."""
    speed = max(problem.speed(y), SPEED_FLOOR)
    dt = problem.config.cfl_safety * problem.grid.h / speed
    return float(min(max(dt, DT_MIN), problem.config.dt_init))


def run_simulation(problem: _Problem, config: IntegratorConfig | None = None) -> RunRecord:
    """Integrate a problem to t_end, recording diagnostics and stop reason.

    Fully deterministic for a given problem and config: serial evaluation,
    fixed reduction order.  Snapshots are taken every snapshot_stride steps;
    states are retained every store_stride snapshots.
    """
    if config is None:
        config = problem.config
    if config.method == "picard":
        return _run_picard(problem, config)

    y = problem.initial()
    t = 0.0
    times = [0.0]
    state = problem.unpack(y, t)
    diag = problem.diagnostics(state)
    diagnostics = {k: [v] for k, v in diag.items()}
    diagnostics["dt"] = [0.0]
    states = [state]
    state_times = [0.0]
    stop_reason = None

    reason = problem.stop_check(state, diag)
    if reason is not None:
        stop_reason = reason

    step = 0
    while stop_reason is None and t < config.t_end - 1e-12:
        dt = config.dt_fixed if config.dt_fixed is not None else adapt_dt(problem, y)
        dt = min(dt, config.t_end - t)
        try:
            y = rk4_step(y, problem.rhs, dt, postprocess=problem.filter_fields)
        except ArcChordError:
            stop_reason = "arc_chord_floor"
            break
        except (NonFiniteError, NonFiniteFieldError):
            stop_reason = "nonfinite"
            break
        t += dt
        step += 1
        if step % config.snapshot_stride == 0 or t >= config.t_end - 1e-12:
            state = problem.unpack(y, t)
            try:
                diag = problem.diagnostics(state)
            except (ValueError, FloatingPointError):
                stop_reason = "nonfinite"
                break
            times.append(t)
            for k, v in diag.items():
                diagnostics[k].append(v)
            diagnostics["dt"].append(dt)
            if (len(times) - 1) % config.store_stride == 0:
                states.append(state)
                state_times.append(t)
            reason = problem.stop_check(state, diag)
            if reason is not None:
                stop_reason = reason

    if stop_reason is None:
        stop_reason = "t_end"

    record = RunRecord(
        config=config,
        mode=problem.mode,
        times=np.asarray(times),
        diagnostics={k: np.asarray(v) for k, v in diagnostics.items()},
        state_times=np.asarray(state_times),
        states=states,
        stop_reason=stop_reason,
        meta={"strip_floor": problem.strip_floor(), "n": problem.grid.n},
    )
    _attach_bernoulli(problem, record)
    return record


def _attach_bernoulli(problem, record: RunRecord):
    """Bernoulli-law residual column for sheet runs with uniform snapshots."""
    if problem.mode != "full_sheet" or len(record.states) < 3:
        return
    dts = np.diff(record.state_times)
    if dts.size == 0 or np.max(np.abs(dts - dts[0])) > 1e-9 * max(dts[0], 1.0):
        return
    resid = bernoulli_residual(record.states, float(dts[0]))
    col = np.full(record.times.size, np.nan)
    lookup = {round(t, 12): r.max_norm() for t, r in resid}
    for i, t in enumerate(record.times):
        key = round(float(t), 12)
        if key in lookup:
            col[i] = lookup[key]
    record.diagnostics["bernoulli_residual_max"] = col


def picard_iterate(problem: _Problem, t_end: float, n_snapshots: int | None = None):
    """Successive approximation of the integral map on [0, t_end].

    The trajectory is a vector of states on a uniform snapshot grid; each
    sweep replaces it with initial + cumulative trapezoid of the right-hand
    side along the previous sweep.  Iteration stops when consecutive sweeps
    differ by less than picard_tol in the max norm, or picard_max_iter is
    reached (divergence: partial iterates are still returned).
    """
    config = problem.config
    if n_snapshots is None:
        base = config.dt_fixed if config.dt_fixed is not None else config.dt_init
        n_snapshots = max(4, int(math.ceil(t_end / base)))
    times = np.linspace(0.0, t_end, n_snapshots + 1)
    dt = times[1] - times[0]
    y0 = problem.initial()
    traj = [y0.copy() for _ in times]
    converged = False
    deltas = []
    for _ in range(config.picard_max_iter):
        rhs_vals = [problem.rhs(y) for y in traj]
        new_traj = [y0.copy()]
        acc = np.zeros_like(y0)
        for m in range(1, len(times)):
            acc = acc + 0.5 * dt * (rhs_vals[m - 1] + rhs_vals[m])
            new_traj.append(y0 + acc)
        delta = max(
            float(np.max(np.abs(a - b))) for a, b in zip(new_traj, traj)
        )
        deltas.append(delta)
        traj = new_traj
        if not all(np.all(np.isfinite(y)) for y in traj):
            break
        if delta < config.picard_tol:
            converged = True
            break
    return times, traj, converged, deltas


def _run_picard(problem: _Problem, config: IntegratorConfig) -> RunRecord:
    times, traj, converged, deltas = picard_iterate(problem, config.t_end)
    states, diagnostics, kept_times = [], {}, []
    for t, y in zip(times, traj):
        state = problem.unpack(y, float(t))
        diag = problem.diagnostics(state)
        states.append(state)
        kept_times.append(float(t))
        for k, v in diag.items():
            diagnostics.setdefault(k, []).append(v)
    diagnostics["dt"] = [0.0] + [float(times[1] - times[0])] * (len(times) - 1)
    record = RunRecord(
        config=config,
        mode=problem.mode,
        times=np.asarray(kept_times),
        diagnostics={k: np.asarray(v) for k, v in diagnostics.items()},
        state_times=np.asarray(kept_times),
        states=states,
        stop_reason="t_end" if converged else "picard_diverged",
        meta={
            "strip_floor": problem.strip_floor(),
            "n": problem.grid.n,
            "picard_iterations": len(deltas),
            "picard_deltas": deltas,
        },
    )
    _attach_bernoulli(problem, record)
    return record


def integrate_amplitude_fields(
    w0: RealField, t_end: float, dt: float, filter_rel: float = 1e-13, record_stride: int = 1
):
    """Bare RK4 loop for the amplitude equation, returning field snapshots.

    Lighter-weight than run_simulation (no diagnostics); used by refinement
    experiments.  Returns (times, fields, halted) where halted marks a
    nonfinite abort with the trajectory truncated at the last good state.
    """
    grid = w0.grid
    steps = int(round(t_end / dt))
    if abs(steps * dt - t_end) > 1e-12 * max(t_end, 1.0):
        raise ValueError("dt must divide t_end")
    y = w0.values.copy()
    times = [0.0]
    fields = [w0]
    halted = False

    def rhs(v):
        return amplitude_rhs(RealField(grid, v)).values

    def post(v):
        f = RealField(grid, v)
        scale = float(np.max(np.abs(f.spectrum)))
        if scale > 0.0:
            f = krasny_filter(f, filter_rel * scale)
        return f.values

    for i in range(steps):
        try:
            y = rk4_step(y, rhs, dt, postprocess=post)
        except (NonFiniteError, NonFiniteFieldError):
            halted = True
            break
        if (i + 1) % record_stride == 0 or i == steps - 1:
            times.append((i + 1) * dt)
            fields.append(RealField(grid, y))
    return np.asarray(times), fields, halted
