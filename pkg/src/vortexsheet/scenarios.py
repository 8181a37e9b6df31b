"""Scenario configs: schema, validation, and initial-state construction.

A scenario is one human-editable YAML file.  Every default is materialized
at load time so the manifest echoes the exact configuration that ran; there
are no hidden defaults.  Validation failures carry the offending field path
and value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .initialdata import cosine_profile, sobolev_tail_profile
from .integrate import (
    AmplitudeProblem,
    GraphProblem,
    IntegratorConfig,
    LinearProblem,
    SheetProblem,
)
from .linearized import LinearState
from .sheet import SheetCurve, SheetState, VortexAmplitude, arc_chord
from .spectral import PeriodicGrid, RealField

MODES = ("full_sheet", "graph", "amplitude_only", "linear_kh")

MEAN_TOL = 1e-12


class ScenarioError(ValueError):
    """Config rejection with the offending field path attached.

    invariant=True marks semantic state-invariant violations (nonzero-mean
    amplitude, degenerate curve) as opposed to parse/schema errors; the CLI
    maps the two to distinct exit codes.
    """

    def __init__(self, fieldpath: str, message: str, invariant: bool = False):
        super().__init__(f"{fieldpath}: {message}")
        self.fieldpath = fieldpath
        self.invariant = invariant


@dataclass(frozen=True)
class Scenario:
    """Validated scenario: mode, resolution, initial data, integrator, analyses."""

    name: str
    mode: str
    resolution: int
    amplitude: dict          # {background, profile {kind, ...}}
    curve: dict              # {kind, modes|circle}
    graph: dict              # {modes}
    linear: dict             # {modes}
    integrator: IntegratorConfig
    analyses: dict = field(default_factory=dict)
    source: str = ""

    def to_dict(self) -> dict:
        cfg = self.integrator
        out = {
            "name": self.name,
            "mode": self.mode,
            "resolution": self.resolution,
            "amplitude": self.amplitude,
            "curve": self.curve,
            "graph": self.graph,
            "linear": self.linear,
            "integrator": {
                "dt_init": cfg.dt_init,
                "cfl_safety": cfg.cfl_safety,
                "filter_threshold": cfg.filter_threshold,
                "arc_chord_floor": cfg.arc_chord_floor,
                "strip_floor": cfg.strip_floor,
                "t_end": cfg.t_end,
                "method": cfg.method,
                "picard_tol": cfg.picard_tol,
                "picard_max_iter": cfg.picard_max_iter,
                "dt_fixed": cfg.dt_fixed,
                "snapshot_stride": cfg.snapshot_stride,
                "store_stride": cfg.store_stride,
                "sobolev_orders": list(cfg.sobolev_orders),
            },
            "analyses": self.analyses,
        }
        # unused initial-data blocks are omitted, not serialized empty
        return {k: v for k, v in out.items() if v != {}}


def write_scenario(scenario: Scenario, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        yaml.safe_dump(scenario.to_dict(), fh, sort_keys=False)
    return path


def load_scenario(path) -> Scenario:
    """Parse and validate one scenario file."""
    path = Path(path)
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ScenarioError(str(path), f"not parseable as YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError(str(path), "top level must be a mapping")
    return scenario_from_dict(raw, source=str(path))


def scenario_from_dict(raw: dict, source: str = "") -> Scenario:
    known = {
        "name", "mode", "resolution", "amplitude", "curve", "graph", "linear",
        "integrator", "analyses",
    }
    for key in raw:
        if key not in known:
            raise ScenarioError(key, "unknown field")

    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise ScenarioError("name", "required nonempty string")
    mode = raw.get("mode")
    if mode not in MODES:
        raise ScenarioError("mode", f"must be one of {MODES}, got {mode!r}")
    n = raw.get("resolution")
    if not isinstance(n, int) or n % 2 != 0 or n < 16:
        raise ScenarioError("resolution", f"must be an even integer >= 16, got {n!r}")

    amplitude = _norm_amplitude(raw.get("amplitude"), required=mode != "linear_kh")
    curve = _norm_curve(raw.get("curve"), allowed=mode == "full_sheet")
    graph = _norm_graph(raw.get("graph"), allowed=mode == "graph")
    linear = _norm_linear(raw.get("linear"), required=mode == "linear_kh")

    integrator = _norm_integrator(raw.get("integrator", {}))
    analyses = _norm_analyses(raw.get("analyses", {}))

    scenario = Scenario(
        name=name,
        mode=mode,
        resolution=n,
        amplitude=amplitude,
        curve=curve,
        graph=graph,
        linear=linear,
        integrator=integrator,
        analyses=analyses,
        source=source,
    )
    # state invariants at load time: build the initial data and check
    validate_initial_state(scenario)
    return scenario


def _norm_modes_list(entries, fieldpath, keys):
    if not isinstance(entries, list) or not entries:
        raise ScenarioError(fieldpath, "must be a nonempty list of mode entries")
    out = []
    for i, e in enumerate(entries):
        if not isinstance(e, dict):
            raise ScenarioError(f"{fieldpath}[{i}]", "must be a mapping")
        for key in e:
            if key not in keys:
                raise ScenarioError(f"{fieldpath}[{i}].{key}", "unknown field")
        if "k" not in e or not isinstance(e["k"], int) or e["k"] < 0:
            raise ScenarioError(f"{fieldpath}[{i}].k", "required integer >= 0")
        entry = {"k": e["k"]}
        for key in keys - {"k"}:
            entry[key] = float(e.get(key, 0.0))
        out.append(entry)
    return out


def _norm_amplitude(block, required: bool) -> dict:
    if block is None:
        if required:
            raise ScenarioError("amplitude", "required for this mode")
        return {}
    if not isinstance(block, dict):
        raise ScenarioError("amplitude", "must be a mapping")
    for key in block:
        if key not in {"background", "profile"}:
            raise ScenarioError(f"amplitude.{key}", "unknown field")
    background = float(block.get("background", 0.0))
    profile = block.get("profile", {"kind": "zero"})
    if not isinstance(profile, dict) or "kind" not in profile:
        raise ScenarioError("amplitude.profile", "must be a mapping with a 'kind'")
    kind = profile["kind"]
    if kind == "zero":
        norm = {"kind": "zero"}
    elif kind == "modes":
        norm = {
            "kind": "modes",
            "modes": _norm_modes_list(
                profile.get("modes"), "amplitude.profile.modes", {"k", "amp", "phase"}
            ),
        }
    elif kind == "sobolev_tail":
        for key in profile:
            if key not in {"kind", "s", "seed", "shift"}:
                raise ScenarioError(f"amplitude.profile.{key}", "unknown field")
        s = float(profile.get("s", 2.0))
        if s <= 0:
            raise ScenarioError("amplitude.profile.s", "must be > 0")
        norm = {
            "kind": "sobolev_tail",
            "s": s,
            "seed": int(profile.get("seed", 0)),
            "shift": float(profile.get("shift", 0.0)),
        }
    else:
        raise ScenarioError("amplitude.profile.kind", f"unknown kind {kind!r}")
    return {"background": background, "profile": norm}


def _norm_curve(block, allowed: bool) -> dict:
    if block is None:
        return {"kind": "flat"} if allowed else {}
    if not allowed:
        raise ScenarioError("curve", "only valid for full_sheet mode")
    if not isinstance(block, dict) or "kind" not in block:
        raise ScenarioError("curve", "must be a mapping with a 'kind'")
    kind = block["kind"]
    if kind == "flat":
        return {"kind": "flat"}
    if kind == "modes":
        return {
            "kind": "modes",
            "modes": _norm_modes_list(
                block.get("modes"), "curve.modes",
                {"k", "amp1", "amp2", "phase1", "phase2"},
            ),
        }
    if kind == "circle":
        for key in block:
            if key not in {"kind", "k", "amp"}:
                raise ScenarioError(f"curve.{key}", "unknown field")
        k = block.get("k", 1)
        if not isinstance(k, int) or k < 1:
            raise ScenarioError("curve.k", "required integer >= 1")
        return {"kind": "circle", "k": k, "amp": float(block.get("amp", 0.1))}
    raise ScenarioError("curve.kind", f"unknown kind {kind!r}")


def _norm_graph(block, allowed: bool) -> dict:
    if block is None:
        return {}
    if not allowed:
        raise ScenarioError("graph", "only valid for graph mode")
    if not isinstance(block, dict):
        raise ScenarioError("graph", "must be a mapping")
    for key in block:
        if key not in {"modes"}:
            raise ScenarioError(f"graph.{key}", "unknown field")
    return {
        "modes": _norm_modes_list(block.get("modes"), "graph.modes", {"k", "amp", "phase"})
    }


def _norm_linear(block, required: bool) -> dict:
    if block is None:
        if required:
            raise ScenarioError("linear", "required for linear_kh mode")
        return {}
    if not isinstance(block, dict):
        raise ScenarioError("linear", "must be a mapping")
    for key in block:
        if key not in {"modes"}:
            raise ScenarioError(f"linear.{key}", "unknown field")
    return {
        "modes": _norm_modes_list(
            block.get("modes"), "linear.modes", {"k", "amp1", "amp2"}
        )
    }


def _norm_integrator(block) -> IntegratorConfig:
    if not isinstance(block, dict):
        raise ScenarioError("integrator", "must be a mapping")
    defaults = IntegratorConfig()
    known = {
        "dt_init", "cfl_safety", "filter_threshold", "arc_chord_floor",
        "strip_floor", "t_end", "method", "picard_tol", "picard_max_iter",
        "dt_fixed", "snapshot_stride", "store_stride", "sobolev_orders",
    }
    for key in block:
        if key not in known:
            raise ScenarioError(f"integrator.{key}", "unknown field")
    kwargs = {key: getattr(defaults, key) for key in known}
    int_keys = {"picard_max_iter", "snapshot_stride", "store_stride"}
    for key, val in block.items():
        if val is None:
            kwargs[key] = None  # meaningful for strip_floor and dt_fixed
        elif key == "sobolev_orders":
            kwargs[key] = tuple(float(v) for v in val)
        elif key in int_keys:
            kwargs[key] = int(val)
        elif key == "method":
            kwargs[key] = str(val)
        else:
            kwargs[key] = float(val)
    try:
        return IntegratorConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ScenarioError("integrator", str(exc)) from exc


def _norm_analyses(block) -> dict:
    if not isinstance(block, dict):
        raise ScenarioError("analyses", "must be a mapping")
    known = {"growth_rates", "characteristics", "gradient_front", "blowup", "strip_extrapolation"}
    out = {}
    for key, val in block.items():
        if key not in known:
            raise ScenarioError(f"analyses.{key}", "unknown analysis")
        out[key] = val if isinstance(val, dict) else {}
    if "growth_rates" in out:
        gr = out["growth_rates"]
        gr.setdefault("field", "eps1")
        gr.setdefault("modes", [1, 2])
        gr["modes"] = [int(k) for k in gr["modes"]]
    if "characteristics" in out:
        ch = out["characteristics"]
        ch.setdefault("n_seeds", 16)
        ch.setdefault("radius", 0.9)
    if "gradient_front" in out:
        gf = out["gradient_front"]
        gf.setdefault("t_max", 1.5)
        gf.setdefault("n_times", 61)
    if "strip_extrapolation" in out:
        out["strip_extrapolation"].setdefault("tail", 12)
    return out


# ---------------------------------------------------------------------------
# Initial-state construction
# ---------------------------------------------------------------------------


def build_amplitude(scenario: Scenario, grid: PeriodicGrid) -> VortexAmplitude:
    block = scenario.amplitude
    profile = block["profile"]
    if profile["kind"] == "zero":
        f = RealField.zero(grid)
    elif profile["kind"] == "modes":
        f = cosine_profile(grid, [(m["k"], m["amp"], m["phase"]) for m in profile["modes"]])
    else:
        f = sobolev_tail_profile(grid, profile["s"], profile["seed"], profile["shift"])
    profile_mean = f.mean()
    if abs(profile_mean) > MEAN_TOL * max(f.l2_norm(), 1.0):
        raise ScenarioError(
            "amplitude.profile",
            f"mean-zero violated: integral of the profile is "
            f"{2 * math.pi * profile_mean:.6g} != 0 (declare a constant part via "
            f"amplitude.background instead)",
            invariant=True,
        )
    background = block["background"]
    if background != 0.0:
        # add the constant in spectrum space: fluctuation coefficients stay
        # exact and the mean is exactly the declared background
        spec = np.array(f.spectrum)
        spec[0] += background
        f = RealField.from_spectrum(grid, spec)
    return VortexAmplitude(f, background)


def build_curve(scenario: Scenario, grid: PeriodicGrid) -> SheetCurve:
    block = scenario.curve
    if block.get("kind", "flat") == "flat":
        return SheetCurve.flat(grid)
    if block["kind"] == "modes":
        p1 = cosine_profile(grid, [(m["k"], m["amp1"], m["phase1"]) for m in block["modes"]])
        p2 = cosine_profile(grid, [(m["k"], m["amp2"], m["phase2"]) for m in block["modes"]])
        return SheetCurve(p1, p2)
    # circle: nodes pushed around a circle of radius amp, the classic
    # perturbation z = (alpha + amp sin(k alpha), amp cos(k alpha))
    k, amp = block["k"], block["amp"]
    p1 = cosine_profile(grid, [(k, amp, -math.pi / 2)])
    p2 = cosine_profile(grid, [(k, amp, 0.0)])
    return SheetCurve(p1, p2)


def build_initial_state(scenario: Scenario):
    grid = PeriodicGrid(scenario.resolution)
    if scenario.mode == "amplitude_only":
        return build_amplitude(scenario, grid)
    if scenario.mode == "full_sheet":
        return SheetState(build_curve(scenario, grid), build_amplitude(scenario, grid))
    if scenario.mode == "graph":
        y = cosine_profile(
            grid, [(m["k"], m["amp"], m["phase"]) for m in scenario.graph["modes"]]
        )
        return (y, build_amplitude(scenario, grid))
    e1 = cosine_profile(grid, [(m["k"], m["amp1"]) for m in scenario.linear["modes"]])
    e2 = cosine_profile(grid, [(m["k"], m["amp2"]) for m in scenario.linear["modes"]])
    return LinearState(e1, e2)


def validate_initial_state(scenario: Scenario):
    """Mode-specific state invariants, checked at load time."""
    try:
        state = build_initial_state(scenario)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError("initial data", str(exc), invariant=True) from exc
    if scenario.mode == "full_sheet":
        if state.curve.min_tangent_norm() <= 0.0:
            raise ScenarioError(
                "curve", "initial curve has a vanishing tangent vector", invariant=True
            )
        g = arc_chord(state.curve)
        if g <= scenario.integrator.arc_chord_floor:
            raise ScenarioError(
                "curve",
                f"initial arc-chord {g:.6g} at or below the floor "
                f"{scenario.integrator.arc_chord_floor:.6g}",
                invariant=True,
            )
    return state


def build_problem(scenario: Scenario):
    state = validate_initial_state(scenario)
    cfg = scenario.integrator
    if scenario.mode == "amplitude_only":
        return AmplitudeProblem(state, cfg)
    if scenario.mode == "full_sheet":
        return SheetProblem(state, cfg)
    if scenario.mode == "graph":
        return GraphProblem(state[0], state[1], cfg)
    return LinearProblem(state, cfg)


def packaged_scenarios() -> dict:
    """Name -> path for the scenario files shipped with the package."""
    out = {}
    root = resources.files("vortexsheet") / "scenarios"
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".yaml"):
            out[entry.name[: -len(".yaml")]] = Path(str(entry))
    return out
