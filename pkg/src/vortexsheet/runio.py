"""Run persistence: delimited tables with sidecar metadata and manifests.

Every run directory contains CSV tables (17-significant-digit floats, so
values reload bit-faithfully), one .meta.json sidecar per table documenting
the columns, and manifest.json with the fully resolved scenario echo, code
version, timestamps, stop reason, and a checksummed file inventory.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .amplitude import (
    blowup_estimate,
    characteristic_gradient_front,
    poisson_extend_trace,
    trace_coefficients,
)
from .integrate import RunRecord, run_simulation
from .linearized import growth_rate_fit
from .scenarios import Scenario, build_problem

FLOAT_FMT = "%.17g"

CONVENTION_NOTE = (
    "fhat(k) = (1/2pi) int f e^{-i k alpha} dalpha; spectra columns list "
    "|fhat(k)| for k >= 0"
)


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return FLOAT_FMT % x
    return str(x)


def write_table(path: Path, columns: dict, rows) -> Path:
    """Write a CSV with header plus a .meta.json sidecar.

    columns maps name -> description; rows is an iterable of sequences in
    column order.
    """
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns.keys())
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    meta = {
        "columns": {name: desc for name, desc in columns.items()},
        "float_format": FLOAT_FMT,
        "coefficient_convention": CONVENTION_NOTE,
    }
    with open(path.with_suffix(".meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
    return path


def read_table(path: Path):
    """Return (column names, list of rows as floats-where-possible)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for raw in reader:
            row = []
            for cell in raw:
                try:
                    row.append(float(cell))
                except ValueError:
                    row.append(cell)
            rows.append(row)
    return header, rows


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    scenario: dict
    version: str
    created: str
    finished: str
    stop_reason: str
    t_final: float
    files: dict                 # relative name -> {sha256, bytes}
    meta: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    directory: str = ""

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "version": self.version,
            "created": self.created,
            "finished": self.finished,
            "stop_reason": self.stop_reason,
            "t_final": self.t_final,
            "files": self.files,
            "meta": self.meta,
            "flags": self.flags,
        }


def write_manifest(manifest: RunManifest, out_dir: Path) -> Path:
    path = Path(out_dir) / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2)
    manifest.directory = str(out_dir)
    return path


def read_manifest(path: Path) -> RunManifest:
    path = Path(path)
    with open(path) as fh:
        data = json.load(fh)
    m = RunManifest(**data)
    m.directory = str(path.parent)
    return m


def verify_manifest(path: Path) -> dict:
    """Recompute checksums; returns name -> bool (missing files map to False)."""
    m = read_manifest(path)
    out = {}
    for name, info in m.files.items():
        f = Path(m.directory) / name
        out[name] = f.exists() and sha256_file(f) == info["sha256"]
    return out


# ---------------------------------------------------------------------------
# Run execution
# ---------------------------------------------------------------------------


def execute(scenario: Scenario, out_root) -> RunManifest:
    """Run a scenario, write its tables, analyses, and manifest.

    On an unexpected failure the partial outputs written so far are kept and
    the manifest is flagged before the exception propagates.
    """
    out_dir = Path(out_root) / scenario.name
    out_dir.mkdir(parents=True, exist_ok=True)
    created = datetime.datetime.now(datetime.timezone.utc).isoformat()
    problem = build_problem(scenario)
    manifest = RunManifest(
        scenario=scenario.to_dict(),
        version=__version__,
        created=created,
        finished="",
        stop_reason="",
        t_final=float("nan"),
        files={},
    )
    try:
        record = run_simulation(problem)
        _write_run_tables(scenario, record, out_dir)
        _run_analyses(scenario, record, out_dir, manifest)
        manifest.stop_reason = record.stop_reason
        manifest.t_final = record.t_final
        manifest.meta.update(
            {"strip_floor": record.meta.get("strip_floor"), "n": record.meta.get("n")}
        )
        if record.stop_reason != "t_end":
            manifest.flags.append(f"halted:{record.stop_reason}")
    except Exception as exc:
        manifest.flags.append(f"error:{type(exc).__name__}: {exc}")
        manifest.finished = datetime.datetime.now(datetime.timezone.utc).isoformat()
        _inventory(manifest, out_dir)
        write_manifest(manifest, out_dir)
        raise
    manifest.finished = datetime.datetime.now(datetime.timezone.utc).isoformat()
    _inventory(manifest, out_dir)
    write_manifest(manifest, out_dir)
    bad = [name for name, ok in verify_manifest(out_dir / "manifest.json").items() if not ok]
    if bad:
        raise RuntimeError(f"manifest checksum verification failed for {bad}")
    return manifest


def _inventory(manifest: RunManifest, out_dir: Path):
    for f in sorted(out_dir.iterdir()):
        if f.name == "manifest.json" or f.is_dir():
            continue
        manifest.files[f.name] = {"sha256": sha256_file(f), "bytes": f.stat().st_size}


def _state_fields(mode: str, state) -> dict:
    if mode == "amplitude_only":
        return {"w": state.w}
    if mode == "full_sheet":
        return {"p1": state.curve.p1, "p2": state.curve.p2, "w": state.amplitude.w}
    if mode == "graph":
        return {"y": state[0], "w": state[1].w}
    return {"eps1": state.eps1, "eps2": state.eps2}


def _write_run_tables(scenario: Scenario, record: RunRecord, out_dir: Path):
    mode = scenario.mode
    # diagnostics: one row per snapshot time
    diag_cols = {"t": "snapshot time"}
    diag_cols.update(
        {k: _DIAG_DESCRIPTIONS.get(k, "diagnostic value") for k in record.diagnostics}
    )
    rows = [
        [t] + [float(record.diagnostics[k][i]) for k in record.diagnostics]
        for i, t in enumerate(record.times)
    ]
    write_table(out_dir / "diagnostics.csv", diag_cols, rows)

    # stored states, long format
    grid_name = "sigma" if mode == "amplitude_only" else "alpha"
    first = _state_fields(mode, record.states[0])
    field_names = list(first)
    cols = {
        "t": "snapshot time",
        "node": "grid index",
        grid_name: "grid coordinate in [0, 2pi)",
    }
    if mode == "full_sheet":
        cols["z1"] = "horizontal interface position alpha + p1"
        cols["z2"] = "vertical interface position p2"
    for name in field_names:
        cols[name] = _FIELD_DESCRIPTIONS.get(name, "field sample")
    snap_rows = []
    for t, state in zip(record.state_times, record.states):
        fields = _state_fields(mode, state)
        grid = fields[field_names[0]].grid
        for j in range(grid.n):
            row = [float(t), j, grid.nodes[j]]
            if mode == "full_sheet":
                row.append(grid.nodes[j] + fields["p1"].values[j])
                row.append(fields["p2"].values[j])
            row.extend(fields[name].values[j] for name in field_names)
            snap_rows.append(row)
    write_table(out_dir / "snapshots.csv", cols, snap_rows)

    # spectra at stored states, positive wavenumbers
    spec_cols = {"t": "snapshot time", "k": "wavenumber"}
    for name in field_names:
        spec_cols[f"abs_{name}_hat"] = f"|coefficient of {name} at wavenumber k|"
    spec_rows = []
    for t, state in zip(record.state_times, record.states):
        fields = _state_fields(mode, state)
        grid = fields[field_names[0]].grid
        for k in range(grid.n // 2):
            row = [float(t), k]
            row.extend(abs(fields[name].spectrum[k]) for name in field_names)
            spec_rows.append(row)
    write_table(out_dir / "spectra.csv", spec_cols, spec_rows)


_DIAG_DESCRIPTIONS = {
    "dt": "step size used up to this snapshot",
    "mean_w": "mean of the amplitude (conserved)",
    "l2_w": "L2 norm of the amplitude on [0, 2pi]",
    "max_w": "max norm of the amplitude",
    "arc_chord": "infimum of |z(a)-z(a-b)|^2/b^2 over node pairs",
    "strip_w": "analyticity-strip half-width estimate of the amplitude",
    "strip_p2": "analyticity-strip half-width estimate of the height",
    "strip_y": "analyticity-strip half-width estimate of the graph height",
    "max_y": "max norm of the graph height",
    "l2_eps1": "L2 norm of eps1",
    "l2_eps2": "L2 norm of eps2",
    "bernoulli_residual_max": "max-norm Bernoulli-law residual (centered difference)",
}

_FIELD_DESCRIPTIONS = {
    "w": "vorticity amplitude",
    "p1": "horizontal perturbation of the flat sheet",
    "p2": "vertical perturbation of the flat sheet",
    "y": "graph height",
    "eps1": "linearized horizontal/amplitude perturbation",
    "eps2": "linearized height perturbation",
}


def _run_analyses(scenario: Scenario, record: RunRecord, out_dir: Path, manifest: RunManifest):
    analyses = scenario.analyses
    mode = scenario.mode
    if "growth_rates" in analyses:
        spec = analyses["growth_rates"]
        fields = [
            _state_fields(mode, s)[spec["field"]] for s in record.states
        ]
        rows = []
        for k in spec["modes"]:
            reference = 0.5 * k
            try:
                rate = growth_rate_fit(record.state_times, fields, k)
                rel = abs(rate - reference) / reference if reference else float("nan")
                rows.append([k, rate, reference, rel])
            except ValueError:
                rows.append([k, float("nan"), reference, float("nan")])
        write_table(
            out_dir / "rates.csv",
            {
                "k": "wavenumber",
                "rate": "least-squares growth rate of log|fhat(k, t)|",
                "reference_rate": "linearized prediction k/2",
                "rel_err": "relative deviation from the reference",
            },
            rows,
        )
        manifest.meta["growth_rates_field"] = spec["field"]

    if "characteristics" in analyses and mode == "amplitude_only":
        spec = analyses["characteristics"]
        n_seeds, radius = int(spec["n_seeds"]), float(spec["radius"])
        seeds = radius * np.exp(2j * np.pi * np.arange(n_seeds) / n_seeds)
        w0 = record.states[0].w
        grid = w0.grid
        z0 = poisson_extend_trace(grid, trace_coefficients(w0), seeds)
        rows = []
        worst = 0.0
        alive = np.ones(n_seeds, dtype=bool)
        for t, state in zip(record.state_times, record.states):
            x = seeds * np.exp(-0.5j * z0 * float(t))
            alive &= np.abs(x) <= 1.0 + 1e-12
            if not np.any(alive):
                break
            zt = poisson_extend_trace(grid, trace_coefficients(state.w), x[alive])
            err = float(np.max(np.abs(zt - z0[alive])))
            worst = max(worst, err)
            rows.append([float(t), err, int(alive.sum())])
        write_table(
            out_dir / "conservation.csv",
            {
                "t": "snapshot time",
                "conservation_error": "max |Z(X(u,t),t) - Z0(u)| over seeds inside the disk",
                "active_seeds": "seeds still inside the closed disk",
            },
            rows,
        )
        manifest.meta["conservation_error_max"] = worst
        manifest.meta["characteristic_seeds"] = {"n": n_seeds, "radius": radius}

    if "blowup" in analyses and mode == "amplitude_only":
        t_star, sigma_star = blowup_estimate(record.states[0].w)
        manifest.meta["blowup_estimate"] = {
            "t_star": t_star if math.isfinite(t_star) else "inf",
            "sigma_star": sigma_star,
        }

    if "gradient_front" in analyses and mode == "amplitude_only":
        spec = analyses["gradient_front"]
        w0 = record.states[0].w
        t_star, _ = blowup_estimate(w0)
        t_max = min(float(spec["t_max"]), 0.98 * t_star)
        times = np.linspace(0.0, t_max, int(spec["n_times"]))
        grads = characteristic_gradient_front(w0, times)
        reference = grads[0] / (1.0 - times / t_star) if math.isfinite(t_star) else grads * 0
        rows = [[t, g, r] for t, g, r in zip(times, grads, reference)]
        write_table(
            out_dir / "gradient.csv",
            {
                "t": "time along the characteristics",
                "max_gradient": "max |dZ/dTheta| along the characteristic front",
                "reference": "C / (1 - t/t_star) with C the initial max gradient",
            },
            rows,
        )

    if "strip_extrapolation" in analyses:
        tail = int(analyses["strip_extrapolation"]["tail"])
        widths = record.diagnostics.get("strip_w")
        t_vanish = strip_vanishing_time(record.times, widths, tail)
        manifest.meta["strip_vanishing_time"] = t_vanish


def strip_vanishing_time(times, widths, tail: int = 12):
    """Linear tail extrapolation of the strip-width series to zero."""
    times = np.asarray(times, float)
    widths = np.asarray(widths, float)
    finite = np.isfinite(widths)
    t, w = times[finite], widths[finite]
    if t.size < 2:
        return None
    sl = slice(max(0, t.size - tail), t.size)
    coef = np.polyfit(t[sl], w[sl], 1)
    if coef[0] >= 0:
        return None
    return float(-coef[1] / coef[0])


# ---------------------------------------------------------------------------
# Cross-resolution comparison
# ---------------------------------------------------------------------------


def compare_runs(manifest_paths, out_dir=None) -> dict:
    """Cross-resolution table of Sobolev norms and strip widths.

    The manifests must come from the same scenario family: identical apart
    from name, resolution, and step-size settings.  Returns the report dict
    and, when out_dir is given, writes refinement.csv there.
    """
    manifests = [read_manifest(p) for p in manifest_paths]
    if not manifests:
        raise ValueError("no manifests given")

    def family_key(m: RunManifest):
        s = dict(m.scenario)
        s.pop("name", None)
        s.pop("resolution", None)
        integ = dict(s.get("integrator", {}))
        for k in ("dt_fixed", "dt_init", "snapshot_stride", "store_stride"):
            integ.pop(k, None)
        s["integrator"] = integ
        return json.dumps(s, sort_keys=True)

    keys = {family_key(m) for m in manifests}
    if len(keys) != 1:
        raise ValueError("manifests do not form a scenario family (configs differ)")
    manifests.sort(key=lambda m: m.scenario["resolution"])
    ns = [m.scenario["resolution"] for m in manifests]
    if len(set(ns)) != len(ns):
        raise ValueError("manifests duplicate a resolution")

    orders = list(manifests[0].scenario["integrator"]["sobolev_orders"])
    rows = []
    for m in manifests:
        header, data = read_table(Path(m.directory) / "diagnostics.csv")
        last = data[-1]
        get = {name: last[i] for i, name in enumerate(header)}
        row = {
            "n": m.scenario["resolution"],
            "t_final": m.t_final,
            "stop_reason": m.stop_reason,
            "strip_w": get.get("strip_w", float("nan")),
        }
        for s in orders:
            row[f"sobolev_w_{s:g}"] = get.get(f"sobolev_w_{s:g}", float("nan"))
        rows.append(row)

    factors = {}
    for s in orders:
        key = f"sobolev_w_{s:g}"
        vals = [r[key] for r in rows]
        factors[key] = [
            vals[i + 1] / vals[i] if vals[i] else float("nan")
            for i in range(len(vals) - 1)
        ]

    report = {"rows": rows, "growth_factors": factors, "orders": orders}
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        norm_keys = [f"sobolev_w_{s:g}" for s in orders]
        cols = {"n": "resolution", "t_final": "final time reached"}
        cols.update({k: f"H^{k.split('_')[-1]} norm at the final time" for k in norm_keys})
        cols["strip_w"] = "strip width at the final time"
        cols["growth_factor"] = "ratio of the highest-order norm to the previous resolution"
        top = norm_keys[-1]
        table_rows = []
        for i, r in enumerate(rows):
            gf = factors[top][i - 1] if i > 0 else float("nan")
            table_rows.append([r["n"], r["t_final"]] + [r[k] for k in norm_keys] + [r["strip_w"], gf])
        write_table(out_dir / "refinement.csv", cols, table_rows)
    return report
