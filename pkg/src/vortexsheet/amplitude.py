"""Amplitude-only dynamics, disk extension, and exact characteristics.

The closed amplitude equation (tangential speed H(w)/2) is

    w_t = (1/2) d/dsigma (w H(w)).

Its complex trace z = H(w) - i w has only positive-frequency modes, so it is
the boundary value of a function Z analytic on the unit disk, and z satisfies
the complex Burgers equation z_t = (1/2) z z_sigma.  Z is conserved along the
characteristics

    X(u, t) = u exp(-(i/2) Z_0(u) t),

which is both an exact solution oracle for the PDE solver and the mechanism
behind the loss of Sobolev well-posedness for rough data: wherever w_0 > 0
the characteristics enter the disk and transport interior analyticity back to
the boundary seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    PeriodicGrid,
    RealField,
    derivative,
    hilbert_transform,
    sobolev_norm,
    strip_width,
)
from .sheet import VortexAmplitude

DISK_SLACK = 1e-12


@dataclass(frozen=True)
class DiskPoint:
    """Point of the closed unit disk, |u| <= 1 up to round-off slack."""

    u: complex

    def __post_init__(self):
        object.__setattr__(self, "u", complex(self.u))
        if abs(self.u) > 1.0 + DISK_SLACK:
            raise ValueError(f"|u| = {abs(self.u):.15f} exceeds the closed disk")

    def __complex__(self) -> complex:
        return self.u


def _as_complex(u) -> complex:
    return complex(u)


def amplitude_rhs(w: VortexAmplitude | RealField) -> RealField:
    """dw/dt = (1/2) d/dsigma (w H(w)); exact zero mean by construction."""
    f = w.w if isinstance(w, VortexAmplitude) else w
    return 0.5 * derivative(f * hilbert_transform(f), 1)


def complex_trace(w: VortexAmplitude | RealField) -> np.ndarray:
    """Boundary trace z = H(w) - i w as complex samples on the nodes.

    For mean-zero w the trace carries only positive frequencies:
    zhat(k) = -2i what(k) for k >= 1 and zhat(k) = 0 for k <= 0.
    """
    f = w.w if isinstance(w, VortexAmplitude) else w
    return hilbert_transform(f).values - 1j * f.values


def trace_coefficients(w: VortexAmplitude | RealField) -> np.ndarray:
    """Positive-frequency coefficients zhat(1..n/2-1) of the complex trace."""
    f = w.w if isinstance(w, VortexAmplitude) else w
    return -2j * f.spectrum[1 : f.grid.n // 2]


def _poly_eval(coeffs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """sum_{k>=1} coeffs[k-1] u^k by Horner."""
    res = np.zeros_like(u, dtype=complex)
    for c in coeffs[::-1]:
        res = (res + c) * u
    return res


def poisson_extend(f: RealField, u) -> float | np.ndarray:
    """Harmonic extension of a real field, evaluated spectrally.

    P f(r e^{i sigma}) = sum_k fhat(k) r^{|k|} e^{i k sigma}
                       = fhat(0) + 2 Re sum_{k>=1} fhat(k) u^k,
    exact for the truncated spectrum and O(n) per point.
    """
    uu = np.atleast_1d(np.asarray(u, dtype=complex))
    if np.any(np.abs(uu) > 1.0 + DISK_SLACK):
        raise ValueError("evaluation point outside the closed unit disk")
    coeffs = f.spectrum[1 : f.grid.n // 2]
    vals = np.real(f.spectrum[0]) + 2.0 * np.real(_poly_eval(coeffs, uu))
    return float(vals[0]) if np.isscalar(u) or np.asarray(u).ndim == 0 else vals


def poisson_extend_trace(grid: PeriodicGrid, trace_coeffs: np.ndarray, u) -> np.ndarray:
    """Analytic extension Z(u) = sum_{k>=1} zhat(k) u^k of a complex trace."""
    uu = np.atleast_1d(np.asarray(u, dtype=complex))
    if np.any(np.abs(uu) > 1.0 + DISK_SLACK):
        raise ValueError("evaluation point outside the closed unit disk")
    vals = _poly_eval(np.asarray(trace_coeffs, dtype=complex), uu)
    return vals if np.asarray(u).ndim else complex(vals[0])


@dataclass
class CharacteristicTrack:
    """Closed-form characteristic through u0 with its conserved trace value."""

    u0: complex
    times: np.ndarray
    positions: np.ndarray
    z0: complex
    exit_index: int | None = None

    @property
    def exited(self) -> bool:
        return self.exit_index is not None


def characteristic_flow(w0: VortexAmplitude | RealField, u0, times) -> CharacteristicTrack:
    """Track X(u0, t) = u0 exp(-(i/2) Z_0(u0) t) at the requested times.

    The track is flagged (exit_index set) as soon as it leaves the closed
    disk, which happens for boundary seeds where w0 < 0.
    """
    u0 = _as_complex(u0)
    if abs(u0) > 1.0 + DISK_SLACK:
        raise ValueError("seed outside the closed unit disk")
    f = w0.w if isinstance(w0, VortexAmplitude) else w0
    times = np.asarray(times, dtype=float)
    if times.size and np.any(np.diff(times) <= 0.0):
        raise ValueError("times must be strictly increasing")
    z0 = complex(poisson_extend_trace(f.grid, trace_coefficients(f), np.array([u0]))[0])
    positions = u0 * np.exp(-0.5j * z0 * times)
    outside = np.abs(positions) > 1.0 + DISK_SLACK
    exit_index = int(np.argmax(outside)) if np.any(outside) else None
    return CharacteristicTrack(u0, times, positions, z0, exit_index)


def characteristic_conservation_error(times, fields, seeds) -> float:
    """Max over seeds and times of |Z(X(u,t), t) - Z_0(u)|.

    fields is the sequence of amplitude snapshots w(., t) from a numerical
    integration; the left side extends each snapshot's complex trace to the
    closed-form characteristic position, the right side is the extension of
    the initial trace at the seed.  Seeds whose track leaves the disk within
    the time window are skipped; raises if every seed exits.
    """
    times = np.asarray(times, dtype=float)
    if len(fields) != times.size:
        raise ValueError("one field per time required")
    f0 = fields[0].w if isinstance(fields[0], VortexAmplitude) else fields[0]
    grid = f0.grid
    seeds = np.array([_as_complex(s) for s in seeds], dtype=complex)
    z0 = poisson_extend_trace(grid, trace_coefficients(f0), seeds)
    paths = seeds[None, :] * np.exp(-0.5j * z0[None, :] * times[:, None])
    alive = np.all(np.abs(paths) <= 1.0 + DISK_SLACK, axis=0)
    if not np.any(alive):
        raise ValueError("every characteristic seed exits the disk on this window")
    worst = 0.0
    for m, w in enumerate(fields):
        f = w.w if isinstance(w, VortexAmplitude) else w
        zt = poisson_extend_trace(grid, trace_coefficients(f), paths[m, alive])
        worst = max(worst, float(np.max(np.abs(zt - z0[alive]))))
    return worst


def blowup_estimate(w0: VortexAmplitude | RealField, im_tol_rel: float = 1e-8):
    """Characteristic blow-up time from the trace derivative.

    Along the characteristic seeded at boundary node sigma_0 the angular
    derivative of the extended trace is z0'(sigma_0) / (1 - z0'(sigma_0) t/2),
    which diverges at t = 2 / z0'(sigma_0) when that value is real and
    positive.  Returns (t_star, sigma_star), the earliest such time over the
    nodes and its location, or (inf, None) when no node qualifies.  "Real" is
    tested against |Im z0'| < im_tol_rel * max |z0'|.
    """
    f = w0.w if isinstance(w0, VortexAmplitude) else w0
    # z' = (Hw)' - i w' = H(w') - i w', i.e. the trace of w'
    dz = complex_trace(derivative(f, 1))
    scale = float(np.max(np.abs(dz)))
    if scale == 0.0:
        return math.inf, None
    real_mask = np.abs(dz.imag) < im_tol_rel * scale
    positive = real_mask & (dz.real > 0.0)
    if not np.any(positive):
        return math.inf, None
    t_candidates = 2.0 / dz.real[positive]
    idx = int(np.argmin(t_candidates))
    sigma_star = float(f.grid.nodes[np.flatnonzero(positive)[idx]])
    return float(t_candidates[idx]), sigma_star


def characteristic_gradient_front(w0: VortexAmplitude | RealField, times):
    """Max |dZ/dTheta| along the boundary-seeded characteristic front.

    Neighboring boundary seeds sigma_j carry conserved values z0(sigma_j) and
    angular positions Theta_j(t) = sigma_j - Re(z0(sigma_j)) t / 2; central
    differencing of the two gives the angular derivative of the extended
    solution along the front, whose maximum follows
    |z0'(sigma*)| / (1 - z0'(sigma*) t / 2) toward the blow-up time.
    Returns an array of maxima, one per time.
    """
    f = w0.w if isinstance(w0, VortexAmplitude) else w0
    sigma = f.grid.nodes
    z0 = complex_trace(f)
    out = np.empty(len(np.atleast_1d(times)))
    for i, t in enumerate(np.atleast_1d(times)):
        theta = sigma - 0.5 * z0.real * t
        dz = np.roll(z0, -1) - np.roll(z0, 1)
        dtheta = np.roll(theta, -1) - np.roll(theta, 1)
        # unwrap the two periodic seams
        dtheta = np.mod(dtheta + np.pi, 2.0 * np.pi) - np.pi
        out[i] = np.max(np.abs(dz) / np.abs(dtheta))
    return out


@dataclass
class RefinementReport:
    """Norm-versus-resolution table from the refinement experiment."""

    s: float
    t_probe: float
    orders: tuple
    rows: list = field(default_factory=list)
    partial: bool = False

    def growth_factors(self, order: float) -> list:
        vals = [row["norms"][order] for row in self.rows if order in row["norms"]]
        return [vals[i + 1] / vals[i] for i in range(len(vals) - 1)]


def illposedness_experiment(
    w0_family,
    s: float,
    t_probe: float,
    resolutions=(128, 256, 512, 1024),
    filter_rel: float = 1e-13,
    cfl: float = 0.25,
) -> RefinementReport:
    """Refinement study of Sobolev norms at a fixed probe time.

    w0_family maps a resolution to the initial amplitude (truncations of one
    profile).  Each resolution is integrated to t_probe with matched relative
    filtering and dt proportional to the grid spacing; H^{s'} norms at t_probe
    for s' in {s, s+1/2, s+1} and the strip width over time are recorded.  A
    well-posed (analytic) family shows growth factors near 1 under doubling;
    rough H^s data shows unbounded growth in the stronger norms.
    """
    from .integrate import integrate_amplitude_fields

    orders = (float(s), float(s) + 0.5, float(s) + 1.0)
    report = RefinementReport(s=float(s), t_probe=float(t_probe), orders=orders)
    for n in resolutions:
        w0 = w0_family(n)
        f0 = w0.w if isinstance(w0, VortexAmplitude) else w0
        h = f0.grid.h
        steps = max(8, int(math.ceil(t_probe / (cfl * h))))
        dt = t_probe / steps
        times, fields, halted = integrate_amplitude_fields(
            f0, t_end=t_probe, dt=dt, filter_rel=filter_rel
        )
        strip_series = [
            (float(t), strip_width(fld).strip_width) for t, fld in zip(times, fields)
        ]
        row = {
            "n": int(n),
            "dt": dt,
            "halted": halted,
            "norms": {o: sobolev_norm(fields[-1], o) for o in orders},
            "strip_series": strip_series,
        }
        if halted:
            report.partial = True
        report.rows.append(row)
    return report
