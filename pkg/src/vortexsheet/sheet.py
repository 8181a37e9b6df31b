"""Sheet state, the periodic Birkhoff-Rott integral, and curve diagnostics.

The curve is horizontally periodic, z(alpha + 2pi) = z(alpha) + (2pi, 0),
stored as perturbations (p1, p2) of the flat sheet: z = (alpha + p1, p2).
The self-induced velocity is the principal-value integral

    BR(z, w)(alpha) = (1/2pi) PV int (z(alpha) - z(beta))^perp
                      / |z(alpha) - z(beta)|^2  w(beta) dbeta,

periodized exactly through the cotangent identity: with Z = z1 + i z2,

    conj(v_i) = (1/(4 pi i)) sum_{j-i odd} w_j cot((Z_i - Z_j)/2) * 2h.

The alternate-point (odd-offset) trapezoid rule with doubled weights skips
the singular diagonal and is spectrally accurate for analytic curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import PeriodicGrid, RealField, derivative, hilbert_transform

MEAN_TOL = 1e-12


class ArcChordError(RuntimeError):
    """Raised when the arc-chord functional falls below the configured floor."""

    def __init__(self, value: float, floor: float):
        super().__init__(f"arc-chord {value:.6e} below floor {floor:.6e}")
        self.value = value
        self.floor = floor


class GraphFoldError(RuntimeError):
    """Raised when a curve cannot be represented as a graph (alpha, y(alpha))."""


@dataclass(frozen=True)
class SheetCurve:
    """Periodic perturbation of the flat sheet, z(alpha) = (alpha + p1, p2)."""

    p1: RealField
    p2: RealField

    def __post_init__(self):
        if self.p1.grid.n != self.p2.grid.n:
            raise ValueError("p1 and p2 must share a grid")

    @property
    def grid(self) -> PeriodicGrid:
        return self.p1.grid

    def tangent(self):
        """(dz1/dalpha, dz2/dalpha); the flat part contributes the 1."""
        d1 = derivative(self.p1, 1).values + 1.0
        d2 = derivative(self.p2, 1).values
        return d1, d2

    def min_tangent_norm(self) -> float:
        d1, d2 = self.tangent()
        return float(np.min(np.hypot(d1, d2)))

    def validate(self):
        if self.min_tangent_norm() <= 0.0:
            raise ValueError("curve has a vanishing tangent vector")
        if arc_chord(self) <= 0.0:
            raise ValueError("curve violates the arc-chord condition")

    @classmethod
    def flat(cls, grid: PeriodicGrid) -> "SheetCurve":
        return cls(RealField.zero(grid), RealField.zero(grid))


@dataclass(frozen=True)
class VortexAmplitude:
    """Vorticity amplitude along the sheet.

    Finite-energy data has mean zero; a constant background (e.g. the unit
    sheet strength of the classical Kelvin-Helmholtz configuration) may be
    declared explicitly, in which case the fluctuating part must be mean-free.
    """

    w: RealField
    background: float = 0.0

    def __post_init__(self):
        drift = abs(self.w.mean() - self.background)
        scale = max(self.w.l2_norm(), 1.0)
        if drift > MEAN_TOL * scale:
            raise ValueError(
                f"amplitude mean {self.w.mean():.3e} deviates from declared "
                f"background {self.background:.3e}"
            )

    @property
    def grid(self) -> PeriodicGrid:
        return self.w.grid

    @classmethod
    def from_values(cls, grid: PeriodicGrid, values, background: float = 0.0):
        return cls(RealField(grid, values), background)


@dataclass(frozen=True)
class SheetState:
    curve: SheetCurve
    amplitude: VortexAmplitude
    time: float = 0.0

    def __post_init__(self):
        if self.curve.grid.n != self.amplitude.grid.n:
            raise ValueError("curve and amplitude must share a grid")
        if self.time < 0:
            raise ValueError("time must be >= 0")

    @property
    def grid(self) -> PeriodicGrid:
        return self.curve.grid


def _complex_nodes(curve: SheetCurve) -> np.ndarray:
    return (curve.grid.nodes + curve.p1.values) + 1j * curve.p2.values


def br_integral(curve: SheetCurve, amplitude: VortexAmplitude, arc_chord_floor: float | None = None):
    """Birkhoff-Rott velocity at the nodes via the alternate-point rule.

    Returns (BR1, BR2) as RealFields.  When arc_chord_floor is given, the
    arc-chord functional is evaluated first and an ArcChordError carrying the
    offending value is raised below the floor.
    """
    if curve.grid.n != amplitude.grid.n:
        raise ValueError("curve and amplitude must share a grid")
    if arc_chord_floor is not None:
        g = arc_chord(curve)
        if g < arc_chord_floor:
            raise ArcChordError(g, arc_chord_floor)
    n = curve.grid.n
    h = curve.grid.h
    Z = _complex_nodes(curve)
    dZ = Z[:, None] - Z[None, :]
    idx = np.arange(n)
    odd = ((idx[:, None] - idx[None, :]) % 2) == 1
    kernel = np.zeros((n, n), dtype=complex)
    kernel[odd] = 1.0 / np.tan(0.5 * dZ[odd])
    # row-wise matmul keeps the reduction order fixed: deterministic output
    conj_v = (kernel @ amplitude.w.values) * (2.0 * h) / (4j * np.pi)
    v = np.conj(conj_v)
    return RealField(curve.grid, v.real), RealField(curve.grid, v.imag)


def arc_chord(curve: SheetCurve) -> float:
    """Infimum over node pairs of |z(alpha) - z(alpha - beta)|^2 / beta^2.

    beta is the periodic representative of the node offset in (-pi, pi]; the
    horizontal difference uses the unwrapped coordinate alpha + p1, so the
    flat sheet gives exactly 1.
    """
    nodes = curve.grid.nodes
    diff = nodes[:, None] - nodes[None, :]
    beta = diff - 2.0 * np.pi * np.round(diff / (2.0 * np.pi))
    d1 = beta + (curve.p1.values[:, None] - curve.p1.values[None, :])
    d2 = curve.p2.values[:, None] - curve.p2.values[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        g = (d1 * d1 + d2 * d2) / (beta * beta)
    np.fill_diagonal(g, np.inf)
    return float(np.min(g))


def arc_chord_brute_force(p1_fn, p2_fn, n: int) -> float:
    """Direct double-loop oracle: sample the closed-form curve on n nodes.

    Kept deliberately naive (row loop, no shared helpers) as an independent
    check on arc_chord.
    """
    alpha = 2.0 * np.pi * np.arange(n) / n
    z1 = alpha + p1_fn(alpha)
    z2 = p2_fn(alpha)
    best = math.inf
    for i in range(n):
        diff = alpha[i] - alpha
        beta = diff - 2.0 * np.pi * np.round(diff / (2.0 * np.pi))
        d1 = beta + (p1_fn(alpha[i : i + 1]) - p1_fn(alpha))
        d2 = z2[i] - z2
        with np.errstate(divide="ignore", invalid="ignore"):
            g = (d1 * d1 + d2 * d2) / (beta * beta)
        g[i] = math.inf
        best = min(best, float(np.min(g)))
    return best


def sheet_rhs(state: SheetState, arc_chord_floor: float | None = None):
    """Right-hand side of the sheet system with tangential velocity H(w).

        z_t = BR(z, w) + H(w) dz/dalpha,
        w_t = d/dalpha (w H(w)).

    Returns (dp1/dt, dp2/dt, dw/dt); dw/dt has exact zero mean since it is a
    spectral derivative of a periodic function.
    """
    curve, w = state.curve, state.amplitude.w
    br1, br2 = br_integral(curve, state.amplitude, arc_chord_floor)
    hw = hilbert_transform(w)
    d1, d2 = curve.tangent()
    f1 = RealField(curve.grid, br1.values + hw.values * d1)
    f2 = RealField(curve.grid, br2.values + hw.values * d2)
    fw = derivative(w * hw, 1)
    return f1, f2, fw


def one_sided_velocities(state: SheetState):
    """Limit velocities from either side of the sheet.

        v^{2,1} = BR(z, w) -+ ... = BR +- (w / 2|dz|^2) dz.

    Returns (v_plus, v_minus), each a (RealField, RealField) pair, where
    v_plus - v_minus = w dz/dalpha / |dz/dalpha|^2 (the tangential jump).
    """
    curve, w = state.curve, state.amplitude.w
    br1, br2 = br_integral(curve, state.amplitude)
    d1, d2 = curve.tangent()
    norm2 = d1 * d1 + d2 * d2
    if np.min(norm2) <= 0.0:
        raise ValueError("vanishing tangent vector")
    half = 0.5 * w.values / norm2
    g = curve.grid
    v_plus = (RealField(g, br1.values + half * d1), RealField(g, br2.values + half * d2))
    v_minus = (RealField(g, br1.values - half * d1), RealField(g, br2.values - half * d2))
    return v_plus, v_minus


def potential_jump(w: RealField) -> RealField:
    """Mean-zero antiderivative of w: d Pi / dalpha = w."""
    k = w.grid.wavenumbers
    with np.errstate(divide="ignore", invalid="ignore"):
        mult = np.where(k == 0, 0.0, 1.0 / (1j * k))
    mult = np.where(k == -w.grid.n // 2, 0.0, mult)
    spec = w.spectrum * mult
    return RealField(w.grid, np.real(np.fft.ifft(spec * w.grid.n)), _spectrum=spec)


def bernoulli_residual(states, dt: float):
    """Bernoulli-law residual from uniformly spaced snapshots.

    For the tangential choice c = H(w) the potential jump Pi (the mean-zero
    antiderivative of w) satisfies dPi/dt = w H(w).  The residual at interior
    snapshot m is the centered difference of Pi minus w H(w) evaluated there;
    second-order in the snapshot spacing for exact trajectories.  Returns a
    list of (time, RealField).
    """
    if len(states) < 3:
        raise ValueError("need at least 3 consecutive snapshots")
    times = np.array([s.time for s in states])
    gaps = np.diff(times)
    if np.max(np.abs(gaps - dt)) > 1e-9 * max(dt, 1.0):
        raise ValueError("snapshots must be uniformly spaced by dt")
    out = []
    for m in range(1, len(states) - 1):
        pi_prev = potential_jump(states[m - 1].amplitude.w)
        pi_next = potential_jump(states[m + 1].amplitude.w)
        w = states[m].amplitude.w
        rhs = w * hilbert_transform(w)
        resid = RealField(
            w.grid, (pi_next.values - pi_prev.values) / (2.0 * dt) - rhs.values
        )
        out.append((states[m].time, resid))
    return out


def duchon_robert_rhs(y: RealField, amplitude: VortexAmplitude):
    """Graph-form right-hand side: the tangential speed that freezes z1.

    On z = (alpha, y) the unique reparametrization speed making z1_t vanish is
    c = -BR1, giving dy/dt = BR2 + c dy/dalpha.  Returns (dy/dt, c).
    """
    curve = SheetCurve(RealField.zero(y.grid), y)
    br1, br2 = br_integral(curve, amplitude)
    c = RealField(y.grid, -br1.values)
    dy = RealField(y.grid, br2.values + c.values * derivative(y, 1).values)
    return dy, c


def curve_to_graph(curve: SheetCurve) -> RealField:
    """Recover y(alpha) for a curve that is already a graph (p1 = 0).

    Rejects folded curves: the graph representation requires dz1/dalpha > 0
    everywhere.
    """
    d1 = derivative(curve.p1, 1).values + 1.0
    if np.min(d1) <= 0.0:
        raise GraphFoldError(
            f"curve folds: min dz1/dalpha = {float(np.min(d1)):.3e} <= 0"
        )
    if curve.p1.max_norm() > 1e-13:
        raise GraphFoldError("curve is a graph only after reparametrization; p1 != 0")
    return curve.p2
