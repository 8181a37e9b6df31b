"""Linearized flat-sheet dynamics and growth-rate measurement.

Perturbing the unit-strength flat sheet by z = (alpha + eps1, eps2) and
keeping first-order terms couples the two perturbations through the half
Laplacian:

    d eps1 / dt = -(1/2) Lambda eps2,
    d eps2 / dt = -(1/2) Lambda eps1.

Per integer mode k the sum component (eps1 + eps2)/2 decays like
e^{-|k| t / 2} and the difference component grows like e^{+|k| t / 2}.
(A continuous-transform convention would scale the exponent by a constant;
with integer modes and Lambda = |k| the rates are +-|k|/2, which is what the
nonlinear solver is validated against.)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import PeriodicGrid, RealField, lambda_op

MEAN_TOL = 1e-12


@dataclass(frozen=True)
class LinearState:
    """Mean-zero perturbation pair (eps1, eps2)."""

    eps1: RealField
    eps2: RealField

    def __post_init__(self):
        if self.eps1.grid.n != self.eps2.grid.n:
            raise ValueError("eps1 and eps2 must share a grid")
        for name, f in (("eps1", self.eps1), ("eps2", self.eps2)):
            if abs(f.mean()) > MEAN_TOL * max(f.l2_norm(), 1.0):
                raise ValueError(f"{name} must be mean-zero, got mean {f.mean():.3e}")

    @property
    def grid(self) -> PeriodicGrid:
        return self.eps1.grid


def linear_rhs(state: LinearState) -> LinearState:
    return LinearState(-0.5 * lambda_op(state.eps2), -0.5 * lambda_op(state.eps1))


def linear_exact(state: LinearState, t: float) -> LinearState:
    """Exact per-mode propagator.

    eps1hat(k, t) = (eps1hat + eps2hat)/2 e^{-|k|t/2} + (eps1hat - eps2hat)/2 e^{+|k|t/2}
    eps2hat(k, t) = (eps1hat + eps2hat)/2 e^{-|k|t/2} - (eps1hat - eps2hat)/2 e^{+|k|t/2}

    Equal initial data excites only the decaying component.
    """
    grid = state.grid
    k = np.abs(grid.wavenumbers)
    decay = np.exp(-0.5 * k * t)
    growth = np.exp(0.5 * k * t)
    s = 0.5 * (state.eps1.spectrum + state.eps2.spectrum)
    d = 0.5 * (state.eps1.spectrum - state.eps2.spectrum)
    e1 = s * decay + d * growth
    e2 = s * decay - d * growth
    # growing modes amplify any round-off asymmetry: project, do not reject
    return LinearState(
        RealField.from_spectrum(grid, e1, strict=False),
        RealField.from_spectrum(grid, e2, strict=False),
    )


def growth_rate_fit(times, fields, k: int, noise_floor: float = 1e-13) -> float:
    """Least-squares slope of log |fhat(k, t)| against t.

    fields is a sequence of RealField snapshots; requires at least 8 of them
    with the tracked coefficient above noise_floor throughout.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 8:
        raise ValueError("need at least 8 snapshots to fit a growth rate")
    if len(fields) != times.size:
        raise ValueError("one field per time required")
    mags = np.array([abs(f.spectrum[k]) for f in fields])
    if np.any(mags <= noise_floor):
        raise ValueError(
            f"mode {k} falls below the noise floor {noise_floor:g}; cannot fit a rate"
        )
    design = np.column_stack([times, np.ones_like(times)])
    coef, *_ = np.linalg.lstsq(design, np.log(mags), rcond=None)
    return float(coef[0])
