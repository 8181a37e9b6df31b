"""Closed-form initial profiles shared by scenarios and tests.

All builders return RealField objects with mean handled explicitly: cosine
profiles are mean-free by construction, the Sobolev-tail profile seeds every
mode k >= 1 so refinements of the same (s, seed) pair nest exactly.
"""

from __future__ import annotations

import numpy as np

from .spectral import PeriodicGrid, RealField


def cosine_profile(grid: PeriodicGrid, modes) -> RealField:
    """Sum of amp * cos(k alpha + phase) terms; k = 0 gives a constant.

    Built directly in spectrum space so every untouched coefficient is an
    exact zero (FFT round-off in empty modes would otherwise seed the growing
    components of the dynamics).
    """
    spec = np.zeros(grid.n, dtype=complex)
    for entry in modes:
        k, amp = int(entry[0]), float(entry[1])
        phase = float(entry[2]) if len(entry) > 2 else 0.0
        if k < 0 or k > grid.n // 2 - 1:
            raise ValueError(f"mode {k} not representable on an n={grid.n} grid")
        if k == 0:
            spec[0] += amp * np.cos(phase)
        else:
            spec[k] += 0.5 * amp * np.exp(1j * phase)
            spec[-k] += 0.5 * amp * np.exp(-1j * phase)
    return RealField.from_spectrum(grid, spec)


def sobolev_tail_profile(grid: PeriodicGrid, s: float, seed: int, shift: float = 0.0) -> RealField:
    """Rough mean-zero profile with |fhat(k)| = k^{-(s+1/2)} and seeded phases.

    The decay exponent puts the profile on the boundary of H^s (in H^{s'} for
    every s' < s, not in H^s itself in the continuum limit), so it is nowhere
    smooth.  Phases are drawn per wavenumber from independent streams keyed by
    (seed, k): truncations at different resolutions sample the same underlying
    function.  shift adds shift*cos(alpha), biasing the profile positive near
    alpha = 0 without touching the mean.
    """
    ks = np.arange(1, grid.n // 2)
    amps = ks.astype(float) ** (-(s + 0.5))
    phases = np.array(
        [np.random.default_rng([int(seed), int(k)]).uniform(0.0, 2.0 * np.pi) for k in ks]
    )
    spec = np.zeros(grid.n, dtype=complex)
    spec[1 : grid.n // 2] = 0.5 * amps * np.exp(1j * phases)
    spec[1] += 0.5 * shift
    spec[-(grid.n // 2 - 1) :] = np.conj(spec[1 : grid.n // 2][::-1])
    return RealField.from_spectrum(grid, spec)


def random_analytic_profile(
    grid: PeriodicGrid, rng: np.random.Generator, decay: float = 0.35, kmax: int | None = None
) -> RealField:
    """Mean-zero field with random coefficients damped by e^{-decay k}.

    kmax defaults to n/4 so that pointwise products stay alias-free on the
    same grid.
    """
    if kmax is None:
        kmax = grid.n // 4
    kmax = min(kmax, grid.n // 2 - 1)
    ks = np.arange(1, kmax + 1)
    coeff = (rng.standard_normal(kmax) + 1j * rng.standard_normal(kmax)) * np.exp(-decay * ks)
    spec = np.zeros(grid.n, dtype=complex)
    spec[1 : kmax + 1] = coeff
    spec[-kmax:] = np.conj(coeff[::-1])
    return RealField.from_spectrum(grid, spec)


def synthetic_spectrum_profile(
    grid: PeriodicGrid,
    rho: float,
    algebraic: float = 0.0,
    rng: np.random.Generator | None = None,
    noise: float = 0.0,
) -> RealField:
    """Field with planted decay |fhat(k)| = k^{-algebraic} e^{-rho k} for fit tests."""
    ks = np.arange(1, grid.n // 2)
    mags = np.exp(-rho * ks) * ks.astype(float) ** (-algebraic)
    if noise > 0.0:
        if rng is None:
            rng = np.random.default_rng(0)
        mags = mags * (1.0 + noise * rng.standard_normal(ks.size))
    spec = np.zeros(grid.n, dtype=complex)
    spec[1 : grid.n // 2] = 0.5 * mags
    spec[-(grid.n // 2 - 1) :] = np.conj(spec[1 : grid.n // 2][::-1])
    return RealField.from_spectrum(grid, spec)
