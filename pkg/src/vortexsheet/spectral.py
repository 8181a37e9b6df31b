"""Periodic grids, Fourier analysis, and the singular operators H and Lambda.

Coefficient convention used throughout the package:

    f(alpha) = sum_k fhat(k) e^{i k alpha},   fhat(k) = (1/2pi) int f e^{-i k alpha} dalpha,

discretized as fhat = fft(values) / n with integer wavenumbers
k = 0, 1, ..., n/2-1, -n/2, ..., -1 (numpy fftfreq order).  Under this
convention the operators act as plain Fourier multipliers:

    H       : -i sign(k)          (Hilbert transform, zero on the mean)
    Lambda  : |k|                 (= H d/dalpha, the half Laplacian)
    d^m/da^m: (i k)^m

The Nyquist mode k = -n/2 has no conjugate partner on an even grid; it is
carried but zeroed by H, by Lambda and by odd-order derivatives so that all
outputs stay real with symmetric spectra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

_EPS = np.finfo(float).eps


class NonFiniteFieldError(ValueError):
    """Raised when field samples stop being finite (overflow, kernel blowup)."""


class BandLimitedSpectrum:
    """Sentinel marker values for strip fits on band-limited data."""

    RHO = math.inf
    RESIDUAL = 0.0


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform collocation grid alpha_j = 2 pi j / n on [0, 2pi)."""

    n: int

    def __post_init__(self):
        if self.n % 2 != 0 or self.n < 16:
            raise ValueError(f"grid size must be even and >= 16, got {self.n}")

    @cached_property
    def nodes(self) -> np.ndarray:
        x = 2.0 * np.pi * np.arange(self.n) / self.n
        x.setflags(write=False)
        return x

    @property
    def h(self) -> float:
        return 2.0 * np.pi / self.n

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        k.setflags(write=False)
        return k


class RealField:
    """Real periodic grid function together with its Fourier coefficients."""

    __slots__ = ("grid", "values", "spectrum")

    def __init__(self, grid: PeriodicGrid, values: np.ndarray, _spectrum=None):
        # own copies: fields are immutable and never alias caller arrays
        values = np.array(values, dtype=float)
        if values.shape != (grid.n,):
            raise ValueError(f"expected {grid.n} samples, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteFieldError("field samples must be finite")
        self.grid = grid
        self.values = values
        if _spectrum is None:
            _spectrum = np.fft.fft(values) / grid.n
        else:
            _spectrum = np.array(_spectrum, dtype=complex)
        self.spectrum = _spectrum
        self.values.setflags(write=False)
        self.spectrum.setflags(write=False)

    @classmethod
    def from_spectrum(cls, grid: PeriodicGrid, spectrum: np.ndarray, strict: bool = True) -> "RealField":
        """Build a field from coefficients.

        strict=True validates conjugate symmetry and rejects violations;
        strict=False projects onto the Hermitian part instead (used by exact
        propagators, where round-off asymmetry gets amplified by the growing
        modes and must be squashed, not rejected).
        """
        spectrum = np.asarray(spectrum, dtype=complex)
        if spectrum.shape != (grid.n,):
            raise ValueError(f"expected {grid.n} coefficients, got {spectrum.shape}")
        if strict:
            scale = np.max(np.abs(spectrum))
            if scale > 0.0:
                asym = np.abs(spectrum[1:] - np.conj(spectrum[1:][::-1])).max()
                asym = max(asym, abs(spectrum[0].imag))
                if asym > 1e-8 * scale:
                    raise ValueError("spectrum violates conjugate symmetry for a real field")
        else:
            sym = spectrum.copy()
            sym[1:] = 0.5 * (spectrum[1:] + np.conj(spectrum[1:][::-1]))
            sym[0] = spectrum[0].real
            spectrum = sym
        values = np.real(np.fft.ifft(spectrum * grid.n))
        return cls(grid, values, _spectrum=spectrum)

    @classmethod
    def from_function(cls, grid: PeriodicGrid, fn) -> "RealField":
        return cls(grid, fn(grid.nodes))

    @classmethod
    def zero(cls, grid: PeriodicGrid) -> "RealField":
        return cls(grid, np.zeros(grid.n))

    def mean(self) -> float:
        return float(np.real(self.spectrum[0]))

    def l2_norm(self) -> float:
        """L2 norm on [0, 2pi]: sqrt(h * sum f_j^2) = sqrt(2pi sum |fhat|^2)."""
        return math.sqrt(self.grid.h * float(np.dot(self.values, self.values)))

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    # linear arithmetic carries the spectrum along exactly (no FFT round trip,
    # exact zeros stay exact); pointwise products must retransform
    def __add__(self, other):
        self._check(other)
        return RealField(
            self.grid, self.values + other.values, _spectrum=self.spectrum + other.spectrum
        )

    def __sub__(self, other):
        self._check(other)
        return RealField(
            self.grid, self.values - other.values, _spectrum=self.spectrum - other.spectrum
        )

    def __mul__(self, other):
        if isinstance(other, RealField):
            self._check(other)
            return RealField(self.grid, self.values * other.values)
        c = float(other)
        return RealField(self.grid, self.values * c, _spectrum=self.spectrum * c)

    __rmul__ = __mul__

    def _check(self, other):
        if other.grid.n != self.grid.n:
            raise ValueError("grid size mismatch")


def inner_product(f: RealField, g: RealField) -> float:
    """Trapezoidal <f, g> = h sum f_j g_j, exact for resolved trig polynomials."""
    return f.grid.h * float(np.dot(f.values, g.values))


def apply_multiplier(f: RealField, multiplier: np.ndarray) -> RealField:
    spec = f.spectrum * multiplier
    values = np.real(np.fft.ifft(spec * f.grid.n))
    return RealField(f.grid, values, _spectrum=spec)


def hilbert_transform(f: RealField) -> RealField:
    """Periodic Hilbert transform, multiplier -i sign(k); kills mean and Nyquist."""
    k = f.grid.wavenumbers
    mult = -1j * np.sign(k)
    mult = np.where(k == -f.grid.n // 2, 0.0, mult)
    return apply_multiplier(f, mult)


def lambda_op(f: RealField) -> RealField:
    """Half Laplacian (-d^2/dalpha^2)^{1/2}: multiplier |k|.

    The Nyquist mode is zeroed so that lambda_op(f) == hilbert_transform(
    derivative(f, 1)) holds exactly, both factors dropping it.
    """
    k = f.grid.wavenumbers
    mult = np.abs(k).astype(complex)
    mult = np.where(k == -f.grid.n // 2, 0.0, mult)
    return apply_multiplier(f, mult)


def derivative(f: RealField, order: int) -> RealField:
    """Spectral d^order/dalpha^order, order in {1, 2, 3}."""
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2 or 3, got {order}")
    k = f.grid.wavenumbers
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult = np.where(k == -f.grid.n // 2, 0.0, mult)
    return apply_multiplier(f, mult)


def krasny_filter(f: RealField, threshold: float) -> RealField:
    """Zero every coefficient with |fhat(k)| < threshold (absolute cut)."""
    if threshold <= 0.0:
        raise ValueError("filter threshold must be positive")
    spec = np.where(np.abs(f.spectrum) < threshold, 0.0, f.spectrum)
    values = np.real(np.fft.ifft(spec * f.grid.n))
    return RealField(f.grid, values, _spectrum=spec)


def sobolev_norm(f: RealField, s: float) -> float:
    """H^s norm (sum_k (1+k^2)^s |fhat(k)|^2)^{1/2} in the coefficient convention.

    With this normalization ||cos||_{H^0} = sqrt(1/2); the L2 norm on [0, 2pi]
    is sqrt(2pi) times the s = 0 value.
    """
    if s < 0:
        raise ValueError("Sobolev order must be >= 0")
    k = f.grid.wavenumbers
    weights = (1.0 + k * k) ** s
    return math.sqrt(float(np.sum(weights * np.abs(f.spectrum) ** 2)))


@dataclass
class SpectrumDiagnostics:
    """Analyticity-strip fit plus norm maps read off one spectrum.

    strip_width is the estimated half-width rho of the strip of analyticity
    (radians), inf when the spectrum is band-limited to round-off.  sobolev
    maps sampled orders s to H^s norms; xr_estimate maps strip radii r to
    sum_k (1+|k|)^2 e^{r|k|} |fhat(k)|, an upper-bound proxy for sup norms of
    f and its first two derivatives on the strip of half-width r.
    """

    strip_width: float
    fit_residual: float
    sobolev: dict = field(default_factory=dict)
    xr_estimate: dict = field(default_factory=dict)
    band_limited: bool = False
    algebraic_order: float | None = None

    def __post_init__(self):
        if self.strip_width < 0:
            raise ValueError("strip width must be >= 0")


FIT_MODELS = ("plain_exponential", "algebraic_exponential")


def strip_width(
    f: RealField,
    fit_model: str = "plain_exponential",
    sobolev_orders=(0.0, 1.0, 2.0, 3.0),
    xr_radii=(0.05, 0.1, 0.2),
) -> SpectrumDiagnostics:
    """Least-squares fit of log|fhat(k)| ~ c - s log k - rho k on the upper modes.

    The fit window is the upper half of the resolved spectrum: from half the
    last coefficient above 10 eps max|fhat| up to that coefficient (n/4 to
    n/2 for a fully populated spectrum).  Low modes contaminate the
    exponential fit and the round-off tail contaminates it below.
    Band-limited input (nothing usable beyond the first 4 modes) reports the
    +inf sentinel with zero residual.
    """
    if fit_model not in FIT_MODELS:
        raise ValueError(f"unknown fit model {fit_model!r}")
    n = f.grid.n
    mags = np.abs(f.spectrum)
    # fold +-k: reality makes the pair equal up to round-off
    ks = np.arange(1, n // 2)
    folded = np.maximum(mags[1 : n // 2], mags[-1 : -(n // 2) : -1])
    scale = float(mags.max())

    def _diag(rho, resid, band_limited, s_order=None):
        sob = {float(s): sobolev_norm(f, s) for s in sobolev_orders}
        absk = np.abs(f.grid.wavenumbers)
        xr = {
            float(r): float(np.sum((1.0 + absk) ** 2 * np.exp(r * absk) * mags))
            for r in xr_radii
        }
        return SpectrumDiagnostics(
            strip_width=rho,
            fit_residual=resid,
            sobolev=sob,
            xr_estimate=xr,
            band_limited=band_limited,
            algebraic_order=s_order,
        )

    if scale == 0.0:
        return _diag(BandLimitedSpectrum.RHO, BandLimitedSpectrum.RESIDUAL, True)
    cutoff = 10.0 * _EPS * scale
    usable = folded > cutoff
    if not np.any(usable & (ks > 4)):
        return _diag(BandLimitedSpectrum.RHO, BandLimitedSpectrum.RESIDUAL, True)
    k_last = int(ks[usable][-1])
    k_lo = max(5, k_last // 2)
    window = usable & (ks >= k_lo) & (ks <= k_last)
    kw = ks[window].astype(float)
    logm = np.log(folded[window])
    n_params = 2 if fit_model == "plain_exponential" else 3
    if kw.size < n_params + 1:
        return _diag(BandLimitedSpectrum.RHO, BandLimitedSpectrum.RESIDUAL, True)
    cols = [np.ones_like(kw), -kw]
    if fit_model == "algebraic_exponential":
        cols.insert(1, -np.log(kw))
    design = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(design, logm, rcond=None)
    rho = float(coef[-1])
    s_order = float(coef[1]) if fit_model == "algebraic_exponential" else None
    resid = float(np.sqrt(np.mean((design @ coef - logm) ** 2)))
    # a growing tail means no analyticity left; clamp into the contract rho >= 0
    rho = max(rho, 0.0)
    return _diag(rho, resid, False, s_order)
