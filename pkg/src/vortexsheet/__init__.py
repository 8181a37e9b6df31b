"""Pseudospectral tools for periodic vortex-sheet dynamics.

Layers, bottom up: spectral (grids, transforms, H and Lambda, strip
diagnostics), sheet (Birkhoff-Rott integral, arc-chord, evolution right-hand
sides), amplitude (the closed amplitude equation and its exact
characteristics), linearized (flat-sheet growth rates), integrate (RK4 /
Picard drivers with stop criteria), scenarios + runio + cli (the run
harness).
"""

from .spectral import (
    PeriodicGrid,
    RealField,
    SpectrumDiagnostics,
    derivative,
    hilbert_transform,
    inner_product,
    krasny_filter,
    lambda_op,
    sobolev_norm,
    strip_width,
)
from .sheet import (
    ArcChordError,
    GraphFoldError,
    SheetCurve,
    SheetState,
    VortexAmplitude,
    arc_chord,
    bernoulli_residual,
    br_integral,
    duchon_robert_rhs,
    one_sided_velocities,
    sheet_rhs,
)
from .amplitude import (
    CharacteristicTrack,
    DiskPoint,
    amplitude_rhs,
    blowup_estimate,
    characteristic_conservation_error,
    characteristic_flow,
    characteristic_gradient_front,
    complex_trace,
    illposedness_experiment,
    poisson_extend,
)
from .linearized import LinearState, growth_rate_fit, linear_exact, linear_rhs
from .integrate import (
    IntegratorConfig,
    RunRecord,
    adapt_dt,
    picard_iterate,
    rk4_step,
    run_simulation,
)

__version__ = "0.1.0"
