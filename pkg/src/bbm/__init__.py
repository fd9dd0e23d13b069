"""Simulator and verification harness for the damped BBM equation
u_t - u_xxt + u_x + u u_x = 0 under three damping mechanisms: localized
zeroth-order damping (variant A), localized gradient damping (variant B),
and dissipative boundary feedback on an interval (variant C).
"""

from .field import (
    Field1D,
    IntervalGrid,
    SobolevIndex,
    TorusGrid,
    dealias,
    derivative,
    h1_norm_interval,
    mean,
    quadrature,
    read_snapshot,
    sobolev_norm,
    to_grid,
    to_spectral,
    write_snapshot,
)
from .operators import (
    BoundaryLift,
    DampingProfile,
    FeedbackCoefficients,
    Problem,
    helmholtz_inverse_neumann,
    helmholtz_inverse_periodic,
    make_boundary_lift,
    rhs_variant_A,
    rhs_variant_B,
    rhs_variant_C,
)
from .timestep import (
    IntegratorFailure,
    PicardSettings,
    StepperState,
    gamma_map,
    integrate,
    picard_solve,
    rk4_step,
    suggest_window,
)
from .diagnostics import (
    DecayReport,
    EnergyLedger,
    EnergyRecord,
    Trajectory,
    band_observable,
    decay_report,
    dissipation_rate,
    energy,
    energy_balance_residual,
    lipschitz_flow_check,
    tail_dissipation,
)

__version__ = "0.1.0"
