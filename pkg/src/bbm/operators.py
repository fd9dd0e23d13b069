"""Operator algebra for the damped BBM variants: Helmholtz inverses on both
domains, damping coefficient profiles, the quadratic boundary lift, and the
right-hand sides that turn each variant into an evolution u_t = F(u).

Variants:
  A -- torus, zeroth-order damping:   u_t = -(1-dxx)^{-1}[a(x) u + (u + u^2/2)_x]
  B -- torus, gradient damping:       u_t = -(1-dxx)^{-1}[(u + u^2/2)_x - (a(x) u_x)_x]
  C -- interval, boundary feedback:   u_t solves a Neumann elliptic problem whose
       slope data at x = 0, L are alpha*u(0) + u(0)^2/3 and beta*u(L) + u(L)^2/3.

All nodal kernels broadcast over leading axes, so a whole time-sampled path
(shape (K+1, N)) evaluates in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .field import Field1D, IntervalGrid, TorusGrid, _spectral_derivative_values

__all__ = [
    "DampingProfile",
    "FeedbackCoefficients",
    "BoundaryLift",
    "Problem",
    "helmholtz_inverse_periodic",
    "helmholtz_inverse_neumann",
    "make_boundary_lift",
    "rhs_variant_A",
    "rhs_variant_B",
    "rhs_variant_C",
]


@dataclass(frozen=True)
class DampingProfile:
    """Nonnegative damping coefficient a(x) sampled at the grid nodes.

    kind is one of 'bump', 'constant', 'table'.  The bump is the compactly
    supported C-infinity profile

        a(x) = amplitude * exp(1 - 1/(1 - ((x - center)/radius)^2))   inside the band,
        a(x) = 0                                                      outside,

    with support band (center - radius, center + radius); distances wrap
    periodically on the torus.
    """

    grid: TorusGrid | IntervalGrid
    values: np.ndarray
    kind: str
    amplitude: float
    support_band: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float, copy=True)
        n = self.grid.n_points if isinstance(self.grid, TorusGrid) else self.grid.n_nodes
        if values.shape != (n,):
            raise ValueError(f"damping values must have shape ({n},), got {values.shape}")
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise ValueError("damping values must be finite and nonnegative")
        if self.kind not in ("bump", "constant", "table"):
            raise ValueError(f"unknown damping kind {self.kind!r}")
        if self.amplitude < 0.0:
            raise ValueError(f"amplitude must be nonnegative, got {self.amplitude}")
        if self.kind == "bump" and self.amplitude > 0.0:
            center = 0.5 * (self.support_band[0] + self.support_band[1])
            nearest = int(np.argmin(np.abs(_signed_distance(self.grid, center))))
            if not values[nearest] > 0.5 * self.amplitude:
                raise ValueError("bump profile must exceed amplitude/2 at the band center")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def bump(cls, grid, center: float, radius: float, amplitude: float) -> "DampingProfile":
        if radius <= 0.0:
            raise ValueError(f"radius must be positive, got {radius}")
        d = _signed_distance(grid, center)
        values = np.zeros_like(d)
        inside = np.abs(d) < radius
        r = d[inside] / radius
        values[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - r * r))
        return cls(grid, values, "bump", amplitude, (center - radius, center + radius))

    @classmethod
    def constant(cls, grid, amplitude: float) -> "DampingProfile":
        n = grid.n_points if isinstance(grid, TorusGrid) else grid.n_nodes
        left = 0.0
        right = 2.0 * math.pi if isinstance(grid, TorusGrid) else grid.length
        return cls(grid, np.full(n, float(amplitude)), "constant", amplitude, (left, right))

    @classmethod
    def from_table(cls, grid, xs: np.ndarray, a_values: np.ndarray) -> "DampingProfile":
        """Linear interpolation of a two-column (x, a) table onto the grid."""
        xs = np.asarray(xs, dtype=float)
        a_values = np.asarray(a_values, dtype=float)
        if xs.ndim != 1 or xs.shape != a_values.shape or xs.size < 2:
            raise ValueError("table must be two columns of equal length >= 2")
        if np.any(np.diff(xs) <= 0.0):
            raise ValueError("table x column must be strictly increasing")
        values = np.interp(grid.nodes, xs, a_values)
        positive = a_values > 0.0
        band = (float(xs[positive][0]), float(xs[positive][-1])) if positive.any() else None
        return cls(grid, values, "table", float(a_values.max(initial=0.0)), band)

    @classmethod
    def from_csv(cls, grid, path) -> "DampingProfile":
        table = np.loadtxt(path, delimiter=",", ndmin=2)
        if table.shape[1] != 2:
            raise ValueError(f"{path}: damping table must have exactly two columns")
        return cls.from_table(grid, table[:, 0], table[:, 1])


def _signed_distance(grid, center: float) -> np.ndarray:
    """Node distances to a point; wraps on the torus."""
    d = grid.nodes - center
    if isinstance(grid, TorusGrid):
        d = (d + math.pi) % (2.0 * math.pi) - math.pi
    return d


@dataclass(frozen=True)
class FeedbackCoefficients:
    """Boundary feedback gains; dissipative iff alpha > 1/2 and beta < 1/2.
    The balanced case alpha = beta = 1/2 is energy-conserving."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError("feedback coefficients must be finite")

    @property
    def is_dissipative(self) -> bool:
        return self.alpha > 0.5 and self.beta < 0.5

    @property
    def is_conservative(self) -> bool:
        return self.alpha == 0.5 and self.beta == 0.5


@dataclass(frozen=True)
class BoundaryLift:
    """Quadratic g(x) = a_val*x + (b_val - a_val)/(2L) * x^2, the unique
    parabola with slopes g_x(0) = a_val and g_x(L) = b_val."""

    a_val: float
    b_val: float
    length: float

    def values(self, x: np.ndarray) -> np.ndarray:
        return self.a_val * x + (self.b_val - self.a_val) / (2.0 * self.length) * x**2

    def slope(self, x: np.ndarray | float):
        return self.a_val + (self.b_val - self.a_val) / self.length * x

    @property
    def curvature(self) -> float:
        """g_xx, constant in x."""
        return (self.b_val - self.a_val) / self.length


def make_boundary_lift(u: Field1D, coeffs: FeedbackCoefficients) -> BoundaryLift:
    """Slope data from the boundary feedback law: the lift carries
    a_val = alpha*u(0) + u(0)^2/3 and b_val = beta*u(L) + u(L)^2/3."""
    if u.is_torus:
        raise ValueError("boundary lifts are defined on interval fields")
    u0 = float(u.values[0])
    uL = float(u.values[-1])
    return BoundaryLift(
        coeffs.alpha * u0 + u0**2 / 3.0,
        coeffs.beta * uL + uL**2 / 3.0,
        u.grid.length,
    )


# ---------------------------------------------------------------------------
# Helmholtz inverses


def _helmholtz_periodic_values(values: np.ndarray, n_points: int) -> np.ndarray:
    """(1 - dxx)^{-1}: divide one-sided bins by 1 + n^2.  Broadcasts."""
    n = np.arange(n_points // 2 + 1, dtype=float)
    hat = np.fft.rfft(values, axis=-1) / (1.0 + n * n)
    return np.fft.irfft(hat, n=n_points, axis=-1)


def helmholtz_inverse_periodic(f: Field1D) -> Field1D:
    """Solve (1 - dxx) v = f on the torus.  Exact per resolved mode: the
    coefficient of exp(inx) is divided by 1 + n^2."""
    if not f.is_torus:
        raise ValueError("helmholtz_inverse_periodic requires a torus field")
    return f.with_values(_helmholtz_periodic_values(f.values, f.grid.n_points))


def _neumann_banded(grid: IntervalGrid) -> np.ndarray:
    """Banded form of I - D2 with ghost-point closures enforcing zero slope.

    Row 0 uses the ghost identity w_{-1} = w_1 (and row M its mirror), which
    doubles the off-diagonal entry there.  The matrix is self-adjoint under
    trapezoid weights and positive definite, so the solve never degenerates.
    """
    m = grid.n_cells
    inv_h2 = 1.0 / grid.spacing**2
    ab = np.zeros((3, m + 1))
    ab[0, 1:] = -inv_h2
    ab[0, 1] = -2.0 * inv_h2
    ab[1, :] = 1.0 + 2.0 * inv_h2
    ab[2, :-1] = -inv_h2
    ab[2, m - 1] = -2.0 * inv_h2
    return ab


def _helmholtz_neumann_values(values: np.ndarray, grid: IntervalGrid) -> np.ndarray:
    ab = _neumann_banded(grid)
    if values.ndim == 1:
        return solve_banded((1, 1), ab, values)
    flat = values.reshape(-1, values.shape[-1])
    out = solve_banded((1, 1), ab, flat.T).T
    return out.reshape(values.shape)


def helmholtz_inverse_neumann(f: Field1D) -> Field1D:
    """Solve (1 - dxx) w = f on [0, L] with w_x(0) = w_x(L) = 0 via the
    second-order ghost-point system and tridiagonal elimination."""
    if f.is_torus:
        raise ValueError("helmholtz_inverse_neumann requires an interval field")
    return f.with_values(_helmholtz_neumann_values(f.values, f.grid))


# ---------------------------------------------------------------------------
# Right-hand sides


def _dealias_rfft(hat: np.ndarray, n_points: int) -> np.ndarray:
    """Zero one-sided bins above the two-thirds cutoff (in place)."""
    hat[..., n_points // 3 + 1 :] = 0.0
    return hat


def _rhs_a_values(
    u: np.ndarray,
    damping_values: np.ndarray,
    n_points: int,
    *,
    dealias_products: bool = True,
    linearized: bool = False,
) -> np.ndarray:
    wavenumbers = 1j * np.arange(n_points // 2 + 1)
    transport_hat = np.fft.rfft(u, axis=-1)
    if not linearized:
        quad_hat = 0.5 * np.fft.rfft(u * u, axis=-1)
        if dealias_products:
            _dealias_rfft(quad_hat, n_points)
        transport_hat = transport_hat + quad_hat
    bracket_hat = np.fft.rfft(damping_values * u, axis=-1) + wavenumbers * transport_hat
    bracket_hat[..., -1] = 0.0
    n = np.arange(n_points // 2 + 1, dtype=float)
    return -np.fft.irfft(bracket_hat / (1.0 + n * n), n=n_points, axis=-1)


def _rhs_b_values(
    u: np.ndarray,
    damping_values: np.ndarray,
    n_points: int,
    *,
    dealias_products: bool = True,
    linearized: bool = False,
) -> np.ndarray:
    wavenumbers = 1j * np.arange(n_points // 2 + 1)
    transport_hat = np.fft.rfft(u, axis=-1)
    if not linearized:
        quad_hat = 0.5 * np.fft.rfft(u * u, axis=-1)
        if dealias_products:
            _dealias_rfft(quad_hat, n_points)
        transport_hat = transport_hat + quad_hat
    ux = _spectral_derivative_values(u, n_points)
    flux_hat = np.fft.rfft(damping_values * ux, axis=-1)
    if dealias_products:
        _dealias_rfft(flux_hat, n_points)
    bracket_hat = wavenumbers * (transport_hat - flux_hat)
    bracket_hat[..., -1] = 0.0
    n = np.arange(n_points // 2 + 1, dtype=float)
    return -np.fft.irfft(bracket_hat / (1.0 + n * n), n=n_points, axis=-1)


def _sbp_derivative_values(values: np.ndarray, spacing: float) -> np.ndarray:
    """Second-order first derivative that is exactly skew-adjoint (up to its
    boundary rows) under trapezoid weights: centered interior, one-sided
    first-order rows at the ends."""
    out = np.empty_like(values)
    out[..., 1:-1] = (values[..., 2:] - values[..., :-2]) / (2.0 * spacing)
    out[..., 0] = (values[..., 1] - values[..., 0]) / spacing
    out[..., -1] = (values[..., -1] - values[..., -2]) / spacing
    return out


def _rhs_c_values(
    u: np.ndarray,
    coeffs: FeedbackCoefficients,
    grid: IntervalGrid,
    *,
    linearized: bool = False,
) -> np.ndarray:
    x = grid.nodes
    length = grid.length
    u0 = u[..., 0]
    uL = u[..., -1]
    if linearized:
        a_val = coeffs.alpha * u0
        b_val = coeffs.beta * uL
    else:
        a_val = coeffs.alpha * u0 + u0 * u0 / 3.0
        b_val = coeffs.beta * uL + uL * uL / 3.0
    lift = a_val[..., None] * x + ((b_val - a_val) / (2.0 * length))[..., None] * x * x
    lift_xx = ((b_val - a_val) / length)[..., None]
    du = _sbp_derivative_values(u, grid.spacing)
    if linearized:
        advection = du
    else:
        # Split form of u_x + u u_x: the quadratic part is (u^2)_x/3 + u u_x/3,
        # algebraically identical for smooth fields; discretely it makes the
        # energy rate close exactly against the boundary feedback terms.
        advection = du + (_sbp_derivative_values(u * u, grid.spacing) + u * du) / 3.0
    return lift + _helmholtz_neumann_values(-advection - lift + lift_xx, grid)


def rhs_variant_A(
    u: Field1D,
    damping: DampingProfile,
    *,
    dealias_products: bool = True,
    linearized: bool = False,
) -> Field1D:
    """Zeroth-order damped evolution on the torus:
    -(1-dxx)^{-1}[a u + (u + u^2/2)_x] with the quadratic term dealiased."""
    if not u.is_torus:
        raise ValueError("rhs_variant_A requires a torus field")
    if damping.grid != u.grid:
        raise ValueError("damping profile and field live on different grids")
    return u.with_values(
        _rhs_a_values(
            u.values, damping.values, u.grid.n_points,
            dealias_products=dealias_products, linearized=linearized,
        )
    )


def rhs_variant_B(
    u: Field1D,
    damping: DampingProfile,
    *,
    dealias_products: bool = True,
    linearized: bool = False,
) -> Field1D:
    """Gradient-damped evolution on the torus:
    -(1-dxx)^{-1}[(u + u^2/2)_x - (a u_x)_x].  The bracket is an exact
    x-derivative, so the result has zero mean to roundoff."""
    if not u.is_torus:
        raise ValueError("rhs_variant_B requires a torus field")
    if damping.grid != u.grid:
        raise ValueError("damping profile and field live on different grids")
    return u.with_values(
        _rhs_b_values(
            u.values, damping.values, u.grid.n_points,
            dealias_products=dealias_products, linearized=linearized,
        )
    )


def rhs_variant_C(
    u: Field1D,
    coeffs: FeedbackCoefficients,
    *,
    linearized: bool = False,
) -> Field1D:
    """Boundary-feedback evolution on [0, L]: with lift g built from the
    boundary traces of u, returns g + (1-dxx)_N^{-1}(-(u_x + u u_x) - g + g_xx),
    so the result carries the prescribed boundary slopes."""
    if u.is_torus:
        raise ValueError("rhs_variant_C requires an interval field")
    return u.with_values(_rhs_c_values(u.values, coeffs, u.grid, linearized=linearized))


# ---------------------------------------------------------------------------
# Evolution bundle


@dataclass(frozen=True)
class Problem:
    """Everything the integrators need to evaluate u_t = F(u): the variant
    tag, the grid, and the variant's coefficients.  `linearized` drops the
    quadratic terms (a hook for dispersion and order studies); `dealias_products`
    toggles the two-thirds rule on torus products."""

    variant: str
    grid: TorusGrid | IntervalGrid
    damping: DampingProfile | None = None
    feedback: FeedbackCoefficients | None = None
    dealias_products: bool = True
    linearized: bool = False

    def __post_init__(self) -> None:
        if self.variant not in ("A", "B", "C"):
            raise ValueError(f"variant must be 'A', 'B', or 'C', got {self.variant!r}")
        if self.variant in ("A", "B"):
            if not isinstance(self.grid, TorusGrid):
                raise ValueError(f"variant {self.variant} requires a torus grid")
            if self.damping is None:
                raise ValueError(f"variant {self.variant} requires a damping profile")
            if self.damping.grid != self.grid:
                raise ValueError("damping profile grid does not match the problem grid")
        else:
            if not isinstance(self.grid, IntervalGrid):
                raise ValueError("variant C requires an interval grid")
            if self.feedback is None:
                raise ValueError("variant C requires feedback coefficients")

    def rhs_values(self, u: np.ndarray) -> np.ndarray:
        """F(u) on raw nodal values; broadcasts over leading axes."""
        if self.variant == "A":
            return _rhs_a_values(
                u, self.damping.values, self.grid.n_points,
                dealias_products=self.dealias_products, linearized=self.linearized,
            )
        if self.variant == "B":
            return _rhs_b_values(
                u, self.damping.values, self.grid.n_points,
                dealias_products=self.dealias_products, linearized=self.linearized,
            )
        return _rhs_c_values(u, self.feedback, self.grid, linearized=self.linearized)

    def rhs(self, u: Field1D) -> Field1D:
        return u.with_values(self.rhs_values(u.values))
