"""Independent reference implementation used only by tests: second-order
finite differences everywhere, dense linear solves, explicit midpoint time
stepping.  Deliberately simple and allocation-heavy; it shares no code with
the production operators or integrators (plain numpy arrays in, arrays out).

The one departure from "second-order everywhere" is an optional eighth-order
periodic Helmholtz matrix: the production spectral solve is exact per mode,
so validating it to 1e-6 needs a reference whose own truncation error sits
well below that, which a second-order stencil cannot reach at N = 256.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["DenseOperator", "oracle_rhs", "oracle_integrate", "oracle_energy"]

_TWO_PI = 2.0 * math.pi

# centered second-derivative weights, offsets -4..4, eighth order
_D2_ORDER8 = np.array(
    [-1.0 / 560, 8.0 / 315, -1.0 / 5, 8.0 / 5, -205.0 / 72, 8.0 / 5, -1.0 / 5, 8.0 / 315, -1.0 / 560]
)


@dataclass(frozen=True)
class DenseOperator:
    """Dense symmetric matrix for (I - D2) with periodic or Neumann closure.

    The Neumann closure uses ghost points; its rows are symmetrized by the
    trapezoid weights (first and last equation scaled by 1/2), and the same
    scaling must be applied to right-hand sides, which solve() does.
    """

    matrix: np.ndarray
    closure: str
    rhs_weights: np.ndarray

    @classmethod
    def periodic(cls, n: int, order: int = 2) -> "DenseOperator":
        h = _TWO_PI / n
        row = np.zeros(n)
        if order == 2:
            weights = np.array([1.0, -2.0, 1.0])
            offsets = range(-1, 2)
        elif order == 8:
            weights = _D2_ORDER8
            offsets = range(-4, 5)
        else:
            raise ValueError(f"unsupported order {order}")
        for off, w in zip(offsets, weights):
            row[off % n] -= w / h**2
        row[0] += 1.0
        matrix = np.empty((n, n))
        for i in range(n):
            matrix[i] = np.roll(row, i)
        return cls(matrix, "periodic", np.ones(n))

    @classmethod
    def neumann(cls, m: int, length: float) -> "DenseOperator":
        h = length / m
        matrix = np.zeros((m + 1, m + 1))
        inv_h2 = 1.0 / h**2
        for i in range(1, m):
            matrix[i, i - 1] = -inv_h2
            matrix[i, i] = 1.0 + 2.0 * inv_h2
            matrix[i, i + 1] = -inv_h2
        # ghost rows scaled by 1/2 so the matrix is symmetric
        matrix[0, 0] = 0.5 + inv_h2
        matrix[0, 1] = -inv_h2
        matrix[m, m] = 0.5 + inv_h2
        matrix[m, m - 1] = -inv_h2
        weights = np.ones(m + 1)
        weights[0] = weights[m] = 0.5
        return cls(matrix, "neumann", weights)

    def solve(self, f: np.ndarray) -> np.ndarray:
        return np.linalg.solve(self.matrix, self.rhs_weights * f)


def _periodic_gradient(u: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(u, -1) - np.roll(u, 1)) / (2.0 * h)


def _interval_gradient(u: np.ndarray, h: float) -> np.ndarray:
    du = np.empty_like(u)
    du[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    du[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
    du[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)
    return du


def oracle_rhs(
    u: np.ndarray,
    variant: str,
    *,
    damping: np.ndarray | None = None,
    alpha: float | None = None,
    beta: float | None = None,
    length: float | None = None,
    linearized: bool = False,
) -> np.ndarray:
    """Second-order evaluation of the evolution right-hand side.

    Torus variants take `damping` sampled at the n nodes of a 2*pi-periodic
    grid; the interval variant takes `alpha`, `beta`, `length` with u sampled
    at the m+1 nodes of [0, length].  No dealiasing anywhere.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise ValueError("the oracle works on single 1-D states")
    if variant in ("A", "B"):
        if damping is None or damping.shape != u.shape:
            raise ValueError("torus variants need a damping array matching u")
        n = u.shape[0]
        h = _TWO_PI / n
        du = _periodic_gradient(u, h)
        advection = du if linearized else du + u * du
        if variant == "A":
            f = damping * u + advection
        else:
            f = advection - _periodic_gradient(damping * du, h)
        return -DenseOperator.periodic(n).solve(f)
    if variant != "C":
        raise ValueError(f"unknown variant {variant!r}")
    if alpha is None or beta is None or length is None:
        raise ValueError("variant C needs alpha, beta, length")
    m = u.shape[0] - 1
    h = length / m
    x = length * np.arange(m + 1) / m
    u0, uL = u[0], u[-1]
    a_val = alpha * u0 + (0.0 if linearized else u0**2 / 3.0)
    b_val = beta * uL + (0.0 if linearized else uL**2 / 3.0)
    lift = a_val * x + (b_val - a_val) / (2.0 * length) * x**2
    lift_xx = (b_val - a_val) / length
    du = _interval_gradient(u, h)
    advection = du if linearized else du + u * du
    op = DenseOperator.neumann(m, length)
    return lift + op.solve(-advection - lift + lift_xx)


def oracle_integrate(
    u0: np.ndarray,
    horizon: float,
    dt: float,
    variant: str,
    **params,
) -> np.ndarray:
    """Explicit midpoint stepping over oracle_rhs; returns the final state."""
    if not dt > 0.0 or horizon < 0.0:
        raise ValueError("need dt > 0 and horizon >= 0")
    u = np.array(u0, dtype=float, copy=True)
    n_steps = int(round(horizon / dt))
    if abs(n_steps * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ValueError("horizon must be an integer number of steps")
    # overflow in a diverging run is the signal, not a defect; keep it quiet
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(n_steps):
            half = u + 0.5 * dt * oracle_rhs(u, variant, **params)
            u = u + dt * oracle_rhs(half, variant, **params)
            if not np.all(np.isfinite(u)):
                raise FloatingPointError(f"oracle integration blew up at t={(step + 1) * dt:g}")
    return u


def oracle_energy(u: np.ndarray, *, length: float | None = None) -> float:
    """(1/2) integral (u^2 + u_x^2) with second-order gradients and trapezoid
    weights; periodic on 2*pi when length is None."""
    u = np.asarray(u, dtype=float)
    if length is None:
        h = _TWO_PI / u.shape[0]
        du = _periodic_gradient(u, h)
        return float(0.5 * h * np.sum(u * u + du * du))
    m = u.shape[0] - 1
    h = length / m
    du = _interval_gradient(u, h)
    w = np.full(m + 1, h)
    w[0] = w[-1] = 0.5 * h
    return float(0.5 * np.sum(w * (u * u + du * du)))
