"""Spatial discretization: grids, real/spectral transforms, differentiation,
Sobolev norms, means, dealiasing, and the snapshot file format.

Two domains are supported: a periodic domain of fixed period 2*pi (other
periods are handled by rescaling initial data, see `rescale_to_torus`) and a
finite interval [0, L] whose endpoints are grid nodes.

Spectral convention: a real field f on the torus is represented by complex
coefficients c_n for |n| <= N/2 with

    f(x) = sum_n c_n exp(i n x),      c_n = (2*pi)^{-1} integral f exp(-i n x) dx.

The Nyquist bin of the FFT is split evenly between n = -N/2 and n = +N/2 so
the representation is conjugate-symmetric and round-trips exactly.
"""

from __future__ import annotations

import math
import os
import re
import tempfile
from dataclasses import dataclass, field as dc_field

import numpy as np

TWO_PI = 2.0 * math.pi

__all__ = [
    "TorusGrid",
    "IntervalGrid",
    "Field1D",
    "SobolevIndex",
    "to_spectral",
    "to_grid",
    "derivative",
    "sobolev_norm",
    "h1_norm_interval",
    "mean",
    "dealias",
    "quadrature",
    "rescale_to_torus",
    "write_snapshot",
    "read_snapshot",
]


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on [0, 2*pi) with nodes x_j = 2*pi*j/n_points.

    n_points must be even (the transform pairs modes +-n) and at least 16.
    """

    n_points: int

    def __post_init__(self) -> None:
        if self.n_points < 16 or self.n_points % 2 != 0:
            raise ValueError(f"n_points must be an even integer >= 16, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n_points

    @property
    def nodes(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n_points) / self.n_points

    @property
    def mode_numbers(self) -> np.ndarray:
        """Symmetric mode numbers -N/2 .. N/2 matching to_spectral's layout."""
        half = self.n_points // 2
        return np.arange(-half, half + 1)

    @property
    def dealias_cutoff(self) -> int:
        """Largest retained |n| under the two-thirds rule."""
        return self.n_points // 3

    @property
    def length(self) -> float:
        return TWO_PI


@dataclass(frozen=True)
class IntervalGrid:
    """Uniform grid on [0, L] with M cells and nodes x_j = j*L/M, j = 0..M.

    Both endpoints are nodes; boundary traces u(0), u(L) are read directly.
    """

    length: float
    n_cells: int

    def __post_init__(self) -> None:
        if not (self.length > 0.0 and math.isfinite(self.length)):
            raise ValueError(f"length must be positive and finite, got {self.length}")
        if self.n_cells < 32:
            raise ValueError(f"n_cells must be >= 32, got {self.n_cells}")

    @property
    def spacing(self) -> float:
        return self.length / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @property
    def nodes(self) -> np.ndarray:
        return self.length * np.arange(self.n_cells + 1) / self.n_cells

    @property
    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n_cells + 1, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w


Grid = TorusGrid | IntervalGrid


@dataclass(frozen=True)
class SobolevIndex:
    """Validated exponent s of the scale-of-spaces norm.

    Admissible ranges: s >= 0 on the torus, 1/2 < s < 5/2 on the interval
    (interval norms other than the H1 energy norm are not computed here; the
    range is enforced so configs cannot request an undefined quantity).
    """

    s: float
    domain: str = "torus"

    def __post_init__(self) -> None:
        if self.domain not in ("torus", "interval"):
            raise ValueError(f"domain must be 'torus' or 'interval', got {self.domain!r}")
        if self.domain == "torus" and not self.s >= 0.0:
            raise ValueError(f"torus norms require s >= 0, got s={self.s}")
        if self.domain == "interval" and not 0.5 < self.s < 2.5:
            raise ValueError(f"interval norms require 1/2 < s < 5/2, got s={self.s}")


@dataclass(frozen=True)
class Field1D:
    """A real-valued function sampled at the grid nodes.

    Values are copied on construction and frozen (read-only array); the
    symmetric spectral coefficients of torus fields are cached on first use.
    """

    grid: Grid
    values: np.ndarray
    _spectral_cache: dict = dc_field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float, copy=True)
        expected = self.grid.n_points if isinstance(self.grid, TorusGrid) else self.grid.n_nodes
        if values.shape != (expected,):
            raise ValueError(f"values must have shape ({expected},), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray) -> "Field1D":
        """A new field on the same grid."""
        return Field1D(self.grid, values)

    @property
    def is_torus(self) -> bool:
        return isinstance(self.grid, TorusGrid)


def _rfft_coefficients(values: np.ndarray) -> np.ndarray:
    """One-sided coefficients c_n = rfft(values)/N for n = 0..N/2."""
    return np.fft.rfft(values) / values.shape[-1]


def to_spectral(f: Field1D) -> np.ndarray:
    """Symmetric spectral coefficients c_n, n = -N/2..N/2 (length N+1).

    The entry at index N/2 + n is c_n; conjugate symmetry c_{-n} = conj(c_n)
    holds exactly because the negative side is built by conjugation.  The
    FFT's single Nyquist bin is split evenly between n = +-N/2.
    """
    if not f.is_torus:
        raise ValueError("to_spectral requires a torus field")
    cached = f._spectral_cache.get("c")
    if cached is not None:
        return cached
    n = f.grid.n_points
    half = n // 2
    one_sided = _rfft_coefficients(f.values)
    c = np.zeros(n + 1, dtype=complex)
    c[half] = one_sided[0]
    c[half + 1 : 2 * half] = one_sided[1:half]
    c[-1] = 0.5 * one_sided[half]
    c[:half] = np.conj(c[half + 1 :][::-1])
    c.setflags(write=False)
    f._spectral_cache["c"] = c
    return c


def to_grid(coefficients: np.ndarray, grid: TorusGrid) -> Field1D:
    """Invert to_spectral: rebuild nodal values from symmetric coefficients."""
    if not isinstance(grid, TorusGrid):
        raise ValueError("to_grid requires a torus grid")
    n = grid.n_points
    half = n // 2
    if coefficients.shape != (n + 1,):
        raise ValueError(f"expected {n + 1} coefficients, got {coefficients.shape}")
    one_sided = np.zeros(half + 1, dtype=complex)
    one_sided[0] = coefficients[half]
    one_sided[1:half] = coefficients[half + 1 : 2 * half]
    one_sided[half] = 2.0 * coefficients[-1]
    values = np.fft.irfft(one_sided * n, n=n)
    return Field1D(grid, values)


def _spectral_derivative_values(values: np.ndarray, n_points: int) -> np.ndarray:
    """d/dx by multiplying one-sided bins by i*n; the Nyquist bin is zeroed
    (the unpaired real cosine at n = N/2 has no representable odd derivative).
    Broadcasts over leading axes.
    """
    wavenumbers = 1j * np.arange(n_points // 2 + 1)
    hat = np.fft.rfft(values, axis=-1) * wavenumbers
    hat[..., -1] = 0.0
    return np.fft.irfft(hat, n=n_points, axis=-1)


# Fourth-order one-sided rows for the first two nodes (mirrored at the right
# end); interior stencil is the standard five-point fourth-order formula.
_FD4_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_FD4_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def _fd4_derivative_values(values: np.ndarray, spacing: float) -> np.ndarray:
    out = np.empty_like(values)
    v = values
    out[..., 2:-2] = (v[..., :-4] - 8.0 * v[..., 1:-3] + 8.0 * v[..., 3:-1] - v[..., 4:]) / (12.0 * spacing)
    head = v[..., :5]
    tail = v[..., -5:]
    out[..., 0] = head @ _FD4_EDGE0 / spacing
    out[..., 1] = head @ _FD4_EDGE1 / spacing
    out[..., -2] = -(tail[..., ::-1] @ _FD4_EDGE1) / spacing
    out[..., -1] = -(tail[..., ::-1] @ _FD4_EDGE0) / spacing
    return out


def derivative(f: Field1D) -> Field1D:
    """First spatial derivative.

    Torus fields differentiate spectrally (exact for resolved modes);
    interval fields use fourth-order centered differences with one-sided
    closures at x = 0 and x = L.
    """
    if f.is_torus:
        return f.with_values(_spectral_derivative_values(f.values, f.grid.n_points))
    return f.with_values(_fd4_derivative_values(f.values, f.grid.spacing))


def sobolev_norm(f: Field1D, s: float | SobolevIndex) -> float:
    """The norm (sum over modes |c_n|^2 (1 + n^2)^s)^(1/2) of a torus field."""
    if not f.is_torus:
        raise ValueError("sobolev_norm is defined for torus fields; use h1_norm_interval")
    if isinstance(s, SobolevIndex):
        if s.domain != "torus":
            raise ValueError("SobolevIndex domain must be 'torus'")
        s = s.s
    if not s >= 0.0:
        raise ValueError(f"torus norms require s >= 0, got s={s}")
    c = to_spectral(f)
    n = f.grid.mode_numbers
    return math.sqrt(float(np.sum(np.abs(c) ** 2 * (1.0 + n.astype(float) ** 2) ** s)))


def h1_norm_interval(f: Field1D) -> float:
    """(integral over [0,L] of f^2 + f_x^2)^(1/2) by trapezoid quadrature."""
    if f.is_torus:
        raise ValueError("h1_norm_interval requires an interval field")
    fx = derivative(f).values
    w = f.grid.trapezoid_weights
    return math.sqrt(float(np.sum(w * (f.values**2 + fx**2))))


def mean(f: Field1D) -> float:
    """(2*pi)^{-1} integral of f over the torus; equals the coefficient c_0."""
    if not f.is_torus:
        raise ValueError("mean is defined for torus fields")
    return float(np.mean(f.values))


def dealias(coefficients: np.ndarray) -> np.ndarray:
    """Two-thirds rule: zero every mode with |n| > N/3 in a symmetric
    coefficient array of length N+1."""
    n_points = coefficients.shape[-1] - 1
    if n_points < 2 or n_points % 2 != 0:
        raise ValueError(f"coefficient array must have odd length N+1 with N even, got {coefficients.shape}")
    cutoff = n_points // 3
    modes = np.arange(-(n_points // 2), n_points // 2 + 1)
    out = np.array(coefficients, copy=True)
    out[..., np.abs(modes) > cutoff] = 0.0
    return out


def quadrature(f: Field1D) -> float:
    """Composite trapezoid integral over the domain (spectrally accurate for
    periodic integrands on the torus, where it reduces to h * sum)."""
    if f.is_torus:
        return float(f.grid.spacing * np.sum(f.values))
    return float(np.sum(f.grid.trapezoid_weights * f.values))


def rescale_to_torus(profile, period: float, grid: TorusGrid) -> Field1D:
    """Sample a periodic profile of an arbitrary period onto the fixed 2*pi
    grid via y = period * x / (2*pi).  The period is not a grid parameter;
    data are rescaled instead."""
    y = grid.nodes * (period / TWO_PI)
    return Field1D(grid, np.asarray(profile(y), dtype=float))


_SNAPSHOT_HEADER = re.compile(
    r"^# t=(?P<t>\S+) domain=(?P<domain>torus|interval) n=(?P<n>\d+) L=(?P<length>\S+)$"
)


def _atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a sibling temp file and rename so readers never observe a
    partially written file."""
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_snapshot(f: Field1D, t: float, path: str | os.PathLike) -> None:
    """Snapshot format: one header line

        # t=<time> domain=<torus|interval> n=<points> L=<length>

    followed by x,value CSV rows at 17 significant digits."""
    domain = "torus" if f.is_torus else "interval"
    length = TWO_PI if f.is_torus else f.grid.length
    lines = [f"# t={t:.17g} domain={domain} n={f.values.shape[0]} L={length:.17g}"]
    lines.extend(f"{x:.17g},{v:.17g}" for x, v in zip(f.grid.nodes, f.values))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_snapshot(path: str | os.PathLike) -> tuple[Field1D, float]:
    with open(path) as handle:
        header = handle.readline().rstrip("\n")
        match = _SNAPSHOT_HEADER.match(header)
        if match is None:
            raise ValueError(f"{path}: malformed snapshot header: {header!r}")
        t = float(match["t"])
        n = int(match["n"])
        length = float(match["length"])
        rows = np.loadtxt(handle, delimiter=",", ndmin=2)
    if rows.shape != (n, 2):
        raise ValueError(f"{path}: expected {n} x,value rows, got shape {rows.shape}")
    if match["domain"] == "torus":
        grid: Grid = TorusGrid(n)
    else:
        grid = IntervalGrid(length, n - 1)
    if not np.allclose(rows[:, 0], grid.nodes, rtol=0.0, atol=1e-9 * max(length, 1.0)):
        raise ValueError(f"{path}: x column does not match the declared grid")
    return Field1D(grid, rows[:, 1]), t
