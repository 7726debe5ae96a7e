"""Sine-spectral discretization of the square D = (0, pi)^2 with zero Dirichlet data.

Nodal fields live on the n x n interior nodes x_j = j*h, h = pi/(n+1); index
``[j, k]`` is the node (x_j, y_k). Spectral coefficients refer to the
orthonormal basis phi_mn = (2/pi) sin(m x) sin(n y) with -Laplacian eigenvalues
m^2 + n^2. With the uniform quadrature weight h^2 the basis is exactly
orthonormal on the grid, so the forward transform is a scaled orthonormal
DST-I and Parseval holds with no extra factors.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from . import _kernels

MIN_N = 4


@dataclass(frozen=True)
class Grid:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < MIN_N:
            raise ValueError(f"grid needs n >= {MIN_N} interior nodes, got {self.n}")

    @property
    def h(self):
        return np.pi / (self.n + 1)

    @cached_property
    def nodes(self):
        """1-D interior node coordinates, shared by both axes."""
        return self.h * np.arange(1, self.n + 1)

    @cached_property
    def wavenumbers(self):
        return np.arange(1, self.n + 1, dtype=float)

    @cached_property
    def eigenvalues(self):
        m = self.wavenumbers
        return m[:, None] ** 2 + m[None, :] ** 2

    @property
    def area(self):
        """Quadrature measure of the whole interior, h^2 * n^2."""
        return (self.h * self.n) ** 2

    def mesh(self):
        return np.meshgrid(self.nodes, self.nodes, indexing="ij")


def make_grid(n):
    return Grid(int(n) if isinstance(n, (int, np.integer)) else n)


def _frozen(arr, shape):
    arr = np.array(arr, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("field contains non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        object.__setattr__(self, "values", _frozen(self.values, (n, n)))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __add__(self, other):
        _same_grid(self, other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other):
        _same_grid(self, other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, c):
        return ScalarField(self.grid, self.values * float(c))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        object.__setattr__(self, "coeffs", _frozen(self.coeffs, (n, n)))

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def __add__(self, other):
        _same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return SpectralField(self.grid, self.coeffs * float(c))

    __rmul__ = __mul__


def _same_grid(a, b):
    if a.grid.n != b.grid.n:
        raise ValueError(f"grid mismatch: n={a.grid.n} vs n={b.grid.n}")


# --- raw array transforms (used directly in hot loops) ---------------------

def forward_array(values, h):
    return h * sfft.dstn(values, type=1, norm="ortho")


def inverse_array(coeffs, h):
    return sfft.idstn(coeffs, type=1, norm="ortho") / h


def _sin_synth(c, axis):
    # sum_m c_m sin(m x_j); scipy's unnormalized DST-I carries a factor 2
    return 0.5 * sfft.dst(c, type=1, axis=axis)


def _cos_synth(c, axis):
    # sum_{m=1..n} c_m cos(m x_j) for interior j: DCT-I on n+2 points with
    # zero end modes, keep the interior outputs
    pad = [(0, 0)] * c.ndim
    pad[axis] = (1, 1)
    full = sfft.dct(np.pad(c, pad), type=1, axis=axis)
    return 0.5 * np.take(full, np.arange(1, c.shape[axis] + 1), axis=axis)


def derivatives_array(coeffs, grid):
    """Nodal (d/dx, d/dy) of the sine series with coefficients ``coeffs``."""
    m = grid.wavenumbers
    scale = 2.0 / np.pi
    dx = scale * _sin_synth(_cos_synth(coeffs * m[:, None], axis=0), axis=1)
    dy = scale * _cos_synth(_sin_synth(coeffs * m[None, :], axis=0), axis=1)
    return dx, dy


# --- public operations ---------------------------------------------------

def forward(field):
    return SpectralField(field.grid, forward_array(field.values, field.grid.h))


def inverse(spec):
    return ScalarField(spec.grid, inverse_array(spec.coeffs, spec.grid.h))


def transform(field, direction="forward"):
    """Nodal <-> spectral. ``direction`` is "forward" or "inverse"."""
    if direction == "forward":
        if not isinstance(field, ScalarField):
            raise TypeError("forward transform takes a ScalarField")
        return forward(field)
    if direction == "inverse":
        if not isinstance(field, SpectralField):
            raise TypeError("inverse transform takes a SpectralField")
        return inverse(field)
    raise ValueError(f"unknown direction {direction!r}")


def green(w):
    """Green operator of -Laplacian: divide each coefficient by m^2 + n^2."""
    return SpectralField(w.grid, w.coeffs / w.grid.eigenvalues)


def neg_laplacian(w):
    return SpectralField(w.grid, w.coeffs * w.grid.eigenvalues)


def velocity(psi):
    """Velocity (d psi/dy, -d psi/dx) at the nodes."""
    dx, dy = derivatives_array(psi.coeffs, psi.grid)
    return ScalarField(psi.grid, dy), ScalarField(psi.grid, -dx)


def gradient(w):
    dx, dy = derivatives_array(w.coeffs, w.grid)
    return ScalarField(w.grid, dx), ScalarField(w.grid, dy)


def spectral_divergence(psi):
    """Coefficients of div(velocity(psi)) in the cos(mx)cos(ny) basis.

    u = dpsi/dy has sin-cos coefficients n*a, v = -dpsi/dx has cos-sin
    coefficients -m*a; the divergence coefficient is m*(n*a) + n*(-m*a).
    """
    m = psi.grid.wavenumbers[:, None]
    k = psi.grid.wavenumbers[None, :]
    u_c = k * psi.coeffs
    v_c = -m * psi.coeffs
    return m * u_c + k * v_c


def energy(w):
    """Kinetic energy 1/2 <w, G w> = 1/2 sum a_mn^2 / (m^2 + n^2)."""
    return 0.5 * float(np.sum(w.coeffs**2 / w.grid.eigenvalues))


def energy_norm(w):
    return float(np.sqrt(2.0 * energy(w)))


def dirichlet_integral(w):
    """Integral of |grad f|^2 = sum (m^2 + n^2) a_mn^2."""
    return float(np.sum(w.grid.eigenvalues * w.coeffs**2))


def lp_norm(f, s):
    """Quadrature L^s norm (sum |f|^s h^2)^(1/s)."""
    if not s >= 1:
        raise ValueError(f"L^s norm needs s >= 1, got {s}")
    total = _kernels.abs_power_sum(f.values, float(s)) * f.grid.h**2
    return float(total ** (1.0 / s))


def integral_abs_power(f, s):
    """sum |f|^s h^2, without the outer root."""
    return _kernels.abs_power_sum(f.values, float(s)) * f.grid.h**2


def inner(f, g):
    """Quadrature inner product of two nodal fields."""
    _same_grid(f, g)
    return float(np.sum(f.values * g.values)) * f.grid.h**2


def dealias_cutoff(n):
    return (2 * n) // 3


def dealias_mask(grid):
    keep = grid.wavenumbers <= dealias_cutoff(grid.n)
    return keep[:, None] & keep[None, :]


def dealias(w):
    """2/3-rule truncation: zero every mode with an index above floor(2n/3)."""
    return SpectralField(w.grid, np.where(dealias_mask(w.grid), w.coeffs, 0.0))


def basis_mode(grid, m, k, amplitude=1.0):
    """Nodal samples of amplitude * phi_mk."""
    x = grid.nodes
    vals = amplitude * (2.0 / np.pi) * np.outer(np.sin(m * x), np.sin(k * x))
    return ScalarField(grid, vals)


def evaluate(w, x, y):
    """Evaluate the sine series at an arbitrary point of the closed square."""
    m = w.grid.wavenumbers
    sx = np.sin(m * x)
    sy = np.sin(m * y)
    return float((2.0 / np.pi) * sx @ w.coeffs @ sy)


def random_bandlimited(grid, rng, kmax=None, decay=1.0):
    """Random spectral field with modes up to ``kmax`` (default: dealiased band)."""
    kmax = dealias_cutoff(grid.n) if kmax is None else kmax
    m = grid.wavenumbers
    band = (m[:, None] <= kmax) & (m[None, :] <= kmax)
    amp = grid.eigenvalues ** (-0.5 * decay)
    coeffs = np.where(band, rng.standard_normal((grid.n, grid.n)) * amp, 0.0)
    return SpectralField(grid, coeffs)
