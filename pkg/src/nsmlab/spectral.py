"""Periodic-box spectral representation and differential operators.

Fields live on the torus [0, L)^d with d in {2, 3}.  Every field carries
three vector components (in d = 2 the third axis is absent, so the third
wavenumber component is identically zero).  Coefficients use the
mean-preserving convention: the forward transform divides by N^d, so the
k = 0 coefficient is the spatial average, and L2 inner products pick up a
factor of the box volume L^d.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

TWO_PI = 2.0 * np.pi


class GridError(ValueError):
    pass


class MeanModeError(ValueError):
    """Raised when a quantity needs a zero-mean field and got one with a mean."""


@dataclass(frozen=True, eq=False)
class Grid:
    d: int
    N: int
    L: float = TWO_PI

    def __post_init__(self):
        if self.d not in (2, 3):
            raise GridError(f"dimension must be 2 or 3, got {self.d}")
        if self.N < 8 or self.N & (self.N - 1):
            raise GridError(f"N must be a power of two >= 8 (unsupported transform size {self.N})")
        if not self.L > 0:
            raise GridError("period L must be positive")

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    @property
    def axes(self) -> tuple:
        return tuple(range(1, self.d + 1))

    @property
    def vol(self) -> float:
        return float(self.L) ** self.d

    @property
    def k0(self) -> float:
        """Lattice spacing 2*pi/L of the wavenumbers."""
        return TWO_PI / self.L

    @cached_property
    def freqs(self) -> np.ndarray:
        """Integer frequencies per axis in FFT order: 0, 1, ..., N/2-1, -N/2, ..., -1."""
        return np.fft.fftfreq(self.N, d=1.0 / self.N).astype(int)

    @cached_property
    def n(self) -> np.ndarray:
        """Integer wavenumber lattice, shape (3, *shape); third row zero when d = 2."""
        mesh = np.meshgrid(*([self.freqs] * self.d), indexing="ij")
        out = np.zeros((3,) + self.shape, dtype=int)
        for i in range(self.d):
            out[i] = mesh[i]
        return out

    @cached_property
    def k(self) -> np.ndarray:
        return self.k0 * self.n.astype(float)

    @cached_property
    def k2(self) -> np.ndarray:
        return np.sum(self.k**2, axis=0)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def k2_safe(self) -> np.ndarray:
        out = self.k2.copy()
        out[(0,) * self.d] = 1.0
        return out

    @property
    def cutoff(self) -> int:
        """Largest retained integer frequency per axis under the 2/3 rule."""
        return self.N // 3

    @property
    def kmax(self) -> float:
        return self.k0 * self.cutoff

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        return np.all(np.abs(self.n) <= self.cutoff, axis=0)

    def ball(self, radius: float) -> np.ndarray:
        return self.kmag <= radius * (1.0 + 1e-12) + 1e-300

    @cached_property
    def x(self) -> np.ndarray:
        """Physical grid coordinates, shape (d, *shape)."""
        pts = np.arange(self.N) * (self.L / self.N)
        return np.array(np.meshgrid(*([pts] * self.d), indexing="ij"))

    def __repr__(self):
        return f"Grid(d={self.d}, N={self.N}, L={self.L:.6g})"

    def same_as(self, other: "Grid") -> bool:
        return self is other or (self.d == other.d and self.N == other.N and self.L == other.L)


def make_grid(d: int, N: int, L: float = TWO_PI) -> Grid:
    return Grid(int(d), int(N), float(L))


@dataclass(frozen=True)
class NormSpec:
    s: float
    homogeneous: bool = True
    besov_q: Optional[float] = None

    def __post_init__(self):
        if not np.isfinite(self.s):
            raise ValueError("Sobolev exponent must be finite")
        if self.besov_q is not None and not (1 <= self.besov_q <= np.inf):
            raise ValueError("Besov summability index must lie in [1, inf]")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of an m-component field (m = 3 for vectors, 1 for scalars)."""

    grid: Grid
    data: np.ndarray
    divfree: bool = False
    reality: bool = True

    def __post_init__(self):
        if self.data.shape[1:] != self.grid.shape:
            raise ValueError(f"coefficient shape {self.data.shape[1:]} does not match grid {self.grid.shape}")

    @property
    def components(self):
        return tuple(self.data)

    @property
    def ncomp(self) -> int:
        return self.data.shape[0]

    @classmethod
    def zeros(cls, grid: Grid, ncomp: int = 3) -> "SpectralField":
        return cls(grid, np.zeros((ncomp,) + grid.shape, dtype=complex), divfree=True)

    def with_data(self, data, divfree=None) -> "SpectralField":
        return SpectralField(self.grid, data, self.divfree if divfree is None else divfree, self.reality)

    def copy(self) -> "SpectralField":
        return self.with_data(self.data.copy())

    def mean(self) -> np.ndarray:
        return self.data[(slice(None),) + (0,) * self.grid.d].copy()

    def _combine(self, other, op):
        if isinstance(other, SpectralField):
            _check_grid(self, other)
            return SpectralField(self.grid, op(self.data, other.data), self.divfree and other.divfree,
                                 self.reality and other.reality)
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __neg__(self):
        return self.with_data(-self.data)

    def __mul__(self, a):
        if np.isscalar(a):
            return SpectralField(self.grid, self.data * a, self.divfree, self.reality and np.isreal(a))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, a):
        return self * (1.0 / a)


def _check_grid(*fields: SpectralField):
    g = fields[0].grid
    for f in fields[1:]:
        if not g.same_as(f.grid):
            raise GridError("fields live on different grids")


# ----------------------------------------------------------------------------
# transforms

def _fwd(grid: Grid, values: np.ndarray) -> np.ndarray:
    return np.fft.fftn(values, axes=grid.axes, norm="forward")


def _inv(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(coeffs, axes=grid.axes, norm="forward").real


def to_spectral(grid: Grid, values, divfree: bool = False) -> SpectralField:
    values = np.asarray(values)
    if values.shape == grid.shape:
        values = values[None]
    if values.shape[1:] != grid.shape:
        raise ValueError(f"physical samples of shape {values.shape} do not match grid {grid.shape}")
    return SpectralField(grid, _fwd(grid, values.astype(complex)), divfree=divfree,
                         reality=bool(np.isrealobj(values) or np.allclose(np.imag(values), 0)))


def to_physical(u: SpectralField) -> np.ndarray:
    if u.reality:
        return _inv(u.grid, u.data)
    return np.fft.ifftn(u.data, axes=u.grid.axes, norm="forward")


def transform(obj, direction: str, grid: Optional[Grid] = None):
    """Forward ('forward': samples -> SpectralField) or inverse ('inverse') transform."""
    if direction == "forward":
        if grid is None:
            raise ValueError("forward transform needs the grid")
        return to_spectral(grid, obj)
    if direction == "inverse":
        return to_physical(obj)
    raise ValueError(f"unknown direction {direction!r}")


def reflect_index(grid: Grid, data: np.ndarray) -> np.ndarray:
    """Return the array a with a[k] = data[-k] per mode."""
    out = data
    for ax in grid.axes:
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def hermitian_defect(u: SpectralField) -> float:
    mirrored = np.conj(reflect_index(u.grid, u.data))
    scale = max(np.max(np.abs(u.data)), 1e-300)
    return float(np.max(np.abs(u.data - mirrored)) / scale)


def symmetrize(u: SpectralField) -> SpectralField:
    data = 0.5 * (u.data + np.conj(reflect_index(u.grid, u.data)))
    return SpectralField(u.grid, data, u.divfree, True)


# ----------------------------------------------------------------------------
# linear operators

def fractional_symbol(grid: Grid, alpha: float) -> np.ndarray:
    """Multiplier |k|^(2 alpha); (-Delta)^0 is the identity, including at k = 0."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0:
        return np.ones(grid.shape)
    return grid.kmag ** (2.0 * alpha)


def fractional_laplacian(u: SpectralField, alpha: float) -> SpectralField:
    return u.with_data(u.data * fractional_symbol(u.grid, alpha))


def leray_data(grid: Grid, data: np.ndarray) -> np.ndarray:
    kdotu = np.sum(grid.k * data, axis=0)
    return data - grid.k * (kdotu / grid.k2_safe)


def leray_project(u: SpectralField) -> SpectralField:
    return SpectralField(u.grid, leray_data(u.grid, u.data), True, u.reality)


def curl_data(grid: Grid, a: np.ndarray) -> np.ndarray:
    k = grid.k
    return 1j * np.array([k[1] * a[2] - k[2] * a[1],
                          k[2] * a[0] - k[0] * a[2],
                          k[0] * a[1] - k[1] * a[0]])


def curl(u: SpectralField) -> SpectralField:
    return SpectralField(u.grid, curl_data(u.grid, u.data), True, u.reality)


def gradient(phi: SpectralField) -> SpectralField:
    return SpectralField(phi.grid, 1j * phi.grid.k * phi.data[0], False, phi.reality)


def divergence(u: SpectralField) -> SpectralField:
    return SpectralField(u.grid, 1j * np.sum(u.grid.k * u.data, axis=0)[None], False, u.reality)


def divergence_defect(u: SpectralField) -> float:
    """max_k |k . u(k)| relative to the coefficient l2 norm times the largest |k|."""
    g = u.grid
    scale = np.sqrt(np.sum(np.abs(u.data) ** 2)) * max(float(np.max(g.kmag)), 1.0)
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(np.sum(g.k * u.data, axis=0))) / scale)


def truncate(u: SpectralField, n: float) -> SpectralField:
    if n < 0:
        raise ValueError("truncation radius must be nonnegative")
    return u.with_data(np.where(u.grid.ball(n), u.data, 0))


def directional_derivative(u: SpectralField, a) -> SpectralField:
    """(a . grad) u for a constant 3-vector a, as the exact multiplier i (a . k)."""
    a = np.asarray(a, dtype=float)
    mult = 1j * np.tensordot(a, u.grid.k, axes=1)
    return u.with_data(u.data * mult)


# ----------------------------------------------------------------------------
# nonlinear products

def physical_values(u: SpectralField, dealias: bool = True) -> np.ndarray:
    data = u.data * u.grid.dealias_mask if dealias else u.data
    return _inv(u.grid, data)


def physical_gradient(u: SpectralField, dealias: bool = True) -> np.ndarray:
    """Array g[i, m] = d_m u_i in physical space."""
    g = u.grid
    data = u.data * g.dealias_mask if dealias else u.data
    out = np.empty((u.ncomp, 3) + g.shape)
    for m in range(3):
        if m < g.d:
            out[:, m] = _inv(g, 1j * g.k[m] * data)
        else:
            out[:, m] = 0.0
    return out


def project_product(grid: Grid, values: np.ndarray, radius: Optional[float] = None) -> np.ndarray:
    """Forward transform a physical product and cut it back to the dealiasing ball."""
    radius = grid.kmax if radius is None else min(radius, grid.kmax)
    mask = grid.dealias_mask & grid.ball(radius)
    return _fwd(grid, values) * mask


def cross_values(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def dealiased_product(a: SpectralField, b: SpectralField, kind: str,
                      radius: Optional[float] = None) -> SpectralField:
    """Quadratic products computed pointwise under the 2/3 rule.

    kind: 'cross' -> a x b, 'dot' -> a . b (scalar field), 'advection' -> (a . grad) b.
    """
    _check_grid(a, b)
    g = a.grid
    av = physical_values(a)
    if kind == "cross":
        out = cross_values(av, physical_values(b))
    elif kind == "dot":
        out = np.sum(av * physical_values(b), axis=0)[None]
    elif kind == "advection":
        gb = physical_gradient(b)
        out = np.einsum("m...,im...->i...", av, gb)
    else:
        raise ValueError(f"unknown product kind {kind!r}")
    return SpectralField(g, project_product(g, out, radius), False, True)


# ----------------------------------------------------------------------------
# norms

def inner(a: SpectralField, b: SpectralField) -> float:
    """Real L2 inner product over the box via Parseval."""
    _check_grid(a, b)
    return float(a.grid.vol * np.real(np.sum(a.data * np.conj(b.data))))


def l2_norm(u: SpectralField) -> float:
    return float(np.sqrt(u.grid.vol * np.sum(np.abs(u.data) ** 2)))


def physical_l2_norm(values: np.ndarray, grid: Grid) -> float:
    return float(np.sqrt(np.sum(np.abs(values) ** 2) * (grid.L / grid.N) ** grid.d))


def linf_norm(u: SpectralField) -> float:
    vals = to_physical(u)
    return float(np.max(np.sqrt(np.sum(np.abs(vals) ** 2, axis=0))))


def mean_is_zero(u: SpectralField, rtol: float = 1e-12) -> bool:
    m = np.max(np.abs(u.mean()))
    scale = np.max(np.abs(u.data)) if u.data.size else 0.0
    return bool(m <= rtol * scale) or m == 0.0


def sobolev_weights(grid: Grid, spec: NormSpec) -> np.ndarray:
    if not spec.homogeneous:
        return (1.0 + grid.k2) ** spec.s
    if spec.s == 0:
        return np.ones(grid.shape)
    w = grid.k2_safe ** spec.s
    w[(0,) * grid.d] = 0.0
    return w


def sobolev_norm(u: SpectralField, spec) -> float:
    """H^s (inhomogeneous) or homogeneous H^s norm; a NormSpec with besov_q gives a Besov norm."""
    if not isinstance(spec, NormSpec):
        spec = NormSpec(float(spec))
    if spec.besov_q is not None:
        from .littlewood_paley import besov_norm
        return besov_norm(u, spec.s, spec.besov_q)
    if spec.homogeneous and spec.s < 0 and not mean_is_zero(u):
        raise MeanModeError("negative-order homogeneous norm needs a zero-mean field")
    w = sobolev_weights(u.grid, spec)
    return float(np.sqrt(u.grid.vol * np.sum(w * np.sum(np.abs(u.data) ** 2, axis=0))))


def hs_norm(u: SpectralField, s: float, homogeneous: bool = False) -> float:
    return sobolev_norm(u, NormSpec(s, homogeneous))
