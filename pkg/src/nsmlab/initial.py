"""Initial-data generators: seeded band-limited noise and a few analytic fields."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .spectral import Grid, SpectralField, curl, hs_norm, leray_project, to_spectral, truncate


def random_field(grid: Grid, seed: int, amplitude: float = 1.0, s: float = 0.0,
                 k_lo: float = 1.0, k_hi: Optional[float] = None, divfree: bool = True,
                 spectrum_slope: float = 0.0, rng: Optional[np.random.Generator] = None) -> SpectralField:
    """Real random vector field supported in k_lo <= |k| <= k_hi with H^s norm equal to amplitude.

    White noise is drawn in physical space, so Hermitian symmetry holds by construction.
    spectrum_slope tilts coefficient magnitudes by |k|^(-spectrum_slope).
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    k_hi = grid.kmax if k_hi is None else min(k_hi, grid.kmax)
    noise = rng.standard_normal((3,) + grid.shape)
    u = to_spectral(grid, noise)
    band = (grid.kmag >= k_lo * (1 - 1e-12)) & grid.ball(k_hi) & grid.dealias_mask
    data = np.where(band, u.data, 0)
    if spectrum_slope:
        data = data * np.where(grid.k2 > 0, grid.k2_safe ** (-0.5 * spectrum_slope), 0)
    u = SpectralField(grid, data)
    if divfree:
        u = leray_project(u)
    norm = hs_norm(u, s)
    if norm == 0:
        raise ValueError("empty frequency band")
    return u * (amplitude / norm)


def beltrami(grid: Grid, k: int = 1, axis: Optional[int] = None, amplitude: float = 1.0) -> SpectralField:
    """cos(k x_a) e_b + sin(k x_a) e_c with (a, b, c) cyclic; curl B = -k B (scaled to the box)."""
    a = (grid.d - 1) if axis is None else axis
    if a >= grid.d:
        raise ValueError("Beltrami axis must be a resolved direction")
    b, c = (a + 1) % 3, (a + 2) % 3
    xa = grid.x[a] * (2 * np.pi / grid.L)
    vals = np.zeros((3,) + grid.shape)
    vals[b] = np.cos(k * xa)
    vals[c] = np.sin(k * xa)
    return to_spectral(grid, amplitude * vals, divfree=True)


def gaussian_bump(grid: Grid, width: float = 0.6, amplitude: float = 1.0,
                  direction: Sequence[float] = (0.0, 0.0, 1.0), center=None) -> SpectralField:
    """Curl of a periodized Gaussian potential times a fixed direction: localized, solenoidal, mean-zero."""
    center = np.full(grid.d, grid.L / 2) if center is None else np.asarray(center, dtype=float)
    r2 = np.zeros(grid.shape)
    for i in range(grid.d):
        dx = grid.x[i] - center[i]
        dx = (dx + grid.L / 2) % grid.L - grid.L / 2
        r2 = r2 + dx**2
    phi = np.exp(-r2 / (2 * width**2))
    pot = np.array([phi * c for c in direction], dtype=float)
    u = truncate(curl(to_spectral(grid, pot)), grid.kmax)
    u = SpectralField(grid, u.data * grid.dealias_mask, True)
    norm = hs_norm(u, 0.0)
    return u * (amplitude / norm)


def prescribed_velocity(grid: Grid, amplitude: float = 0.5) -> SpectralField:
    """A steady shear-type solenoidal velocity used to drive the Maxwell subsystem."""
    x = grid.x * (2 * np.pi / grid.L)
    vals = np.zeros((3,) + grid.shape)
    vals[0] = np.sin(x[1])
    vals[2] = np.cos(x[0])
    if grid.d == 3:
        vals[1] = np.sin(x[2])
    return to_spectral(grid, amplitude * vals, divfree=True)


def apply_mean(u: SpectralField, mean) -> SpectralField:
    data = u.data.copy()
    data[(slice(None),) + (0,) * u.grid.d] = np.asarray(mean, dtype=float)
    return u.with_data(data)
