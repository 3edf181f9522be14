"""Sharp-annulus Littlewood-Paley blocks, Besov norms and the fractional heat flow."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .spectral import (
    Grid,
    MeanModeError,
    SpectralField,
    fractional_symbol,
    l2_norm,
    linf_norm,
    mean_is_zero,
    sobolev_norm,
    NormSpec,
    _fwd,
    physical_values,
)

GL4_NODES, GL4_WEIGHTS = np.polynomial.legendre.leggauss(4)


def shell_index(grid: Grid) -> np.ndarray:
    """Shell j of every mode (2^(j-1) < |k| <= 2^j); the mean mode gets a sentinel below j_min."""
    k2 = grid.k2
    with np.errstate(divide="ignore"):
        j = np.ceil(0.5 * np.log2(np.where(k2 > 0, k2, 1.0)) - 1e-12).astype(int)
    j[(0,) * grid.d] = np.iinfo(np.int32).min
    return j


@dataclass(frozen=True, eq=False)
class DyadicBlockSet:
    grid: Grid
    j_min: int
    j_max: int
    sharp: bool = True

    @classmethod
    def for_grid(cls, grid: Grid, radius: Optional[float] = None) -> "DyadicBlockSet":
        j = shell_index(grid)
        nz = grid.k2 > 0
        if radius is not None:
            nz &= grid.ball(radius)
        return cls(grid, int(j[nz].min()), int(j[nz].max()))

    @property
    def indices(self) -> range:
        return range(self.j_min, self.j_max + 1)


def dyadic_block(u: SpectralField, j) -> SpectralField:
    """Restriction of u to the shell 2^(j-1) < |k| <= 2^j; j = None selects the mean mode."""
    g = u.grid
    if j is None or j == -np.inf:
        mask = g.k2 == 0
    else:
        mask = shell_index(g) == int(j)
    return u.with_data(np.where(mask, u.data, 0))


def block_l2_norms(u: SpectralField) -> dict:
    g = u.grid
    j = shell_index(g)
    e = np.sum(np.abs(u.data) ** 2, axis=0)
    out = {}
    for jj in DyadicBlockSet.for_grid(g).indices:
        out[jj] = float(np.sqrt(g.vol * np.sum(e[j == jj])))
    return out


def _lq(values, q) -> float:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    if q == np.inf:
        return float(np.max(values))
    return float(np.sum(values**q) ** (1.0 / q))


def besov_norm(u: SpectralField, s: float, q: float = 2.0) -> float:
    """Homogeneous B^s_{2,q} norm: l^q over shells of 2^(js) ||Delta_j u||_L2."""
    if s < 0 and not mean_is_zero(u):
        raise MeanModeError("negative-order homogeneous Besov norm needs a zero-mean field")
    norms = block_l2_norms(u)
    return _lq([2.0 ** (j * s) * n for j, n in norms.items()], q)


def _time_integral(times, values) -> float:
    return float(np.trapezoid(values, times)) if len(times) > 1 else 0.0


def lr_besov_norm(times, fields: Sequence[SpectralField], s: float, q: float, r: float) -> float:
    """L^r(0,T; B^s_{2,q}) norm by trapezoidal integration of stored samples."""
    vals = np.array([besov_norm(f, s, q) for f in fields])
    return _time_integral(times, vals**r) ** (1.0 / r)


def chemin_lerner_norm(times, fields: Sequence[SpectralField], s: float, q: float, r: float) -> float:
    """l^q over shells of 2^(js) ||Delta_j u||_{L^r_t L^2_x}."""
    per_time = [block_l2_norms(f) for f in fields]
    shells = sorted(per_time[0])
    out = []
    for j in shells:
        series = np.array([p[j] for p in per_time])
        out.append(2.0 ** (j * s) * _time_integral(times, series**r) ** (1.0 / r))
    return _lq(out, q)


# ----------------------------------------------------------------------------
# fractional heat semigroup

@dataclass(frozen=True, eq=False)
class HeatPropagator:
    alpha: float
    nu: float
    grid: Grid

    @property
    def rates(self) -> np.ndarray:
        return self.nu * fractional_symbol(self.grid, self.alpha)

    def factors(self, t: float) -> np.ndarray:
        return np.exp(-self.rates * t)

    def apply(self, u: SpectralField, t: float) -> SpectralField:
        return u.with_data(u.data * self.factors(t))


class SampledForcing:
    """Piecewise-cubic Lagrange interpolation of a forcing recorded at discrete times."""

    def __init__(self, times, fields: Sequence[SpectralField]):
        self.times = np.asarray(times, dtype=float)
        self.fields = list(fields)
        if len(self.times) != len(self.fields) or len(self.times) == 0:
            raise ValueError("need matching, nonempty time and field samples")

    def __call__(self, t: float) -> SpectralField:
        ts = self.times
        if len(ts) == 1:
            return self.fields[0]
        i = int(np.searchsorted(ts, t))
        lo = max(0, min(i - 2, len(ts) - 4))
        idx = range(lo, min(lo + 4, len(ts)))
        data = 0.0
        for a in idx:
            w = 1.0
            for b in idx:
                if b != a:
                    w *= (t - ts[b]) / (ts[a] - ts[b])
            data = data + w * self.fields[a].data
        return self.fields[idx[0]].with_data(data)


def heat_step(w: SpectralField, f_history: Optional[Callable[[float], SpectralField]],
              prop: HeatPropagator, t0: float, dt: float) -> SpectralField:
    """Exact per-mode Duhamel step; the forcing integral uses 4-point Gauss-Legendre."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    rates = prop.rates
    out = w.data * np.exp(-rates * dt)
    if f_history is not None:
        taus = 0.5 * dt * (GL4_NODES + 1.0)
        for tau, wt in zip(taus, GL4_WEIGHTS):
            f = f_history(t0 + tau)
            out = out + (0.5 * dt * wt) * np.exp(-rates * (dt - tau)) * f.data
    return w.with_data(out)


def heat_solve(w0: SpectralField, forcing, prop: HeatPropagator, times) -> list:
    """w at every entry of times (times[0] is the initial time)."""
    out = [w0]
    w = w0
    for a, b in zip(times[:-1], times[1:]):
        w = heat_step(w, forcing, prop, a, b - a)
        out.append(w)
    return out


@dataclass
class AnnulusReport:
    lhs: float
    envelope: float
    passed: bool
    shell: int


def annulus_decay_check(u: SpectralField, prop: HeatPropagator, t: float) -> AnnulusReport:
    g = u.grid
    nz = np.any(u.data != 0, axis=0)
    if not nz.any():
        return AnnulusReport(0.0, 0.0, True, 0)
    shells = np.unique(shell_index(g)[nz])
    if len(shells) != 1 or nz[(0,) * g.d]:
        raise ValueError("field is not supported in a single dyadic shell")
    j = int(shells[0])
    norm = l2_norm(u)
    lhs = l2_norm(prop.apply(u, t))
    inner_radius = 2.0 ** (j - 1)
    envelope = np.exp(-prop.nu * t * inner_radius ** (2 * prop.alpha)) * norm
    return AnnulusReport(lhs, float(envelope), bool(lhs <= envelope * (1 + 1e-12)), j)


@dataclass
class MaximalRegularity:
    lhs: float
    rhs_f: float
    rhs_w0: float

    @property
    def ratio(self) -> float:
        denom = self.rhs_f + self.rhs_w0
        return self.lhs / denom if denom > 0 else 0.0


def maximal_regularity_ratio(w0: SpectralField, f_samples, params: dict, T: float) -> MaximalRegularity:
    """Norms of the forced fractional heat equation entering the Besov maximal-regularity estimate.

    f_samples is a pair (times, fields) on [0, T]; params holds alpha, nu, delta0, m, r and q.
    """
    alpha, nu = params["alpha"], params["nu"]
    delta0, m, r = params["delta0"], params["m"], params["r"]
    q = params.get("q", 1)
    if not (1 < r <= m < np.inf) or q != 1:
        raise ValueError("need 1 < r <= m < inf and q = 1")
    times, fields = f_samples
    times = np.asarray(times, dtype=float)
    if abs(times[0]) > 1e-14 or abs(times[-1] - T) > 1e-9 * max(T, 1):
        raise ValueError("forcing samples must span [0, T]")
    if not mean_is_zero(w0) or not all(mean_is_zero(f) for f in fields):
        raise MeanModeError("maximal-regularity data must be mean-zero")
    prop = HeatPropagator(alpha, nu, w0.grid)
    ws = heat_solve(w0, SampledForcing(times, fields), prop, times)
    lhs = lr_besov_norm(times, ws, delta0 + 2 * alpha + 2 * alpha / m, q, m)
    rhs_f = lr_besov_norm(times, fields, delta0 + 2 * alpha / r, q, r)
    rhs_w0 = besov_norm(w0, delta0 + 2 * alpha, q)
    return MaximalRegularity(lhs, rhs_f, rhs_w0)


# ----------------------------------------------------------------------------
# functional inequalities checked with calibrated constants

def bernstein_ratio(u: SpectralField, j: int) -> float:
    """||u||_inf / (2^(jd/2) ||u||_L2) for a field supported in shell j."""
    return linf_norm(u) / (2.0 ** (j * u.grid.d / 2.0) * l2_norm(u))


def bernstein_extremal(grid: Grid, j: int) -> SpectralField:
    """Shell field with every coefficient equal to one: it saturates ||u||_inf <= sqrt(#modes/vol) ||u||_L2."""
    data = np.zeros((1,) + grid.shape, dtype=complex)
    data[0][shell_index(grid) == j] = 1.0
    return SpectralField(grid, data)


def agmon_ratio(u: SpectralField, s: float = 2.0) -> float:
    """||u||_inf / (||u||_L2^((s-1)/s) ||u||_{H^s-dot}^(1/s)) in two dimensions."""
    l2 = l2_norm(u)
    hs = sobolev_norm(u, NormSpec(s, True))
    return linf_norm(u) / (l2 ** ((s - 1) / s) * hs ** (1.0 / s))


def product_ratio(f: SpectralField, g: SpectralField, s1: float = 1.0, s2: float = 1.0) -> float:
    """||fg||_{H^(s1+s2-d/2)} / (||f||_{H^s1} ||g||_{H^s2}) for scalar fields (component 0)."""
    grid = f.grid
    prod = physical_values(f)[0] * physical_values(g)[0]
    fg = SpectralField(grid, _fwd(grid, prod[None]))
    num = sobolev_norm(fg, NormSpec(s1 + s2 - grid.d / 2.0, False))
    return num / (sobolev_norm(f, NormSpec(s1, False)) * sobolev_norm(g, NormSpec(s2, False)))
