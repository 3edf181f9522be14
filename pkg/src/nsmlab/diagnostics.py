"""Measured quantities: energies, dissipation, helicity, negative norms, fits and monitors."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .littlewood_paley import HeatPropagator, SampledForcing, heat_step
from .spectral import (
    MeanModeError,
    NormSpec,
    SpectralField,
    curl,
    dealiased_product,
    fractional_symbol,
    hs_norm,
    inner,
    l2_norm,
    leray_project,
    linf_norm,
    mean_is_zero,
    sobolev_norm,
    truncate,
)
from .systems import PhysParams, PlasmaState, System, _const_cross, current_density, ohm_current

CSV_COLUMNS = ("t", "energy_total", "diss_visc", "diss_ohmic", "l2_v", "l2_E", "l2_B",
               "hs_v", "hs_E", "hs_B", "linf_v", "linf_B", "helicity", "ball_energy")


@dataclass
class DiagnosticRecord:
    t: float
    energy_total: float
    diss_visc: float
    diss_ohmic: float
    l2_v: Optional[float] = None
    l2_E: Optional[float] = None
    l2_B: Optional[float] = None
    hs_v: Optional[float] = None
    hs_E: Optional[float] = None
    hs_B: Optional[float] = None
    linf_v: Optional[float] = None
    linf_B: Optional[float] = None
    helicity: Optional[float] = None
    ball_energy: Optional[float] = None
    l2_j: float = 0.0
    grad_B: float = 0.0
    j_dot_B: Optional[float] = None
    norms: Dict[NormSpec, float] = field(default_factory=dict)
    extras: Dict[str, float] = field(default_factory=dict)

    def row(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]


@dataclass
class FitResult:
    exponent: float
    intercept: float
    residual: float
    window: tuple


def _opt(f, fn):
    return None if f is None else fn(f)


def energy_report(state: PlasmaState, params: PhysParams, hs_s: float = 2.0,
                  ball_radius: Optional[float] = None, specs: Sequence[NormSpec] = (),
                  with_helicity: Optional[bool] = None) -> DiagnosticRecord:
    """Quadratic diagnostics by Parseval sums; j comes from Ohm's law (j-bar for NSM*)."""
    v, E, B = state.v, state.E, state.B
    g = state.grid
    vol = g.vol
    e = sum(l2_norm(f) ** 2 for f in (v, E, B) if f is not None) * 0.5
    sys_ = params.system
    diss_visc = 0.0
    if v is not None and sys_.evolves_v:
        w = fractional_symbol(g, params.alpha)
        diss_visc = params.nu * vol * float(np.sum(w * np.sum(np.abs(v.data) ** 2, axis=0)))
    j = current_density(state, params)
    if sys_.has_E:
        diss_ohmic = l2_norm(j) ** 2 / params.sigma
    else:
        w = fractional_symbol(g, params.beta)
        diss_ohmic = vol * float(np.sum(w * np.sum(np.abs(B.data) ** 2, axis=0))) / params.sigma
    rec = DiagnosticRecord(
        t=float(state.t), energy_total=float(e), diss_visc=float(diss_visc), diss_ohmic=float(diss_ohmic),
        l2_v=_opt(v, l2_norm), l2_E=_opt(E, l2_norm), l2_B=l2_norm(B),
        hs_v=_opt(v, lambda f: hs_norm(f, hs_s)), hs_E=_opt(E, lambda f: hs_norm(f, hs_s)),
        hs_B=hs_norm(B, hs_s), linf_v=_opt(v, linf_norm), linf_B=linf_norm(B),
        l2_j=l2_norm(j), grad_B=sobolev_norm(B, NormSpec(1.0, True)),
    )
    if with_helicity is None:
        with_helicity = g.d == 3 and mean_is_zero(B)
    if with_helicity:
        rec.helicity = helicity(B)
        rec.j_dot_B = inner(j, B)
    if ball_radius is not None:
        rec.ball_energy = ball_energy(state, ball_radius)
    for spec in specs:
        rec.norms[spec] = sobolev_norm(B, spec)
    return rec


def recorder(**kw):
    """energy_report with fixed keyword options, for use as an integrate() recorder."""
    def rec(state, params):
        return energy_report(state, params, **kw)
    return rec


# ----------------------------------------------------------------------------

def vector_potential(B: SpectralField) -> SpectralField:
    """Divergence-free A with curl A = B: A(k) = i k x B(k) / |k|^2."""
    g = B.grid
    k = g.k
    b = B.data
    kxb = np.array([k[1] * b[2] - k[2] * b[1], k[2] * b[0] - k[0] * b[2], k[0] * b[1] - k[1] * b[0]])
    return B.with_data(1j * kxb / g.k2_safe, divfree=True)


def helicity(B: SpectralField) -> float:
    if B.grid.d != 3:
        raise ValueError("magnetic helicity is defined for d = 3 only")
    if not mean_is_zero(B):
        raise MeanModeError("a vector potential exists on the torus only for mean-zero B")
    return inner(vector_potential(B), B)


def neg_sobolev_norm(u: SpectralField, s: float) -> float:
    if not s < 0:
        raise ValueError("neg_sobolev_norm needs s < 0")
    return sobolev_norm(u, NormSpec(float(s), True))


def ball_energy(state: PlasmaState, radius: float) -> float:
    """Energy of v and B in the Fourier ball |k| <= radius (no factor 1/2)."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    g = state.grid
    mask = g.ball(radius)
    total = 0.0
    for f in (state.v, state.B):
        if f is not None:
            total += float(np.sum(np.sum(np.abs(f.data) ** 2, axis=0)[mask]))
    return g.vol * total


def g_squared_schedule(t, m: float, nu: float, sigma: float):
    """g(t)^2 = m / (beta (e + t) log(e + t)) with beta = 2 m / (nu sigma)."""
    beta = 2.0 * m / (nu * sigma)
    et = np.e + np.asarray(t, dtype=float)
    return m / (beta * et * np.log(et))


def g_schedule(t, m: float, nu: float, sigma: float):
    return np.sqrt(g_squared_schedule(t, m, nu, sigma))


# ----------------------------------------------------------------------------
# velocity decomposition

@dataclass
class VelocitySplit:
    v1: list
    v2: list
    residual: float
    sparse: bool


def velocity_split(traj, params: PhysParams) -> VelocitySplit:
    """v = v1 + v2 with v1 driven by advection and v2 by the Lorentz force, both with Duhamel solves."""
    if params.system not in (System.NSM, System.NSM_STAR):
        raise ValueError("velocity_split applies to NSM-type trajectories")
    states = traj.snapshots
    times = np.array([s.t for s in states])
    f1, f2 = [], []
    for st in states:
        n = st.n
        adv = dealiased_product(st.v, st.v, "advection", n)
        f1.append(-leray_project(truncate(adv, n)))
        j = ohm_current(st, params, perturbed=params.system is System.NSM_STAR)
        force = dealiased_product(j, st.B, "cross", n)
        if params.system is System.NSM_STAR and any(params.B_star):
            force = force + _const_cross(j, params.B_star)
        f2.append(leray_project(truncate(force, n)))
    prop = HeatPropagator(params.alpha, params.nu, states[0].grid)
    F1, F2 = SampledForcing(times, f1), SampledForcing(times, f2)
    v1 = [truncate(states[0].v, states[0].n)]
    v2 = [SpectralField.zeros(states[0].grid)]
    for a, b in zip(times[:-1], times[1:]):
        v1.append(heat_step(v1[-1], F1, prop, a, b - a))
        v2.append(heat_step(v2[-1], F2, prop, a, b - a))
    res = 0.0
    for st, a, b in zip(states, v1, v2):
        nv = l2_norm(st.v)
        if nv > 0:
            res = max(res, l2_norm(st.v - a - b) / nv)
    sparse = len(states) < 4 or res > 1e-4
    if sparse:
        warnings.warn("velocity split residual is dominated by forcing interpolation; record more often")
    return VelocitySplit(v1, v2, float(res), sparse)


# ----------------------------------------------------------------------------
# fits and monitors

def fit_power_law(samples) -> FitResult:
    xy = np.asarray(samples, dtype=float)
    if xy.ndim != 2 or xy.shape[0] < 3:
        raise ValueError("need at least three (x, y) samples")
    x, y = xy[:, 0], xy[:, 1]
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive samples")
    lx, ly = np.log(x), np.log(y)
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (slope * lx + icpt)) ** 2)))
    return FitResult(float(slope), float(icpt), resid, (float(x.min()), float(x.max())))


def fit_decay_rate(times, values) -> FitResult:
    """Exponential fit log y = intercept - rate t; exponent holds the rate."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    keep = y > 0
    if keep.sum() < 3:
        raise ValueError("need at least three positive samples")
    t, ly = t[keep], np.log(y[keep])
    slope, icpt = np.polyfit(t, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (slope * t + icpt)) ** 2)))
    return FitResult(float(-slope), float(icpt), resid, (float(t.min()), float(t.max())))


@dataclass
class BGWReport:
    lhs: float
    rhs_envelope: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs_envelope


def bgw_monitor(f: SpectralField, s0: float) -> BGWReport:
    d = f.grid.d
    if not s0 > max(d / 2 - 1, 0):
        raise ValueError("need s0 > max(d/2 - 1, 0)")
    hd = hs_norm(f, d / 2)
    if hd == 0:
        raise ValueError("BGW monitor needs a nonzero field")
    hs = hs_norm(f, s0 + 1)
    return BGWReport(linf_norm(f), hd * (1.0 + np.sqrt(np.log1p(hs / hd))))


def log_gronwall_bound(y0: float, h1_integral: float, h2_integral: float, alpha_param: float = 1.0) -> float:
    if alpha_param < 1:
        raise ValueError("alpha must be >= 1")
    if min(y0, h1_integral, h2_integral) < 0:
        raise ValueError("inputs must be nonnegative")
    return float(np.exp((np.log(alpha_param + y0) + h1_integral) * np.exp(h2_integral)))


# ----------------------------------------------------------------------------
# identity residuals over a recorded trajectory

def _series(records, name):
    return np.array([getattr(r, name) for r in records], dtype=float)


def dissipation_integral(records, t0_index: int = 0, t1_index: int = -1) -> float:
    t = _series(records, "t")
    d = _series(records, "diss_visc") + _series(records, "diss_ohmic")
    if len(t) < 2:
        return 0.0
    if len(t) < 4:
        return float(np.trapezoid(d[t0_index:t1_index or None], t[t0_index:t1_index or None]))
    spl = CubicSpline(t, d)
    return float(spl.integrate(t[t0_index], t[t1_index]))


def energy_residual(records) -> float:
    """|E(T) - E(0) + int_0^T (diss_visc + diss_ohmic)| / E(0)."""
    e = _series(records, "energy_total")
    if e[0] == 0:
        return 0.0
    return abs(e[-1] - e[0] + dissipation_integral(records)) / e[0]


def interval_energy_residuals(records) -> np.ndarray:
    """Per-interval energy balance defect relative to E(0)."""
    t = _series(records, "t")
    e = _series(records, "energy_total")
    d = _series(records, "diss_visc") + _series(records, "diss_ohmic")
    if len(t) < 2 or e[0] == 0:
        return np.zeros(0)
    if len(t) >= 4:
        spl = CubicSpline(t, d)
        ints = np.array([spl.integrate(a, b) for a, b in zip(t[:-1], t[1:])])
    else:
        ints = 0.5 * (d[1:] + d[:-1]) * np.diff(t)
    return np.abs(np.diff(e) + ints) / e[0]


def helicity_rate_mismatch(records, sigma: float) -> float:
    """Centered difference of helicity against -(2/sigma) int j.B at interior records (relative)."""
    t = _series(records, "t")
    h = _series(records, "helicity")
    jb = _series(records, "j_dot_B")
    fd = (h[2:] - h[:-2]) / (t[2:] - t[:-2])
    rate = -(2.0 / sigma) * jb[1:-1]
    scale = max(np.max(np.abs(rate)), 1e-300)
    return float(np.max(np.abs(fd - rate)) / scale)


def max_divergence(traj) -> float:
    from .spectral import divergence_defect
    out = 0.0
    for st in traj.snapshots:
        for f in (st.v, st.B):
            if f is not None:
                out = max(out, divergence_defect(f))
    return out
