"""Exponential Runge-Kutta time stepping with exact diagonal damping."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from .spectral import SpectralField, curl, leray_data, linf_norm
from .systems import PhysParams, PlasmaState, System, evaluate

SCHEMES = ("IFRK4", "ETDRK4")


class BlowUpError(RuntimeError):
    """A step produced non-finite values; ``last_state`` is the last healthy state."""

    def __init__(self, message, last_state: PlasmaState, trajectory=None):
        super().__init__(message)
        self.last_state = last_state
        self.trajectory = trajectory


@dataclass
class StepperConfig:
    dt: float = 1e-2
    cfl: float = 0.5
    t_end: float = 1.0
    record_every: int = 1
    scheme: str = "IFRK4"
    store_states: bool = True
    dt_min: float = 1e-9  # a CFL step below this is reported as blow-up

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if not 0 < self.cfl:
            raise ValueError("cfl must be positive")
        if not 0 < self.dt_min <= self.dt:
            raise ValueError("dt_min must lie in (0, dt]")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        self.scheme = self.scheme.upper()
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")


@dataclass
class Trajectory:
    snapshots: List[PlasmaState] = field(default_factory=list)
    records: list = field(default_factory=list)
    steps: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    @property
    def final(self) -> PlasmaState:
        return self.snapshots[-1]

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)


# ----------------------------------------------------------------------------

def cfl_dt(state: PlasmaState, params: PhysParams, cfg: StepperConfig) -> float:
    """Explicit-term step bound; damping rates are integrated exactly and impose nothing."""
    kmax = min(state.n, state.grid.kmax)
    rates = []
    sys_ = params.system
    if sys_.has_E:
        rates.append(params.c * kmax)
        if sys_.evolves_v and params.nonlinear:
            # Ohmic drag sigma |B|^2 on the velocity is stiff but not diagonal
            rates.append(params.sigma * _linf_with_background(state.B, params.B_star) ** 2)
    if state.v is not None and sys_.evolves_v:
        rates.append(kmax * linf_norm(state.v))
    if not sys_.has_E:
        bmag = _linf_with_background(state.B, params.B_star)
        if sys_ is not System.HALL:
            rates.append(kmax * bmag)
        if params.kappa and params.nonlinear:
            hall = params.kappa / params.sigma
            rates.append(hall * kmax * linf_norm(curl(state.B)))
            rates.append(hall * kmax * kmax * bmag)
    rate = max(rates) if rates else 0.0
    if rate <= 0:
        return cfg.dt
    return min(cfg.cfl / rate, cfg.dt)


def _linf_with_background(B: SpectralField, bstar) -> float:
    if not any(bstar):
        return linf_norm(B)
    data = B.data.copy()
    data[(slice(None),) + (0,) * B.grid.d] += np.asarray(bstar)
    return linf_norm(B.with_data(data))


# ----------------------------------------------------------------------------

def _phi_coefficients(z: np.ndarray, h: float, m: int = 32):
    """ETDRK4 weights for diagonal linear part z = L h, by contour averaging (Kassam-Trefethen)."""
    roots = np.exp(1j * np.pi * (np.arange(1, m + 1) - 0.5) / m)
    zz = z[..., None] + roots
    ez = np.exp(zz)
    half = np.exp(zz / 2)
    Q = h * np.real(np.mean((half - 1) / zz, axis=-1))
    f1 = h * np.real(np.mean((-4 - zz + ez * (4 - 3 * zz + zz**2)) / zz**3, axis=-1))
    f2 = h * np.real(np.mean((2 + zz + ez * (zz - 2)) / zz**3, axis=-1))
    f3 = h * np.real(np.mean((-4 - 3 * zz - zz**2 + ez * (4 - zz)) / zz**3, axis=-1))
    return Q, f1, f2, f3


class _Stages:
    """Evaluates the non-stiff part N(u) = du/dt + r u of the chosen system."""

    def __init__(self, base: PlasmaState, params: PhysParams):
        self.base = base
        self.params = params
        tend = evaluate(base, params)
        self.names = list(tend.fields)
        self.rates = {k: np.asarray(tend.stiff_rates.get(k, 0.0), dtype=float) for k in self.names}
        self.first = self._nonstiff(tend, {k: base.fields()[k].data for k in self.names})

    def _nonstiff(self, tend, u) -> Dict[str, np.ndarray]:
        return {k: tend.fields[k].data + self.rates[k] * u[k] for k in self.names}

    def state(self, u: Dict[str, np.ndarray], t: float) -> PlasmaState:
        g = self.base.grid
        kw = {}
        for k, data in u.items():
            if k in ("v", "B"):
                kw[k] = SpectralField(g, leray_data(g, data), True)
            else:
                kw[k] = SpectralField(g, data)
        return self.base.replace(t=t, **kw)

    def __call__(self, u: Dict[str, np.ndarray], t: float):
        st = self.state(u, t)
        return self._nonstiff(evaluate(st, self.params), {k: st.fields()[k].data for k in self.names})


def step(state: PlasmaState, params: PhysParams, dt: float, scheme: str = "IFRK4") -> PlasmaState:
    """Advance one step of the integrating-factor (Lawson) or exponential-time-differencing RK4."""
    S = _Stages(state, params)
    u0 = {k: state.fields()[k].data for k in S.names}
    t0 = state.t
    h = dt
    N1 = S.first
    if scheme == "IFRK4":
        e1 = {k: np.exp(-S.rates[k] * h / 2) for k in S.names}
        e2 = {k: np.exp(-S.rates[k] * h) for k in S.names}
        ua = {k: e1[k] * (u0[k] + 0.5 * h * N1[k]) for k in S.names}
        N2 = S(ua, t0 + h / 2)
        ub = {k: e1[k] * u0[k] + 0.5 * h * N2[k] for k in S.names}
        N3 = S(ub, t0 + h / 2)
        uc = {k: e2[k] * u0[k] + h * e1[k] * N3[k] for k in S.names}
        N4 = S(uc, t0 + h)
        out = {k: e2[k] * u0[k] + (h / 6) * (e2[k] * N1[k] + 2 * e1[k] * (N2[k] + N3[k]) + N4[k])
               for k in S.names}
    elif scheme == "ETDRK4":
        e1 = {k: np.exp(-S.rates[k] * h / 2) for k in S.names}
        e2 = {k: np.exp(-S.rates[k] * h) for k in S.names}
        co = {}
        for k in S.names:
            r = S.rates[k]
            uniq, inv = np.unique(r, return_inverse=True)
            coeffs = _phi_coefficients(-uniq * h, h)
            co[k] = [c[inv].reshape(r.shape) for c in coeffs]
        ua = {k: e1[k] * u0[k] + co[k][0] * N1[k] for k in S.names}
        Na = S(ua, t0 + h / 2)
        ub = {k: e1[k] * u0[k] + co[k][0] * Na[k] for k in S.names}
        Nb = S(ub, t0 + h / 2)
        uc = {k: e1[k] * ua[k] + co[k][0] * (2 * Nb[k] - N1[k]) for k in S.names}
        Nc = S(uc, t0 + h)
        out = {k: e2[k] * u0[k] + co[k][1] * N1[k] + 2 * co[k][2] * (Na[k] + Nb[k]) + co[k][3] * Nc[k]
               for k in S.names}
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    if not all(np.all(np.isfinite(a)) for a in out.values()):
        raise BlowUpError(f"non-finite values at t = {t0 + h:.6g}", state)
    return S.state(out, t0 + h)


RecorderFn = Callable[[PlasmaState, PhysParams], object]


def integrate(initial: PlasmaState, params: PhysParams, cfg: StepperConfig,
              diagnostics: Optional[RecorderFn] = None) -> Trajectory:
    """Step from initial.t to cfg.t_end, recording every cfg.record_every steps and at the end."""
    if diagnostics is None:
        from .diagnostics import energy_report as diagnostics
    traj = Trajectory()
    traj.records.append(diagnostics(initial, params))
    traj.snapshots.append(initial)
    state = initial
    t_end = cfg.t_end
    tol = 1e-12 * max(1.0, abs(t_end))
    nstep = 0
    while t_end - state.t > tol:
        dt_cfl = cfl_dt(state, params, cfg)
        if dt_cfl < cfg.dt_min:
            raise BlowUpError(f"CFL step collapsed to {dt_cfl:.3e} at t = {state.t:.6g}", state, traj)
        dt = min(dt_cfl, t_end - state.t)
        try:
            new = step(state, params, dt, cfg.scheme)
        except BlowUpError as exc:
            exc.trajectory = traj
            raise
        nstep += 1
        state = new
        last = t_end - state.t <= tol
        if nstep % cfg.record_every == 0 or last:
            traj.records.append(diagnostics(state, params))
            if cfg.store_states:
                traj.snapshots.append(state)
    traj.steps = nstep
    if not cfg.store_states and traj.snapshots[-1] is not state:
        traj.snapshots.append(state)
    return traj
