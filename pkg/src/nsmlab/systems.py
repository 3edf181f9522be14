"""Right-hand sides of the Navier-Stokes-Maxwell family on the truncated Fourier ball.

Every evaluator returns a :class:`Tendency` carrying the full time derivative
plus the diagonal damping rates that a stepper may integrate exactly.  Velocity
tendencies are Leray-projected, so pressures never appear.  All products are
dealiased and cut back to the active truncation ball T_n.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np

from .spectral import (
    Grid,
    SpectralField,
    curl,
    dealiased_product,
    directional_derivative,
    divergence_defect,
    fractional_laplacian,
    fractional_symbol,
    gradient,
    leray_project,
    truncate,
)

DIV_TOL = 1e-10


class System(str, enum.Enum):
    NSM = "NSM"
    NSM_STAR = "NSM_STAR"
    MAXWELL = "MAXWELL"
    MAXWELL_FREE = "MAXWELL_FREE"
    HMHD = "HMHD"
    MHD = "MHD"
    HALL = "HALL"
    HMHD_STAR = "HMHD_STAR"

    @property
    def has_E(self) -> bool:
        return self in (System.NSM, System.NSM_STAR, System.MAXWELL, System.MAXWELL_FREE)

    @property
    def evolves_v(self) -> bool:
        return self not in (System.MAXWELL, System.MAXWELL_FREE, System.HALL)


class DivergenceError(ValueError):
    pass


class MissingFieldError(ValueError):
    pass


@dataclass(frozen=True)
class PhysParams:
    nu: float = 1.0
    sigma: float = 1.0
    c: float = 1.0
    kappa: float = 0.0
    alpha: float = 1.0
    beta: float = 1.0
    B_star: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    system: System = System.NSM
    nonlinear: bool = True

    def __post_init__(self):
        object.__setattr__(self, "system", System(self.system))
        object.__setattr__(self, "B_star", tuple(float(b) for b in self.B_star))
        if self.nu < 0 or self.kappa < 0 or self.alpha < 0:
            raise ValueError("nu, kappa and alpha must be nonnegative")
        if not (self.sigma > 0 and self.c > 0 and self.beta > 0):
            raise ValueError("sigma, c and beta must be positive")
        if len(self.B_star) != 3 or not np.all(np.isfinite(self.B_star)):
            raise ValueError("B_star must be a finite 3-vector")

    def with_(self, **kw) -> "PhysParams":
        return replace(self, **kw)


@dataclass(frozen=True, eq=False)
class PlasmaState:
    t: float
    v: Optional[SpectralField]
    B: SpectralField
    E: Optional[SpectralField] = None
    truncation_n: Optional[float] = None

    @property
    def grid(self) -> Grid:
        return self.B.grid

    @property
    def n(self) -> float:
        return self.grid.kmax if self.truncation_n is None else self.truncation_n

    def fields(self) -> Dict[str, SpectralField]:
        return {k: f for k, f in (("v", self.v), ("E", self.E), ("B", self.B)) if f is not None}

    def replace(self, **kw) -> "PlasmaState":
        return replace(self, **kw)


@dataclass(frozen=True, eq=False)
class Tendency:
    """Time derivatives per evolved field plus per-mode stiff damping rates.

    stiff_rates maps a field name to an array r(k) such that -r(k) u(k) is
    part of that field's derivative.
    """

    fields: Dict[str, SpectralField]
    stiff_rates: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def dv(self):
        return self.fields.get("v")

    @property
    def dE(self):
        return self.fields.get("E")

    @property
    def dB(self):
        return self.fields.get("B")


def _require_divfree(*fields: SpectralField):
    for f in fields:
        if f is not None and divergence_defect(f) > DIV_TOL:
            raise DivergenceError(f"input field is not divergence-free (defect {divergence_defect(f):.2e})")


def _P(u: SpectralField, n: float) -> SpectralField:
    return leray_project(truncate(u, n))


def _const_cross(u: SpectralField, b) -> SpectralField:
    """Pointwise u x b for a constant vector b (exact per mode)."""
    b = np.asarray(b, dtype=float)
    d = u.data
    out = np.array([d[1] * b[2] - d[2] * b[1], d[2] * b[0] - d[0] * b[2], d[0] * b[1] - d[1] * b[0]])
    return u.with_data(out, divfree=False)


def _has_bstar(params: PhysParams) -> bool:
    return any(b != 0.0 for b in params.B_star)


def _full(grid: Grid, rate) -> np.ndarray:
    return np.broadcast_to(np.asarray(rate, dtype=float), grid.shape)


# ----------------------------------------------------------------------------
# Ohm's law

def ohm_current(state: PlasmaState, params: PhysParams, perturbed: bool = False) -> SpectralField:
    """j = sigma (c E + T_n(v x B)); perturbed adds v x B* for the constant background B*."""
    if state.E is None:
        raise MissingFieldError("Ohm's law needs the electric field")
    j = state.E * params.c
    if state.v is not None and params.nonlinear:
        j = j + dealiased_product(state.v, state.B, "cross", state.n)
    if perturbed and state.v is not None and _has_bstar(params):
        j = j + truncate(_const_cross(state.v, params.B_star), state.n)
    j = j * params.sigma
    return j.with_data(j.data, divfree=False)


# ----------------------------------------------------------------------------
# evaluators

def nsm_rhs(state: PlasmaState, params: PhysParams) -> Tendency:
    return _nsm(state, params, perturbed=False)


def nsm_star_rhs(state: PlasmaState, params: PhysParams) -> Tendency:
    return _nsm(state, params, perturbed=True)


def _nsm(state: PlasmaState, params: PhysParams, perturbed: bool) -> Tendency:
    v, E, B = state.v, state.E, state.B
    if v is None or E is None:
        raise MissingFieldError("NSM needs v, E and B")
    _require_divfree(v, B)
    g, n = state.grid, state.n
    nu, c = params.nu, params.c
    j = ohm_current(state, params, perturbed=perturbed)
    dv = -nu * fractional_laplacian(v, params.alpha)
    if params.nonlinear:
        adv = dealiased_product(v, v, "advection", n)
        lorentz = dealiased_product(j, B, "cross", n)
        if perturbed and _has_bstar(params):
            lorentz = lorentz + truncate(_const_cross(j, params.B_star), n)
        dv = dv + _P(lorentz - adv, n)
    dE = (curl(B) - j) * c
    dB = -c * curl(E)
    rates = {"v": nu * fractional_symbol(g, params.alpha), "E": _full(g, params.sigma * c * c)}
    return Tendency({"v": dv.with_data(dv.data, True), "E": dE, "B": dB}, rates)


def maxwell_rhs(state: PlasmaState, params: PhysParams, free: bool = False) -> Tendency:
    """Maxwell subsystem with a prescribed velocity (or no current at all when free)."""
    E, B = state.E, state.B
    if E is None or B is None:
        raise MissingFieldError("Maxwell needs E and B")
    c = params.c
    if free:
        return Tendency({"E": c * curl(B), "B": -c * curl(E)}, {})
    if state.v is None:
        state = state.replace(v=SpectralField.zeros(state.grid))
    j = ohm_current(state, params)
    return Tendency({"E": (curl(B) - j) * c, "B": -c * curl(E)},
                    {"E": _full(state.grid, params.sigma * c * c)})


def hmhd_rhs(state: PlasmaState, params: PhysParams) -> Tendency:
    """Fractional Hall-MHD in rotational form; kappa = 0 is fractional MHD."""
    v, B = state.v, state.B
    _require_divfree(v, B)
    g, n = state.grid, state.n
    sig = params.sigma
    J = curl(B)
    dv = -params.nu * fractional_laplacian(v, params.alpha)
    dB = -(1.0 / sig) * fractional_laplacian(B, params.beta)
    if params.nonlinear:
        jxb = dealiased_product(J, B, "cross", n)
        dv = dv + _P(jxb - dealiased_product(v, v, "advection", n), n)
        dB = dB + curl(dealiased_product(v, B, "cross", n))
        if params.kappa:
            dB = dB - (params.kappa / sig) * curl(jxb)
    rates = {"v": params.nu * fractional_symbol(g, params.alpha),
             "B": (1.0 / sig) * fractional_symbol(g, params.beta)}
    return Tendency({"v": dv.with_data(dv.data, True), "B": dB.with_data(dB.data, True)}, rates)


def mhd_rhs(state: PlasmaState, params: PhysParams) -> Tendency:
    """Fractional MHD in advective form, B . grad B - grad |B|^2 / 2 for the Lorentz force."""
    v, B = state.v, state.B
    _require_divfree(v, B)
    g, n = state.grid, state.n
    sig = params.sigma
    dv = -params.nu * fractional_laplacian(v, params.alpha)
    dB = -(1.0 / sig) * fractional_laplacian(B, params.beta)
    if params.nonlinear:
        half_b2 = dealiased_product(B, B, "dot", n) * 0.5
        force = dealiased_product(B, B, "advection", n) - gradient(half_b2)
        dv = dv + _P(force - dealiased_product(v, v, "advection", n), n)
        dB = dB + dealiased_product(B, v, "advection", n) - dealiased_product(v, B, "advection", n)
    rates = {"v": params.nu * fractional_symbol(g, params.alpha),
             "B": (1.0 / sig) * fractional_symbol(g, params.beta)}
    return Tendency({"v": dv.with_data(dv.data, True), "B": dB.with_data(dB.data, True)}, rates)


def hall_rhs(B, params: PhysParams, n: Optional[float] = None) -> Tendency:
    """Electron-MHD: dB/dt = -(1/sigma) Lambda^(2 beta) B - (kappa/sigma) curl((curl B) x B)."""
    if isinstance(B, PlasmaState):
        n = B.n if n is None else n
        B = B.B
    _require_divfree(B)
    n = B.grid.kmax if n is None else n
    sig = params.sigma
    dB = -(1.0 / sig) * fractional_laplacian(B, params.beta)
    if params.nonlinear and params.kappa:
        dB = dB - (params.kappa / sig) * curl(dealiased_product(curl(B), B, "cross", n))
    return Tendency({"B": dB.with_data(dB.data, True)},
                    {"B": (1.0 / sig) * fractional_symbol(B.grid, params.beta)})


def hmhd_star_rhs(state: PlasmaState, params: PhysParams) -> Tendency:
    """Perturbation of Hall-MHD around a constant field B*, with velocity damping."""
    v, B = state.v, state.B
    _require_divfree(v, B)
    g, n = state.grid, state.n
    sig, kap, bs = params.sigma, params.kappa, params.B_star
    J = curl(B)
    dv = -params.nu * fractional_laplacian(v, params.alpha) + leray_project(directional_derivative(B, bs))
    dB = (directional_derivative(v, bs) - (1.0 / sig) * fractional_laplacian(B, params.beta)
          - (kap / sig) * directional_derivative(J, bs))
    if params.nonlinear:
        dv = dv + _P(dealiased_product(B, B, "advection", n) - dealiased_product(v, v, "advection", n), n)
        dB = dB + dealiased_product(B, v, "advection", n) - dealiased_product(v, B, "advection", n)
        if kap:
            hall = dealiased_product(J, B, "advection", n) - dealiased_product(B, J, "advection", n)
            dB = dB + (kap / sig) * hall
    rates = {"v": params.nu * fractional_symbol(g, params.alpha),
             "B": (1.0 / sig) * fractional_symbol(g, params.beta)}
    return Tendency({"v": dv.with_data(dv.data, True), "B": dB.with_data(dB.data, True)}, rates)


def evaluate(state: PlasmaState, params: PhysParams) -> Tendency:
    s = params.system
    if s is System.NSM:
        return nsm_rhs(state, params)
    if s is System.NSM_STAR:
        return nsm_star_rhs(state, params)
    if s is System.MAXWELL:
        return maxwell_rhs(state, params, free=False)
    if s is System.MAXWELL_FREE:
        return maxwell_rhs(state, params, free=True)
    if s is System.HMHD:
        return hmhd_rhs(state, params)
    if s is System.MHD:
        return mhd_rhs(state, params)
    if s is System.HALL:
        return hall_rhs(state, params)
    if s is System.HMHD_STAR:
        return hmhd_star_rhs(state, params)
    raise ValueError(f"unknown system {s}")


def current_density(state: PlasmaState, params: PhysParams) -> SpectralField:
    """Electric current appearing in the Ohmic dissipation: j (or j-bar) for NSM-type, curl B otherwise."""
    s = params.system
    if s.has_E and s is not System.MAXWELL_FREE:
        return ohm_current(state, params, perturbed=(s is System.NSM_STAR))
    if s is System.MAXWELL_FREE:
        return SpectralField.zeros(state.grid)
    return curl(state.B)
