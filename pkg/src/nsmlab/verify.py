"""Self-check suites run by ``nsmlab verify``: invariants, oracles, calibration."""
from __future__ import annotations

import json
from typing import List

import numpy as np

from . import calibration
from .diagnostics import energy_residual, max_divergence
from .initial import random_field
from .io import decode_snapshot, encode_snapshot
from .oracles import heat_mode_solution, linear_nsm_oracle, oracle_rhs
from .scenarios import Check, heat_closed_form_error
from .spectral import (
    curl,
    dealiased_product,
    hermitian_defect,
    inner,
    l2_norm,
    leray_project,
    make_grid,
    to_physical,
    to_spectral,
)
from .systems import PhysParams, PlasmaState, System, evaluate
from .timestepping import StepperConfig, integrate

SUITES = ("invariants", "oracles", "calibration")


def _rel(a, b) -> float:
    scale = max(float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


def _state(grid, seed, with_E=True):
    rng = np.random.default_rng(seed)
    v = random_field(grid, 0, 1.0, rng=rng)
    B = random_field(grid, 0, 1.0, rng=rng)
    E = random_field(grid, 0, 0.5, rng=rng) if with_E else None
    return PlasmaState(0.0, v, B, E)


def invariant_checks(N: int, d: int = 2, seed: int = 0) -> List[Check]:
    g = make_grid(d, N)
    out = []
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal((3,) + g.shape)
    back = to_physical(to_spectral(g, vals))
    out.append(Check(f"FFT roundtrip d={d} N={N}", _rel(back, vals) < 1e-12, _rel(back, vals), 1e-12))

    u = to_spectral(g, rng.standard_normal((3,) + g.shape))
    w = to_spectral(g, rng.standard_normal((3,) + g.shape))
    pu = leray_project(u)
    idem = _rel(leray_project(pu).data, pu.data)
    out.append(Check(f"Leray idempotent d={d} N={N}", idem < 1e-13, idem, 1e-13))
    sa = abs(inner(pu, w) - inner(u, leray_project(w))) / (l2_norm(u) * l2_norm(w))
    out.append(Check(f"Leray self-adjoint d={d} N={N}", sa < 1e-13, sa, 1e-13))

    st = _state(g, seed + 1)
    a, b = st.v, st.B
    skew = abs(inner(dealiased_product(a, b, "advection"), b))
    out.append(Check(f"advection skew-symmetry d={d} N={N}", skew < 1e-11, skew, 1e-11))
    J = curl(b)
    hall = abs(inner(curl(dealiased_product(J, b, "cross")), b))
    out.append(Check(f"Hall-term energy orthogonality d={d} N={N}", hall < 1e-11, hall, 1e-11))

    herm = max(hermitian_defect(f) for f in (st.v, st.E, st.B))
    out.append(Check(f"Hermitian symmetry of generated data d={d} N={N}", herm < 1e-13, herm, 1e-13))

    tr = integrate(st, PhysParams(nu=0.1), StepperConfig(dt=0.005, t_end=0.1))
    div = max_divergence(tr)
    out.append(Check(f"divergence preserved along NSM run d={d} N={N}", div < 1e-9, div, 1e-9))
    res = energy_residual(tr.records)
    out.append(Check(f"energy identity short NSM run d={d} N={N}", res < 1e-7, res, 1e-7))

    buf = encode_snapshot(tr.final)
    again = encode_snapshot(decode_snapshot(buf))
    out.append(Check(f"snapshot byte-exact roundtrip d={d} N={N}", buf == again, float(buf != again), 0))
    return out


def free_maxwell_check(d: int = 2, N: int = 16, seed: int = 3) -> Check:
    g = make_grid(d, N)
    st = _state(g, seed).replace(v=None)
    p = PhysParams(system=System.MAXWELL_FREE, c=1.0)
    # RK4 loses O((c kmax dt)^6) energy per step on a skew generator
    tr = integrate(st, p, StepperConfig(dt=0.0025, t_end=1.0, cfl=0.9, store_states=False))
    e = tr.series("energy_total")
    drift = float(np.max(np.abs(e - e[0])) / e[0])
    return Check(f"free Maxwell energy conserved over unit time d={d} N={N}", drift < 1e-10, drift, 1e-10)


def suite_invariants() -> List[Check]:
    out = []
    for d, N in ((2, 8), (2, 16), (2, 32), (3, 8), (3, 16)):
        out += invariant_checks(N, d)
    out.append(free_maxwell_check())
    return out


def rhs_oracle_checks(d: int, N: int = 8, seed: int = 0) -> List[Check]:
    g = make_grid(d, N)
    st = _state(g, seed)
    out = []
    for sys_ in System:
        p = PhysParams(system=sys_, nu=0.2, sigma=2.0, c=1.5, kappa=0.3, alpha=0.75, beta=1.25,
                       B_star=(0.3, -0.2, 0.5))
        s0 = st if sys_.has_E else st.replace(E=None)
        fast = evaluate(s0, p).fields
        ref = oracle_rhs(s0, p)
        err = max(_rel(fast[k].data, ref[k].data) for k in ref)
        out.append(Check(f"{sys_.value} RHS vs pointwise oracle d={d} N={N}", err < 1e-11, err, 1e-11))
    return out


def maxwell_oracle_check(d: int = 3, N: int = 8, dt: float = 0.005) -> Check:
    g = make_grid(d, N)
    st = _state(g, 5)
    p = PhysParams(nonlinear=False, sigma=2.0, c=1.5, nu=0.3)
    exact = linear_nsm_oracle(st, p, 1.0)
    tr = integrate(st, p, StepperConfig(dt=dt, t_end=1.0, cfl=0.9), diagnostics=lambda s, q: None)
    f = tr.final
    scale = l2_norm(st.E) + l2_norm(st.B) + l2_norm(st.v)
    err = max(l2_norm(f.E - exact.E), l2_norm(f.B - exact.B), l2_norm(f.v - exact.v)) / scale
    return Check(f"linear NSM vs 6x6 matrix exponential d={d} N={N}", err < 1e-8, err, 1e-8)


def suite_oracles() -> List[Check]:
    out = rhs_oracle_checks(2) + rhs_oracle_checks(3)
    out.append(maxwell_oracle_check())
    err = heat_closed_form_error()
    out.append(Check("heat_step vs per-mode closed form", err < 1e-10, err, 1e-10))
    w = heat_mode_solution(1.0, [0.0], 2.0, 0.5)
    out.append(Check("heat closed form, unforced decay", abs(w - np.exp(-1.0)) < 1e-15, abs(w - np.exp(-1.0)), 1e-15))
    return out


def suite_calibration(path=None) -> List[Check]:
    table = calibration.regenerate(path=path)
    again = {calibration.grid_key(make_grid(d, N)): calibration.compute_constants(make_grid(d, N))
             for d, N in calibration.GRIDS}
    same = json.dumps(table, sort_keys=True) == json.dumps(again, sort_keys=True)
    out = [Check(f"calibration written to {calibration.calibration_path(path)}", True, len(table), 0),
           Check("calibration idempotent for fixed seeds", same, float(not same), 0)]
    for key, consts in table.items():
        finite = all(np.isfinite(v) and v > 0 for v in consts.values())
        out.append(Check(f"constants finite and positive ({key})", finite, len(consts), 0))
    return out


def run_suite(name: str, path=None) -> List[Check]:
    if name == "invariants":
        return suite_invariants()
    if name == "oracles":
        return suite_oracles()
    if name == "calibration":
        return suite_calibration(path)
    raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")
