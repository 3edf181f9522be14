"""Scenario catalog E1-E8: named experiment presets with machine-readable verdicts."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import calibration
from .diagnostics import (
    energy_report,
    energy_residual,
    fit_decay_rate,
    fit_power_law,
    interval_energy_residuals,
    max_divergence,
)
from .initial import apply_mean, beltrami, gaussian_bump, prescribed_velocity, random_field
from .io import ExperimentConfig, load_snapshot
from .littlewood_paley import HeatPropagator, SampledForcing, heat_step
from .oracles import heat_mode_solution
from .spectral import SpectralField, curl, dealiased_product, hs_norm, l2_norm
from .systems import PhysParams, PlasmaState, System, ohm_current
from .timestepping import BlowUpError, StepperConfig, Trajectory, integrate


@dataclass
class Check:
    name: str
    passed: bool
    value: float = float("nan")
    threshold: float = float("nan")
    asserted: bool = True

    def line(self) -> str:
        tag = ("PASS" if self.passed else "FAIL") if self.asserted else "INFO"
        return f"{tag} {self.name}: value={self.value:.6g} threshold={self.threshold:.6g}"


@dataclass
class ScenarioResult:
    scenario: str
    checks: List[Check] = field(default_factory=list)
    runs: Dict[str, Trajectory] = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.asserted)

    def check(self, name, passed, value=float("nan"), threshold=float("nan"), asserted=True) -> Check:
        c = Check(name, bool(passed), float(value), float(threshold), asserted)
        self.checks.append(c)
        return c

    def report(self) -> dict:
        return {"scenario": self.scenario, "passed": self.passed,
                "checks": [c.__dict__ for c in self.checks], "info": self.info}


def _finite(traj: Trajectory) -> bool:
    for r in traj.records:
        for x in r.row():
            if x is not None and not np.isfinite(x):
                return False
    return True


def _finite_check(res: ScenarioResult):
    bad = [k for k, tr in res.runs.items() if not _finite(tr)]
    res.check("all diagnostics finite", not bad, len(bad), 0)


def _sweep(cfg: ExperimentConfig, key: str, default) -> list:
    return list(cfg.sweep) if cfg.sweep and cfg.sweep_key == key else list(default)


def _opt(cfg, key, default):
    return cfg.initial.get(key, default)


# ----------------------------------------------------------------------------
# presets

def preset(scenario: str) -> ExperimentConfig:
    s = scenario.upper()
    mk = ExperimentConfig
    if s == "E1":
        return mk("E1", 2, 32, params=PhysParams(nu=0.1, sigma=1, c=1, alpha=1),
                  stepper=StepperConfig(dt=0.005, cfl=0.5, t_end=1.0), initial={"kind": "random", "amplitude": 1.0})
    if s == "E2":
        return mk("E2", 2, 32, params=PhysParams(nu=1e-2, alpha=1),
                  stepper=StepperConfig(dt=0.01, cfl=0.5, t_end=0.5, store_states=False),
                  initial={"kind": "random", "amplitude": 0.5, "k_hi": 4}, sweep_key="nu",
                  sweep=[1e-2, 3e-3, 1e-3, 3e-4])
    if s == "E3":
        return mk("E3", 2, 32, params=PhysParams(nu=0.05, sigma=1, alpha=1),
                  stepper=StepperConfig(dt=0.01, cfl=0.5, t_end=0.5, scheme="ETDRK4", store_states=False),
                  initial={"kind": "random", "amplitude": 0.5, "k_hi": 4}, sweep_key="c",
                  sweep=[1, 3, 10, 30, 100])
    if s == "E4":
        return mk("E4", 3, 16, params=PhysParams(nu=1, c=1, alpha=1.5),
                  stepper=StepperConfig(dt=0.02, cfl=0.5, t_end=1.0, scheme="ETDRK4", store_states=False),
                  initial={"kind": "beltrami", "amplitude": 0.2, "noise": 0.3}, sweep_key="sigma",
                  sweep=[10, 100, 1000, 10000])
    if s == "E5":
        return mk("E5", 3, 16, params=PhysParams(system=System.NSM_STAR, nu=1, sigma=1, c=1, alpha=0,
                                                 B_star=(0, 0, 1)),
                  stepper=StepperConfig(dt=0.1, cfl=0.5, t_end=50.0, scheme="ETDRK4", record_every=2,
                                        store_states=False),
                  initial={"kind": "random", "s": 3.0, "b_mean": 0.02}, sweep_key="amplitude",
                  sweep=[1.0, 0.2, 0.05])
    if s == "E6":
        return mk("E6", 3, 16, params=PhysParams(system=System.HMHD_STAR, nu=1, sigma=1, alpha=0, beta=1,
                                                 B_star=(0, 0, 1)),
                  stepper=StepperConfig(dt=0.1, cfl=0.5, t_end=30.0, scheme="ETDRK4", record_every=2,
                                        store_states=False),
                  initial={"kind": "gaussian", "amplitude": 0.05, "b_mean": 0.02}, sweep_key="kappa",
                  sweep=[0.0, 0.1])
    if s == "E7":
        return mk("E7", 3, 16, params=PhysParams(alpha=1.5), stepper=StepperConfig(dt=0.025, t_end=0.5),
                  initial={"kind": "random", "runs": 10})
    if s == "E8":
        return mk("E8", 2, 16, params=PhysParams(system=System.MAXWELL, sigma=1, c=1),
                  stepper=StepperConfig(dt=0.01, cfl=0.5, t_end=2.0, store_states=False),
                  initial={"kind": "random", "runs": 20, "s": 2.0, "amplitude": 1.0})
    raise KeyError(scenario)


# ----------------------------------------------------------------------------
# initial data

def initial_state(cfg: ExperimentConfig, params: Optional[PhysParams] = None, seed: Optional[int] = None) -> PlasmaState:
    params = cfg.params if params is None else params
    seed = cfg.seed if seed is None else seed
    g = cfg.grid
    kind = str(_opt(cfg, "kind", "random")).lower()
    amp = float(_opt(cfg, "amplitude", 1.0))
    s = float(_opt(cfg, "s", 0.0))
    k_hi = _opt(cfg, "k_hi", None)
    rng = np.random.default_rng(seed)
    if kind == "snapshot":
        return load_snapshot(_opt(cfg, "path", None))
    if kind == "random":
        v = random_field(g, 0, amp, s=s, k_hi=k_hi, rng=rng)
        B = random_field(g, 0, amp, s=s, k_hi=k_hi, rng=rng)
        E = random_field(g, 0, 0.5 * amp, s=s, k_hi=k_hi, rng=rng)
    elif kind == "beltrami":
        noise = float(_opt(cfg, "noise", 0.3))
        B = (beltrami(g) + random_field(g, 0, noise, rng=rng)) * amp
        v = random_field(g, 0, noise * amp, rng=rng)
        E = None
    elif kind == "gaussian":
        v = gaussian_bump(g, amplitude=amp, direction=(1.0, 0.3, 0.0))
        B = gaussian_bump(g, amplitude=amp, direction=(0.2, 1.0, 0.5), center=np.full(g.d, g.L * 0.4))
        E = None
    else:
        raise ValueError(f"unknown initial-condition kind {kind!r}")
    b_mean = float(_opt(cfg, "b_mean", 0.0))
    if b_mean:
        B = apply_mean(B, (b_mean, 0.0, 0.0))
    if params.system.has_E and E is None or _opt(cfg, "well_prepared", 0):
        E = well_prepared_E(v, B, params)
    if not params.system.has_E:
        E = None
    if not params.system.evolves_v and params.system is not System.MAXWELL:
        v = None
    return PlasmaState(0.0, v, B, E)


def well_prepared_E(v, B, params: PhysParams) -> SpectralField:
    """E with Ohm's current equal to curl B, which removes the initial layer."""
    E = curl(B) * (1.0 / params.sigma)
    if v is not None:
        E = E - dealiased_product(v, B, "cross")
    return E * (1.0 / params.c)


# ----------------------------------------------------------------------------
# scenarios

def run_e1(cfg: ExperimentConfig) -> ScenarioResult:
    res = ScenarioResult("E1")
    tr = integrate(initial_state(cfg), cfg.params, cfg.stepper)
    res.runs["main"] = tr
    r = energy_residual(tr.records)
    res.check("cumulative energy residual", r < 1e-7, r, 1e-7)
    res.check("max per-interval energy residual", True, float(interval_energy_residuals(tr.records).max()),
              asserted=False)
    div = max_divergence(tr)
    res.check("divergence preserved", div < 1e-9, div, 1e-9)
    _finite_check(res)
    return res


def _state_distance(a: PlasmaState, b: PlasmaState, s: float = 0.0) -> float:
    tot = 0.0
    for x, y in ((a.v, b.v), (a.E, b.E), (a.B, b.B)):
        if x is not None and y is not None:
            tot += hs_norm(x - y, s) ** 2
    return float(np.sqrt(tot))


def _quiet(state, params):
    return energy_report(state, params, hs_s=2.0)


def run_e2(cfg: ExperimentConfig) -> ScenarioResult:
    res = ScenarioResult("E2")
    nus = _sweep(cfg, "nu", [1e-2, 3e-3, 1e-3, 3e-4])
    st0 = initial_state(cfg)
    ref = integrate(st0, cfg.params.with_(nu=0.0), cfg.stepper, _quiet)
    res.runs["nu_0"] = ref
    e0, e1 = [], []
    for nu in nus:
        tr = integrate(st0, cfg.params.with_(nu=nu), cfg.stepper, _quiet)
        res.runs[f"nu_{nu:g}"] = tr
        e0.append((nu, _state_distance(tr.final, ref.final, 0.0)))
        e1.append((nu, _state_distance(tr.final, ref.final, 1.0)))
    f0, f1 = fit_power_law(e0), fit_power_law(e1)
    res.info.update(l2_errors=e0, h1_errors=e1, fit_l2=f0.__dict__, fit_h1=f1.__dict__, s=2.0, s_prime=1.0)
    res.check("L2 error slope in nu", f0.exponent >= 0.9, f0.exponent, 0.9)
    res.check("H^{s/2} error slope in nu", f1.exponent >= 0.45, f1.exponent, 0.45)
    _finite_check(res)
    return res


def run_e3(cfg: ExperimentConfig) -> ScenarioResult:
    res = ScenarioResult("E3")
    cs = _sweep(cfg, "c", [1, 3, 10, 30, 100])
    st0 = initial_state(cfg)
    p = cfg.params
    hp = PhysParams(system=System.HMHD, nu=p.nu, sigma=p.sigma, alpha=p.alpha, beta=1.0, kappa=0.0)
    lim = integrate(st0.replace(E=None), hp, cfg.stepper, _quiet)
    res.runs["hmhd"] = lim
    diffs = []
    for c in cs:
        pc = p.with_(c=c)
        st = st0.replace(E=well_prepared_E(st0.v, st0.B, pc))
        tr = integrate(st, pc, cfg.stepper, _quiet)
        res.runs[f"c_{c:g}"] = tr
        diffs.append(l2_norm(tr.final.B - lim.final.B))
    res.info.update(c=cs, B_differences=diffs,
                    v_differences=[l2_norm(res.runs[f"c_{c:g}"].final.v - lim.final.v) for c in cs])
    dec = all(b < a for a, b in zip(diffs, diffs[1:]))
    res.check("||B^c - B|| strictly decreasing in c", dec, float(np.max(np.diff(diffs))), 0.0)
    res.check("final difference below 0.1 x first", diffs[-1] < 0.1 * diffs[0], diffs[-1] / diffs[0], 0.1)
    res.info["fit_c"] = fit_power_law(list(zip(cs, diffs))).__dict__
    _finite_check(res)
    return res


def run_e4(cfg: ExperimentConfig) -> ScenarioResult:
    res = ScenarioResult("E4")
    sigmas = _sweep(cfg, "sigma", [10, 100, 1000, 10000])
    drifts, rows = [], []
    worst = 0.0
    from .diagnostics import helicity_rate_mismatch
    for sig in sigmas:
        p = cfg.params.with_(sigma=sig)
        st = initial_state(cfg, p)
        st = st.replace(E=well_prepared_E(st.v, st.B, p))
        tr = integrate(st, p, cfg.stepper, _quiet)
        res.runs[f"sigma_{sig:g}"] = tr
        h = tr.series("helicity")
        t = tr.times
        gamma0 = 2.0 * tr.records[0].energy_total
        drift = np.abs(h - h[0])
        bound = sig ** -0.5 * (t + 1.0) * gamma0
        worst = max(worst, float(np.max(drift / bound)))
        drifts.append((sig, float(drift.max())))
        rows.append({"sigma": sig, "max_drift": float(drift.max()), "bound_at_end": float(bound[-1]),
                     "helicity_rate_mismatch": helicity_rate_mismatch(tr.records, sig)})
    fit = fit_power_law(drifts)
    res.info.update(per_sigma=rows, fit=fit.__dict__)
    res.check("helicity drift within sigma^-1/2 (t+1) bound", worst <= 1.0, worst, 1.0)
    res.check("fitted sigma-slope within -0.5 +- 0.15", abs(fit.exponent + 0.5) <= 0.15, fit.exponent, -0.5)
    _finite_check(res)
    return res


def _decay_checks(res: ScenarioResult, tr: Trajectory, names, label: str):
    t = tr.times
    e = tr.series("energy_total")
    inc = float(np.max(np.diff(e))) if len(e) > 1 else 0.0
    res.check(f"{label}energy monotone nonincreasing", inc <= 1e-12 * e[0], inc / e[0], 1e-12)
    for name in names:
        x = tr.series(name)
        ratio = x[-1] / x[0] if x[0] > 0 else 0.0
        res.check(f"{label}{name} below 1e-3 of initial", ratio < 1e-3, ratio, 1e-3)
    b = tr.series("l2_B")
    late = t >= t[0] + 0.8 * (t[-1] - t[0])
    slope = abs(np.polyfit(t[late], b[late], 1)[0]) / b[-1]
    res.check(f"{label}late-time relative slope of ||B||", slope < 1e-4, slope, 1e-4)


def run_e5(cfg: ExperimentConfig) -> ScenarioResult:
    """Every sweep amplitude is run from the largest down; decay is asserted on the smallest one."""
    res = ScenarioResult("E5")
    amps = sorted(_sweep(cfg, "amplitude", [1.0, 0.2, 0.05]), reverse=True)
    s = float(_opt(cfg, "s", 3.0))
    rec = lambda st, p: energy_report(st, p, hs_s=s)
    boots, last = {}, None
    for amp in amps:
        c = replace(cfg, initial={**cfg.initial, "amplitude": amp})
        try:
            tr = integrate(initial_state(c), cfg.params, cfg.stepper, rec)
        except BlowUpError:
            boots[amp] = float("inf")
            last = None
            continue
        res.runs[f"amplitude_{amp:g}"] = tr
        hs = np.array([r.hs_v ** 2 + r.hs_E ** 2 + r.hs_B ** 2 for r in tr.records])
        boots[amp] = float(np.max(hs) / hs[0])
        last = tr
    passing = [a for a in amps if all(boots[b] <= 2.0 for b in amps if b <= a)]
    threshold = max(passing) if passing else None
    res.info.update(bootstrap_ratio={f"{a:g}": r for a, r in boots.items()}, empirical_threshold=threshold, s=s)
    small = amps[-1]
    res.check(f"bootstrap monitor E(t) <= 2 E(0) at amplitude {small:g}", boots[small] <= 2.0, boots[small], 2.0)
    if last is not None:
        _decay_checks(res, last, ("l2_v", "l2_E", "l2_j", "grad_B"), "")
        res.info["b0"] = float(last.series("l2_B")[-1])
    _finite_check(res)
    return res


def run_e6(cfg: ExperimentConfig) -> ScenarioResult:
    res = ScenarioResult("E6")
    kappas = _sweep(cfg, "kappa", [0.0, 0.1])
    rec = lambda st, p: energy_report(st, p, hs_s=2.0)
    fits = {}
    for kap in kappas:
        p = cfg.params.with_(kappa=kap)
        tr = integrate(initial_state(cfg, p), p, cfg.stepper, rec)
        label = f"kappa_{kap:g}"
        res.runs[label] = tr
        _decay_checks(res, tr, ("l2_v", "grad_B"), f"kappa={kap:g}: ")
        fluct = [l2_norm(apply_mean(st.B, (0.0, 0.0, 0.0))) for st in (tr.snapshots[0], tr.final)]
        ratio = fluct[1] / fluct[0]
        res.check(f"kappa={kap:g}: B converges to its mean", ratio < 1e-3, ratio, 1e-3)
        mean = float(np.sqrt(tr.final.grid.vol) * np.linalg.norm(tr.final.B.mean()))
        fit = fit_decay_rate(tr.times, tr.series("energy_total") - 0.5 * mean ** 2)
        fits[label] = fit.__dict__
        res.check(f"kappa={kap:g}: fitted exponential decay rate of fluctuation energy", True, fit.exponent,
                  asserted=False)
    res.info.update(fits=fits, note="torus spectral gap gives exponential decay; the whole-space "
                                    "logarithmic rate is not reproducible and is not asserted")
    _finite_check(res)
    return res


def heat_closed_form_error(grid=None, rate_nu: float = 0.2, alpha: float = 1.0, dt: float = 0.01, steps: int = 50):
    """Max relative error of heat_step against the per-mode closed form for cubic-in-time forcing."""
    from .spectral import make_grid
    grid = make_grid(2, 8) if grid is None else grid
    prop = HeatPropagator(alpha, rate_nu, grid)
    w0 = random_field(grid, 1, 1.0, divfree=False)
    coef = [random_field(grid, 10 + p, 1.0, divfree=False) for p in range(4)]
    times = np.arange(steps + 1) * dt
    samples = [SpectralField(grid, sum(c.data * t ** p for p, c in enumerate(coef))) for t in times]
    forcing = SampledForcing(times, samples)
    w = w0
    for a in times[:-1]:
        w = heat_step(w, forcing, prop, a, dt)
    T = times[-1]
    rates = prop.rates
    exact = np.empty_like(w.data)
    for idx in np.ndindex(w.data.shape):
        exact[idx] = heat_mode_solution(w0.data[idx], [c.data[idx] for c in coef], rates[idx[1:]], T)
    return float(np.max(np.abs(w.data - exact)) / np.max(np.abs(exact)))


def run_e7(cfg: ExperimentConfig) -> ScenarioResult:
    res = ScenarioResult("E7")
    g = cfg.grid
    consts = calibration.load_constants(g)
    c1, c2 = consts["maxreg_C1"], consts["maxreg_C2"]
    runs = int(_opt(cfg, "runs", 10))
    ratios = []
    for k in range(runs):
        r = calibration.maxreg_ratios(g, cfg.seed + k)
        ratios.append(r.lhs / (c1 * r.rhs_f + c2 * r.rhs_w0))
    res.info.update(ratios=ratios, C1=c1, C2=c2)
    top = float(np.max(ratios))  # NaN propagates and fails the check
    res.check("maximal-regularity ratio <= 1 over ensemble", top <= 1.0, top, 1.0)
    err = heat_closed_form_error()
    res.check("heat_step matches per-mode closed form", err < 1e-10, err, 1e-10)
    return res


def run_e8(cfg: ExperimentConfig) -> ScenarioResult:
    res = ScenarioResult("E8")
    g = cfg.grid
    p = cfg.params
    s = float(_opt(cfg, "s", 2.0))
    runs = int(_opt(cfg, "runs", 20))
    amp = float(_opt(cfg, "amplitude", 1.0))
    v = prescribed_velocity(g)

    def rec(st, prm):
        r = energy_report(st, prm, hs_s=s)
        r.extras["hs_j"] = hs_norm(ohm_current(st, prm), s)
        return r

    violations, worst = 0, 0.0
    for k in range(runs):
        rng = np.random.default_rng(cfg.seed + k)
        st = PlasmaState(0.0, v, random_field(g, 0, amp, rng=rng), random_field(g, 0, amp, rng=rng))
        tr = integrate(st, p, cfg.stepper, rec)
        if k == 0:
            res.runs["seed_0"] = tr
        t = tr.times
        lhs = np.maximum.accumulate(np.array([r.hs_E ** 2 + r.hs_B ** 2 for r in tr.records]))
        hj = np.array([r.extras["hs_j"] for r in tr.records])
        l1 = np.concatenate([[0.0], np.cumsum(0.5 * (hj[1:] + hj[:-1]) * np.diff(t))])
        rhs = 2.0 * lhs[0] + 2.0 * p.c ** 2 * l1 ** 2
        # a non-finite sample counts as a violation
        violations += int(np.sum(~(lhs <= rhs)))
        worst = max(worst, float(np.max(lhs / rhs)))
    res.info.update(worst_ratio=worst, s=s)
    res.check("Maxwell estimate with constant 2: violations", violations == 0, violations, 0)
    res.check("Maxwell estimate worst lhs/rhs", worst <= 1.0, worst, 1.0, asserted=False)
    return res


def run_custom(cfg: ExperimentConfig) -> ScenarioResult:
    res = ScenarioResult("CUSTOM")
    sweep = cfg.sweep if cfg.sweep_key else [None]
    for val in sweep:
        p, st_cfg = cfg.params, cfg
        label = "main"
        if val is not None:
            label = f"{cfg.sweep_key}_{val:g}"
            if cfg.sweep_key == "amplitude":
                st_cfg = replace(cfg, initial={**cfg.initial, "amplitude": val})
            elif cfg.sweep_key != "n":
                p = p.with_(**{cfg.sweep_key: val})
        st = initial_state(st_cfg, p)
        if val is not None and cfg.sweep_key == "n":
            st = st.replace(truncation_n=val)
        tr = integrate(st, p, cfg.stepper)
        res.runs[label] = tr
        if p.system in (System.NSM, System.NSM_STAR, System.HMHD, System.MHD, System.HMHD_STAR) and p.nonlinear:
            r = energy_residual(tr.records)
            res.check(f"{label}: energy residual (informational)", True, r, asserted=False)
        div = max_divergence(tr)
        res.check(f"{label}: divergence preserved", div < 1e-9, div, 1e-9)
    _finite_check(res)
    return res


RUNNERS: Dict[str, Callable[[ExperimentConfig], ScenarioResult]] = {
    "E1": run_e1, "E2": run_e2, "E3": run_e3, "E4": run_e4, "E5": run_e5, "E6": run_e6,
    "E7": run_e7, "E8": run_e8, "CUSTOM": run_custom,
}


def run_scenario(cfg: ExperimentConfig) -> ScenarioResult:
    return RUNNERS[cfg.scenario](cfg)
