"""Empirical constants for the functional inequalities, computed from seeded ensembles.

Constants are stored per grid in a JSON file and regenerated on demand; nothing is
hard-coded.  Each constant is the largest ratio seen over the calibration ensemble
(seeds distinct from the ones used by the checks); the maximal-regularity pair
carries an extra safety factor.
"""
from __future__ import annotations

import json
import os
from pathlib import Path
import numpy as np

from .diagnostics import bgw_monitor
from .initial import random_field
from .littlewood_paley import (
    DyadicBlockSet,
    agmon_ratio,
    bernstein_extremal,
    bernstein_ratio,
    maximal_regularity_ratio,
    product_ratio,
)
from .spectral import Grid, SpectralField, leray_project, make_grid, truncate, dealiased_product
from .systems import PhysParams, PlasmaState, ohm_current

CAL_SEEDS = tuple(range(1000, 1008))
DEFAULT_PATH = "nsmlab_calibration.json"
MAXREG = dict(alpha=1.5, nu=1.0, delta0=0.0, m=2, r=2, q=1)
MAXREG_T = 0.5
MAXREG_DT = 0.025
MAXREG_SAFETY = 2.0  # margin over the ensemble supremum
GRIDS = ((2, 8), (2, 16), (2, 32), (3, 8), (3, 16))

_cache: dict = {}


def calibration_path(path=None) -> Path:
    return Path(path or os.environ.get("NSMLAB_CALIBRATION", DEFAULT_PATH))


def grid_key(grid: Grid) -> str:
    return f"d{grid.d}_N{grid.N}_L{grid.L:.12g}"


def scalar_field(grid: Grid, seed: int, amplitude: float = 1.0) -> SpectralField:
    u = random_field(grid, seed, amplitude, divfree=False, spectrum_slope=1.0)
    return SpectralField(grid, u.data[:1])


def bernstein_constant(grid: Grid) -> float:
    blocks = DyadicBlockSet.for_grid(grid, grid.kmax)
    return max(bernstein_ratio(bernstein_extremal(grid, j), j) for j in blocks.indices if j >= 1)


def lorentz_forcing(grid: Grid, seed: int, T: float = MAXREG_T, dt: float = MAXREG_DT, amplitude: float = 0.5):
    """Time samples of P T(j x B) along a short NSM run, mean removed."""
    from .timestepping import StepperConfig, integrate
    rng = np.random.default_rng(seed)
    st = PlasmaState(0.0, random_field(grid, 0, amplitude, rng=rng), random_field(grid, 0, amplitude, rng=rng),
                     random_field(grid, 0, 0.5 * amplitude, rng=rng))
    params = PhysParams(alpha=MAXREG["alpha"])
    cfg = StepperConfig(dt=dt, cfl=0.5, t_end=T, scheme="ETDRK4")
    tr = integrate(st, params, cfg, diagnostics=lambda s, p: None)
    times, fields = [], []
    for s in tr.snapshots:
        f = leray_project(truncate(dealiased_product(ohm_current(s, params), s.B, "cross", s.n), s.n))
        data = f.data.copy()
        data[(slice(None),) + (0,) * grid.d] = 0
        times.append(s.t)
        fields.append(f.with_data(data))
    return np.array(times), fields


def maxreg_ratios(grid: Grid, seed: int, part: str = "both"):
    """Maximal-regularity norms for one ensemble member; part selects the forcing, the datum or both."""
    times, fields = lorentz_forcing(grid, seed)
    w0 = random_field(grid, seed + 7919, 0.5)
    if part == "forcing":
        w0 = SpectralField.zeros(grid)
    elif part == "datum":
        fields = [SpectralField.zeros(grid) for _ in fields]
    return maximal_regularity_ratio(w0, (times, fields), MAXREG, MAXREG_T)


def compute_constants(grid: Grid, seeds=CAL_SEEDS) -> dict:
    out = {"bernstein": bernstein_constant(grid)}
    fields = [scalar_field(grid, s) for s in seeds]
    out["bgw"] = max(bgw_monitor(f, s0=grid.d / 2).ratio for f in fields)
    out["product"] = max(product_ratio(f, g) for f, g in zip(fields, fields[1:] + fields[:1]))
    if grid.d == 2:
        out["agmon"] = max(agmon_ratio(f) for f in fields)
    if grid.d == 3:
        mr_seeds = seeds[:4]
        forced = [maxreg_ratios(grid, s, "forcing") for s in mr_seeds]
        free = [maxreg_ratios(grid, s, "datum") for s in mr_seeds]
        c1 = max(r.lhs / r.rhs_f for r in forced)
        c2 = max(r.lhs / r.rhs_w0 for r in free)
        out["maxreg_C1"], out["maxreg_C2"] = MAXREG_SAFETY * c1, MAXREG_SAFETY * c2
    return {k: float(v) for k, v in out.items()}


def load_constants(grid: Grid, path=None, compute_missing: bool = True) -> dict:
    key = grid_key(grid)
    p = calibration_path(path)
    if (str(p), key) in _cache:
        return _cache[(str(p), key)]
    table = json.loads(p.read_text()) if p.exists() else {}
    if key not in table:
        if not compute_missing:
            raise KeyError(f"no calibration for {key} in {p}")
        table[key] = compute_constants(grid)
        try:
            write_table(table, p)
        except OSError:
            pass
    _cache[(str(p), key)] = table[key]
    return table[key]


def write_table(table: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(table, indent=2, sort_keys=True) + "\n")
    return path


def regenerate(grids=GRIDS, path=None) -> dict:
    table = {grid_key(make_grid(d, N)): compute_constants(make_grid(d, N)) for d, N in grids}
    write_table(table, calibration_path(path))
    _cache.clear()
    return table
