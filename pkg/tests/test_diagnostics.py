import warnings

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from nsmlab.calibration import CAL_SEEDS, load_constants, scalar_field
from nsmlab.diagnostics import (
    CSV_COLUMNS,
    ball_energy,
    bgw_monitor,
    energy_report,
    energy_residual,
    fit_decay_rate,
    fit_power_law,
    g_schedule,
    g_squared_schedule,
    helicity,
    helicity_rate_mismatch,
    log_gronwall_bound,
    neg_sobolev_norm,
    vector_potential,
    velocity_split,
)
from nsmlab.initial import beltrami, random_field
from nsmlab.spectral import (
    MeanModeError,
    SpectralField,
    curl,
    hs_norm,
    inner,
    l2_norm,
    make_grid,
    to_physical,
    to_spectral,
)
from nsmlab.systems import PhysParams, PlasmaState, System
from nsmlab.timestepping import StepperConfig, integrate

from conftest import random_state, single_mode


class TestEnergyReport:
    def test_zero_state(self, g3):
        z = SpectralField.zeros(g3)
        r = energy_report(PlasmaState(0.0, z, z, z), PhysParams())
        assert all(x == 0 for x in (r.energy_total, r.diss_visc, r.diss_ohmic, r.l2_v, r.l2_E, r.l2_B,
                                    r.hs_v, r.linf_B))

    def test_single_mode_viscous_dissipation(self, g2):
        v = single_mode(g2, (2, 1), comp=2, amp=0.7)
        z = SpectralField.zeros(g2)
        r = energy_report(PlasmaState(0.0, v, z, z), PhysParams(nu=0.3, alpha=0.75))
        assert r.diss_visc == pytest.approx(0.3 * 5 ** 0.75 * 2 * r.energy_total, rel=1e-14)

    def test_row_matches_schema(self, g3):
        r = energy_report(random_state(g3, 1), PhysParams())
        assert len(r.row()) == len(CSV_COLUMNS) and r.row()[0] == 0.0
        assert r.helicity is not None and r.ball_energy is None

    def test_missing_fields_are_none(self, g3):
        r = energy_report(random_state(g3, 2, with_E=False), PhysParams(system=System.HMHD))
        assert r.l2_E is None and r.hs_E is None

    def test_energy_closure_along_nsm(self):
        g = make_grid(2, 32)
        tr = integrate(random_state(g, 3, amp=0.5), PhysParams(nu=0.1), StepperConfig(dt=0.005, t_end=0.5))
        assert energy_residual(tr.records) < 1e-8

    def test_free_maxwell_conserves_energy(self):
        g = make_grid(2, 16)
        st = random_state(g, 4, with_v=False)
        tr = integrate(st, PhysParams(system=System.MAXWELL_FREE), StepperConfig(dt=0.0025, t_end=1.0))
        e = tr.series("energy_total")
        assert np.max(np.abs(e - e[0])) < 1e-10 * e[0]


class TestHelicity:
    def test_beltrami(self):
        g = make_grid(3, 16)
        h = helicity(beltrami(g, 1, axis=2))
        assert h == pytest.approx(-(2 * np.pi) ** 3, rel=1e-13)
        assert h == pytest.approx(-248.0502, abs=1e-4)

    def test_planar_field(self, g3):
        vals = np.zeros((3,) + g3.shape)
        vals[0] = np.sin(g3.x[1])
        assert abs(helicity(to_spectral(g3, vals))) < 1e-13

    def test_point_reflection_flips_sign(self, g3):
        B = random_field(g3, 5)
        idx = [(-np.arange(g3.N)) % g3.N] * 3
        vals = to_physical(B)
        mirrored = -vals[:, idx[0]][:, :, idx[1]][:, :, :, idx[2]]
        Bm = to_spectral(g3, mirrored, divfree=True)
        h = helicity(B)
        assert abs(helicity(Bm) + h) < 1e-12 * abs(h)

    def test_vector_potential(self, g3):
        B = random_field(g3, 6)
        A = vector_potential(B)
        assert np.max(np.abs(curl(A).data - B.data)) < 1e-14

    def test_needs_zero_mean(self, g3):
        B = SpectralField(g3, np.ones((3,) + g3.shape, dtype=complex))
        with pytest.raises(MeanModeError):
            helicity(B)

    def test_two_dimensional_rejected(self, g2):
        with pytest.raises(ValueError):
            helicity(random_field(g2, 0))

    def test_rate_identity_along_nsm(self):
        g = make_grid(3, 8)
        st = random_state(g, 7, amp=0.5)
        p = PhysParams(sigma=3.0, alpha=1.5)
        # centered differences: the mismatch shrinks with the record interval squared
        tr = integrate(st, p, StepperConfig(dt=5e-4, t_end=0.02))
        assert helicity_rate_mismatch(tr.records, p.sigma) < 1e-6


class TestNegativeNorm:
    def test_single_mode(self, g2):
        u = single_mode(g2, (2, 0))
        assert neg_sobolev_norm(u, -1.0) == pytest.approx(0.5 * l2_norm(u), rel=1e-14)

    def test_zero_field(self, g2):
        assert neg_sobolev_norm(SpectralField.zeros(g2), -0.5) == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_duality(self, g3, seed):
        u, w = random_field(g3, seed), random_field(g3, seed + 50, spectrum_slope=-1.0)
        assert abs(inner(u, w)) <= neg_sobolev_norm(u, -1.0) * hs_norm(w, 1.0, homogeneous=True) * (1 + 1e-12)

    def test_requires_negative_order(self, g2):
        with pytest.raises(ValueError):
            neg_sobolev_norm(random_field(g2, 0), 0.5)


class TestBallEnergy:
    def test_full_ball(self, g3):
        st = random_state(g3, 8)
        assert ball_energy(st, g3.kmax * 2) == pytest.approx(l2_norm(st.v) ** 2 + l2_norm(st.B) ** 2, rel=1e-14)

    def test_sub_lattice_ball(self, g3):
        st = random_state(g3, 9)
        v = st.v.with_data(st.v.data.copy())
        v.data[(slice(None), 0, 0, 0)] = (0.1, 0.2, 0.0)
        st = st.replace(v=v)
        assert ball_energy(st, 0.5) == pytest.approx(g3.vol * 0.05, rel=1e-14)

    def test_monotone_in_radius(self, g3):
        st = random_state(g3, 10)
        e = [ball_energy(st, r) for r in np.linspace(0, 6, 25)]
        assert np.all(np.diff(e) >= 0)

    def test_schedule_at_time_zero(self):
        assert g_squared_schedule(0.0, 2, 1.0, 1.0) == pytest.approx(1 / (2 * np.e), rel=1e-15)
        assert g_schedule(0.0, 2, 1.0, 1.0) ** 2 == pytest.approx(1 / (2 * np.e), rel=1e-15)


def _nsm_run(v0, B0, E0, t_end=0.2, dt=0.005):
    st = PlasmaState(0.0, v0, B0, E0)
    return integrate(st, PhysParams(nu=0.5, alpha=1.0), StepperConfig(dt=dt, t_end=t_end))


class TestVelocitySplit:
    def test_no_lorentz_force(self):
        g = make_grid(2, 16)
        z = SpectralField.zeros(g)
        vs = velocity_split(_nsm_run(random_field(g, 11, 0.5), z, z), PhysParams(nu=0.5, alpha=1.0))
        assert vs.residual < 1e-6
        assert max(np.max(np.abs(w.data)) for w in vs.v2) == 0

    def test_zero_initial_velocity(self):
        g = make_grid(2, 16)
        z = SpectralField.zeros(g)
        tr = _nsm_run(z, random_field(g, 12, 0.5), random_field(g, 13, 0.3))
        vs = velocity_split(tr, PhysParams(nu=0.5, alpha=1.0))
        assert np.max(np.abs(vs.v1[0].data)) == 0
        assert vs.residual < 1e-4

    def test_generic_small_data(self):
        g = make_grid(2, 16)
        st = random_state(g, 14, amp=0.3)
        vs = velocity_split(_nsm_run(st.v, st.B, st.E), PhysParams(nu=0.5, alpha=1.0))
        assert vs.residual < 1e-4 and not vs.sparse

    def test_sparse_records_warn(self):
        g = make_grid(2, 16)
        st = random_state(g, 15, amp=0.3)
        tr = integrate(st, PhysParams(nu=0.5), StepperConfig(dt=0.05, t_end=0.1))
        with pytest.warns(UserWarning):
            velocity_split(tr, PhysParams(nu=0.5))

    def test_rejects_mhd(self, g2):
        with pytest.raises(ValueError):
            velocity_split(None, PhysParams(system=System.HMHD))


class TestFits:
    def test_square_law(self):
        r = fit_power_law([(1, 1), (2, 4), (4, 16)])
        assert r.exponent == pytest.approx(2.0, abs=1e-14) and r.residual < 1e-14

    def test_constant(self):
        assert fit_power_law([(1, 3.0), (2, 3.0), (4, 3.0)]).exponent == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("bad", [[(1, 1), (2, 2)], [(0, 1), (1, 1), (2, 2)], [(1, -1), (2, 1), (3, 1)]])
    def test_rejects_bad_samples(self, bad):
        with pytest.raises(ValueError):
            fit_power_law(bad)

    def test_decay_rate(self):
        t = np.linspace(0, 3, 7)
        assert fit_decay_rate(t, 2.0 * np.exp(-0.7 * t)).exponent == pytest.approx(0.7, rel=1e-12)


class TestBGW:
    def test_single_mode_finite(self, g2):
        r = bgw_monitor(single_mode(g2, (1, 2)), 1.5)
        assert np.isfinite(r.ratio) and r.ratio > 0

    def test_scale_invariant(self, g2):
        u = random_field(g2, 16)
        assert abs(bgw_monitor(u * 10, 1.5).ratio - bgw_monitor(u, 1.5).ratio) < 1e-12

    @pytest.mark.parametrize("d,N", [(2, 16), (2, 32), (3, 16)])
    def test_ensemble_below_calibrated_bound(self, d, N):
        g = make_grid(d, N)
        C = load_constants(g)["bgw"]
        seeds = [s for s in range(20) if s not in CAL_SEEDS]
        assert max(bgw_monitor(scalar_field(g, s), d / 2).ratio for s in seeds) <= 2 * C

    def test_rejects_small_exponent(self, g3):
        with pytest.raises(ValueError):
            bgw_monitor(random_field(g3, 0), 0.5)


class TestLogGronwall:
    def test_no_growth(self):
        assert log_gronwall_bound(2.0, 0.0, 0.0, 1.5) == pytest.approx(3.5, rel=1e-15)

    def test_plug_in(self):
        assert log_gronwall_bound(0.0, 1.0, 0.0, 1.0) == pytest.approx(np.e, rel=1e-15)

    def test_reference_ode_below_bound(self):
        sol = solve_ivp(lambda t, y: y * np.log1p(y), (0, 2), [0.5], rtol=1e-10, atol=1e-12, dense_output=True)
        for t in np.linspace(0, 2, 21):
            assert sol.sol(t)[0] <= log_gronwall_bound(0.5, 0.0, t, 1.0) * (1 + 1e-9)

    def test_rejects_alpha_below_one(self):
        with pytest.raises(ValueError):
            log_gronwall_bound(0, 0, 0, 0.5)
