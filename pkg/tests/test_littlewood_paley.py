import numpy as np
import pytest

from nsmlab.calibration import load_constants
from nsmlab.initial import random_field
from nsmlab.littlewood_paley import (
    DyadicBlockSet,
    HeatPropagator,
    SampledForcing,
    agmon_ratio,
    annulus_decay_check,
    bernstein_extremal,
    bernstein_ratio,
    besov_norm,
    chemin_lerner_norm,
    dyadic_block,
    heat_solve,
    heat_step,
    lr_besov_norm,
    maximal_regularity_ratio,
    product_ratio,
    shell_index,
)
from nsmlab.spectral import MeanModeError, NormSpec, SpectralField, hs_norm, l2_norm, make_grid, sobolev_norm

from conftest import single_mode


def scalar(grid, seed):
    u = random_field(grid, seed, divfree=False, spectrum_slope=1.0)
    return SpectralField(grid, u.data[:1])


class TestDyadicBlocks:
    def test_mode_three_in_shell_two(self, g2):
        u = single_mode(g2, (3, 0))
        assert l2_norm(dyadic_block(u, 2)) == pytest.approx(l2_norm(u), rel=1e-15)
        for j in (0, 1, 3):
            assert l2_norm(dyadic_block(u, j)) == 0.0

    def test_shells_partition_lattice(self):
        g = make_grid(3, 16)
        j = shell_index(g)
        k = g.kmag
        nz = k > 0
        assert np.all(2.0 ** (j[nz] - 1) < k[nz] * (1 + 1e-12))
        assert np.all(k[nz] <= 2.0 ** j[nz] * (1 + 1e-12))

    @pytest.mark.parametrize("d,N", [(2, 32), (3, 16)])
    def test_reconstruction(self, d, N):
        g = make_grid(d, N)
        u = random_field(g, 1)
        u = u.with_data(u.data + 0.3 * (np.arange(g.N ** d).reshape(g.shape) == 0))
        total = dyadic_block(u, None).data
        for j in DyadicBlockSet.for_grid(g).indices:
            total = total + dyadic_block(u, j).data
        assert np.max(np.abs(total - u.data)) < 1e-13

    def test_block_idempotent(self, g2):
        u = random_field(g2, 2)
        b = dyadic_block(u, 2)
        assert np.array_equal(dyadic_block(b, 2).data, b.data)


class TestBesov:
    @pytest.mark.parametrize("s", [-1.0, -0.5, 0.5, 1.0, 2.0])
    def test_equivalent_to_sobolev(self, s):
        g = make_grid(3, 16)
        u = random_field(g, 3)
        ratio = besov_norm(u, s, 2) / sobolev_norm(u, NormSpec(s, True))
        assert 2.0 ** -abs(s) <= ratio <= 2.0 ** abs(s)

    def test_single_shell_closed_form(self, g2):
        u = single_mode(g2, (3, 0))
        assert besov_norm(u, 1.0, 1) == pytest.approx(4 * l2_norm(u), rel=1e-14)

    def test_zero_field(self, g2):
        assert besov_norm(SpectralField.zeros(g2), 1.5, 1) == 0.0

    def test_negative_order_needs_zero_mean(self, g2):
        u = random_field(g2, 4)
        u = u.with_data(u.data + (np.arange(g2.N ** 2).reshape(g2.shape) == 0))
        with pytest.raises(MeanModeError):
            besov_norm(u, -1.0, 2)

    def test_normspec_besov_dispatch(self, g2):
        u = random_field(g2, 5)
        assert sobolev_norm(u, NormSpec(1.0, True, besov_q=1)) == besov_norm(u, 1.0, 1)

    def test_chemin_lerner_dominates_for_r_above_q(self):
        # Minkowski: L^r_t(l^1) <= l^1(L^r_t) when r >= q = 1
        g = make_grid(2, 16)
        times = np.linspace(0, 1, 11)
        prop = HeatPropagator(1.0, 0.5, g)
        ws = heat_solve(random_field(g, 6), None, prop, times)
        assert lr_besov_norm(times, ws, 1.0, 1, 2) <= chemin_lerner_norm(times, ws, 1.0, 1, 2) * (1 + 1e-14)


class TestHeatStep:
    def test_unforced_mode_exact(self, g2):
        u = single_mode(g2, (2, 1))
        prop = HeatPropagator(1.5, 0.3, g2)
        out = heat_step(u, None, prop, 0.0, 0.2)
        assert np.max(np.abs(out.data - u.data * np.exp(-0.3 * 5 ** 1.5 * 0.2))) < 1e-16

    def test_constant_forcing_closed_form(self, g2):
        f = single_mode(g2, (2, 0), comp=1)
        prop = HeatPropagator(1.0, 0.7, g2)
        w0 = SpectralField.zeros(g2)
        out = heat_step(w0, lambda t: f, prop, 0.0, 0.3)
        rate = 0.7 * 4.0
        expect = f.data * (1 - np.exp(-rate * 0.3)) / rate
        assert np.max(np.abs(out.data - expect)) < 1e-10

    def test_inviscid_is_time_integral(self, g2):
        f0 = random_field(g2, 7)
        prop = HeatPropagator(1.0, 0.0, g2)
        out = heat_step(SpectralField.zeros(g2), lambda t: f0 * t, prop, 0.5, 0.25)
        expect = f0.data * (0.75 ** 2 - 0.5 ** 2) / 2
        assert np.max(np.abs(out.data - expect)) < 1e-15

    def test_unforced_norms_nonincreasing(self, g3):
        prop = HeatPropagator(0.75, 1.0, g3)
        ws = heat_solve(random_field(g3, 8), None, prop, np.linspace(0, 2, 21))
        for s in (-1.0, 0.0, 1.0, 3.0):
            n = [hs_norm(w, s, homogeneous=True) for w in ws]
            assert np.all(np.diff(n) <= 1e-15 * n[0])

    def test_rejects_nonpositive_dt(self, g2):
        with pytest.raises(ValueError):
            heat_step(SpectralField.zeros(g2), None, HeatPropagator(1, 1, g2), 0.0, 0.0)

    def test_sampled_forcing_cubic_exact(self, g2):
        f0 = random_field(g2, 9)
        times = np.linspace(0, 1, 7)
        sf = SampledForcing(times, [f0 * (t ** 3 - t) for t in times])
        t = 0.4321
        assert np.max(np.abs(sf(t).data - f0.data * (t ** 3 - t))) < 1e-14


class TestAnnulusDecay:
    def test_time_zero(self, g2):
        u = single_mode(g2, (3, 1))
        r = annulus_decay_check(u, HeatPropagator(1.0, 1.0, g2), 0.0)
        assert r.lhs == pytest.approx(l2_norm(u)) and r.passed

    def test_single_mode_envelope(self, g2):
        u = single_mode(g2, (2, 0))
        r = annulus_decay_check(u, HeatPropagator(1.0, 1.0, g2), 1.0)
        assert r.lhs == pytest.approx(np.exp(-4) * l2_norm(u), rel=1e-14)
        assert r.envelope == pytest.approx(np.exp(-1) * l2_norm(u), rel=1e-14)
        assert r.passed

    def test_zero_field(self, g2):
        r = annulus_decay_check(SpectralField.zeros(g2), HeatPropagator(1.0, 1.0, g2), 1.0)
        assert r.lhs == 0.0 and r.passed

    def test_rejects_multi_shell(self, g2):
        u = single_mode(g2, (1, 0)) + single_mode(g2, (3, 0))
        with pytest.raises(ValueError):
            annulus_decay_check(u, HeatPropagator(1.0, 1.0, g2), 1.0)


PARAMS = dict(alpha=1.5, nu=1.0, delta0=0.0, m=2, r=2, q=1)


class TestMaximalRegularity:
    def test_zero_data(self, g3):
        times = np.linspace(0, 0.5, 6)
        z = SpectralField.zeros(g3)
        r = maximal_regularity_ratio(z, (times, [z] * 6), PARAMS, 0.5)
        assert r.lhs == 0.0 and r.ratio == 0.0

    def test_free_single_mode_closed_form(self, g3):
        T = 0.5
        times = np.linspace(0, T, 4001)
        w0 = single_mode(g3, (1, 1, 0))
        z = SpectralField.zeros(g3)
        r = maximal_regularity_ratio(w0, (times, [z] * len(times)), PARAMS, T)
        lam, m = 2.0 ** 1.5, 2
        j = 1  # |k| = sqrt 2 lies in shell 1
        sreg = 2 * 1.5 + 2 * 1.5 / m
        expect = 2.0 ** (j * sreg) * l2_norm(w0) * ((1 - np.exp(-m * lam * T)) / (m * lam)) ** (1 / m)
        assert r.lhs == pytest.approx(expect, rel=1e-5)
        assert r.rhs_w0 == pytest.approx(2.0 ** (j * 3.0) * l2_norm(w0), rel=1e-14)
        assert np.isfinite(r.ratio)

    def test_rejects_bad_exponents(self, g3):
        z = SpectralField.zeros(g3)
        with pytest.raises(ValueError):
            maximal_regularity_ratio(z, ([0, 1], [z, z]), dict(PARAMS, r=3), 1.0)

    def test_rejects_mean(self, g3):
        w0 = SpectralField(g3, np.ones((3,) + g3.shape, dtype=complex))
        z = SpectralField.zeros(g3)
        with pytest.raises(MeanModeError):
            maximal_regularity_ratio(w0, ([0, 1], [z, z]), PARAMS, 1.0)


class TestCalibratedInequalities:
    @pytest.mark.parametrize("N", [16, 32])
    def test_bernstein_stable_across_shells(self, N):
        g = make_grid(2, N)
        C = load_constants(g)["bernstein"]
        for j in DyadicBlockSet.for_grid(g, g.kmax).indices:
            if j >= 1:
                assert abs(bernstein_ratio(bernstein_extremal(g, j), j) / C - 1) <= 0.2

    def test_bernstein_bound_on_random_shell_fields(self):
        g = make_grid(2, 32)
        C = load_constants(g)["bernstein"]
        for seed in range(10):
            u = SpectralField(g, random_field(g, seed, divfree=False).data[:1])
            for j in (2, 3, 4):
                assert bernstein_ratio(dyadic_block(u, j), j) <= 2 * C

    @pytest.mark.parametrize("N", [16, 32])
    def test_product_rule(self, N):
        g = make_grid(2, N)
        C = load_constants(g)["product"]
        fs = [scalar(g, s) for s in range(20)]
        assert max(product_ratio(f, h) for f, h in zip(fs, fs[1:])) <= 2 * C

    @pytest.mark.parametrize("N", [16, 32])
    def test_agmon(self, N):
        g = make_grid(2, N)
        C = load_constants(g)["agmon"]
        assert max(agmon_ratio(scalar(g, s)) for s in range(20)) <= 2 * C
