import numpy as np
import pytest

from nsmlab.initial import random_field
from nsmlab.oracles import PointwiseOracle
from nsmlab.spectral import (
    GridError,
    MeanModeError,
    NormSpec,
    SpectralField,
    curl,
    dealiased_product,
    divergence,
    divergence_defect,
    fractional_laplacian,
    gradient,
    hermitian_defect,
    hs_norm,
    inner,
    l2_norm,
    leray_project,
    make_grid,
    physical_l2_norm,
    sobolev_norm,
    to_physical,
    to_spectral,
    transform,
    truncate,
)

from conftest import single_mode


def coeff(u, comp, k):
    g = u.grid
    idx = tuple(int(ki) % g.N for ki in k) + (0,) * (g.d - len(k))
    return u.data[(comp,) + idx]


def scalar_mode(grid, k, amp=1.0):
    data = np.zeros((1,) + grid.shape, dtype=complex)
    idx = tuple(int(ki) % grid.N for ki in k)
    neg = tuple(int(-ki) % grid.N for ki in k)
    data[(0,) + idx] += amp
    data[(0,) + neg] += np.conj(amp)
    return SpectralField(grid, data)


class TestGrid:
    def test_frequency_ordering(self):
        g = make_grid(2, 8)
        assert list(g.freqs) == [0, 1, 2, 3, -4, -3, -2, -1]

    def test_kmax_two_thirds(self):
        assert make_grid(3, 16).kmax == pytest.approx(5.0)
        assert make_grid(2, 32, 4 * np.pi).kmax == pytest.approx(0.5 * 10)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            make_grid(2, 12)

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError):
            make_grid(4, 8)

    def test_mixing_grids_is_an_error(self):
        a = SpectralField.zeros(make_grid(2, 8))
        b = SpectralField.zeros(make_grid(2, 16))
        with pytest.raises(GridError):
            a + b


class TestTransform:
    def test_constant_field_is_mean_mode(self):
        g = make_grid(2, 8)
        vals = np.zeros((3,) + g.shape)
        vals[0] = 1.0
        u = transform(vals, "forward", g)
        assert coeff(u, 0, (0, 0)) == pytest.approx(1.0)
        assert np.count_nonzero(np.abs(u.data) > 1e-15) == 1

    def test_sine_matches_direct_dft(self):
        g = make_grid(2, 8)
        x = g.x
        vals = np.zeros((3,) + g.shape)
        vals[0] = np.sin(x[0])
        u = to_spectral(g, vals)
        # direct summation: (1/N^2) sum f(x) exp(-i k.x)
        ref = np.zeros(g.shape, dtype=complex)
        for a in range(8):
            for b in range(8):
                k = (g.freqs[a], g.freqs[b])
                ref[a, b] = np.mean(vals[0] * np.exp(-1j * (k[0] * x[0] + k[1] * x[1])))
        assert np.max(np.abs(u.data[0] - ref)) < 1e-15
        assert coeff(u, 0, (1, 0)) == pytest.approx(-0.5j)
        assert coeff(u, 0, (-1, 0)) == pytest.approx(0.5j)

    @pytest.mark.parametrize("d,N", [(2, 8), (2, 32), (3, 16)])
    def test_roundtrip(self, d, N):
        g = make_grid(d, N)
        vals = np.random.default_rng(1).uniform(-1, 1, (3,) + g.shape)
        assert np.max(np.abs(transform(transform(vals, "forward", g), "inverse") - vals)) < 1e-12

    @pytest.mark.parametrize("d,N", [(2, 16), (3, 8)])
    def test_parseval(self, d, N):
        g = make_grid(d, N)
        vals = np.random.default_rng(2).standard_normal((3,) + g.shape)
        u = to_spectral(g, vals)
        assert abs(l2_norm(u) - physical_l2_norm(vals, g)) < 1e-12 * l2_norm(u)

    def test_real_data_is_hermitian(self, g3):
        u = to_spectral(g3, np.random.default_rng(3).standard_normal((3,) + g3.shape))
        assert hermitian_defect(u) < 1e-13


class TestFractionalLaplacian:
    def test_alpha_zero_is_identity(self, g2):
        u = random_field(g2, 4)
        assert np.array_equal(fractional_laplacian(u, 0.0).data, u.data)

    def test_unit_wavenumber(self, g2):
        u = single_mode(g2, (1, 0))
        assert np.allclose(fractional_laplacian(u, 1.0).data, u.data, atol=1e-15)

    def test_closed_form_multiplier(self, g2):
        u = single_mode(g2, (2, 1), comp=2)
        out = fractional_laplacian(u, 1.5)
        assert coeff(out, 2, (2, 1)) / coeff(u, 2, (2, 1)) == pytest.approx(5 ** 1.5, rel=1e-14)
        assert 5 ** 1.5 == pytest.approx(11.18034, abs=1e-5)


class TestLeray:
    def test_gradient_annihilated(self, g3):
        phi = random_field(g3, 5, divfree=False)
        phi = SpectralField(g3, phi.data[:1])
        out = leray_project(gradient(phi))
        assert np.max(np.abs(out.data)) < 1e-15

    def test_idempotent_on_range(self, g3):
        u = random_field(g3, 6)
        assert np.max(np.abs(leray_project(u).data - u.data)) < 1e-13 * np.max(np.abs(u.data))

    def test_random_output_divergence_free(self):
        g = make_grid(3, 16)
        u = to_spectral(g, np.random.default_rng(7).standard_normal((3,) + g.shape))
        assert divergence_defect(leray_project(u)) < 1e-12

    @pytest.mark.parametrize("d,N", [(2, 8), (2, 16), (2, 32), (3, 8), (3, 16)])
    def test_self_adjoint(self, d, N):
        g = make_grid(d, N)
        rng = np.random.default_rng(8)
        a = to_spectral(g, rng.standard_normal((3,) + g.shape))
        b = to_spectral(g, rng.standard_normal((3,) + g.shape))
        lhs, rhs = inner(leray_project(a), b), inner(a, leray_project(b))
        assert abs(lhs - rhs) < 1e-12 * l2_norm(a) * l2_norm(b)
        pa = leray_project(a)
        assert np.max(np.abs(leray_project(pa).data - pa.data)) < 1e-13


class TestCurl:
    def test_constant_field(self, g2):
        vals = np.ones((3,) + g2.shape)
        assert np.max(np.abs(curl(to_spectral(g2, vals)).data)) < 1e-16

    def test_two_and_a_half_d(self, g2):
        x = g2.x
        vals = np.zeros((3,) + g2.shape)
        vals[2] = np.sin(x[0])
        out = to_physical(curl(to_spectral(g2, vals)))
        expect = np.zeros_like(vals)
        expect[1] = -np.cos(x[0])
        assert np.max(np.abs(out - expect)) < 1e-14

    def test_beltrami_eigenfield(self, g3):
        x = g3.x
        vals = np.zeros((3,) + g3.shape)
        vals[0], vals[1] = np.cos(x[2]), np.sin(x[2])
        B = to_spectral(g3, vals)
        assert np.max(np.abs(curl(B).data + B.data)) < 1e-15

    def test_div_curl_and_curl_grad_vanish(self, g3):
        u = to_spectral(g3, np.random.default_rng(9).standard_normal((3,) + g3.shape))
        assert np.max(np.abs(divergence(curl(u)).data)) < 1e-13
        phi = SpectralField(g3, u.data[:1])
        assert np.max(np.abs(curl(gradient(phi)).data)) < 1e-13


class TestDealiasedProduct:
    def test_self_cross_vanishes(self, g3):
        a = random_field(g3, 10)
        assert np.max(np.abs(dealiased_product(a, a, "cross").data)) < 1e-16

    def test_constant_advection(self, g2):
        c0 = np.array([0.3, -0.7, 0.2])
        vals = np.zeros((3,) + g2.shape)
        for i in range(3):
            vals[i] = c0[i]
        a = to_spectral(g2, vals)
        b = single_mode(g2, (2, 1), comp=1)
        out = dealiased_product(a, b, "advection")
        mult = 1j * (c0[0] * g2.k[0] + c0[1] * g2.k[1])
        assert np.max(np.abs(out.data - mult * b.data)) < 1e-14

    def test_cross_of_modes_lands_on_sum_and_difference(self):
        g = make_grid(2, 8)
        a = single_mode(g, (1, 0), comp=1)
        b = single_mode(g, (0, 1), comp=0)
        out = dealiased_product(a, b, "cross")
        nz = {tuple(int(g.freqs[i]) for i in idx) for idx in zip(*np.nonzero(np.abs(out.data).sum(0) > 1e-14))}
        assert nz == {(1, 1), (-1, -1), (1, -1), (-1, 1)}

    @pytest.mark.parametrize("kind", ["cross", "advection", "dot"])
    @pytest.mark.parametrize("d", [2, 3])
    def test_matches_summation_oracle(self, kind, d):
        g = make_grid(d, 8)
        a, b = random_field(g, 11), random_field(g, 12)
        o = PointwiseOracle(g)
        ref = {"cross": o.cross, "advection": o.advect, "dot": o.dot}[kind](a, b, g.kmax)
        out = dealiased_product(a, b, kind)
        assert np.max(np.abs(out.data - ref.data)) < 1e-12 * max(1.0, np.max(np.abs(ref.data)))

    @pytest.mark.parametrize("d,N", [(2, 8), (2, 16), (2, 32), (3, 8), (3, 16)])
    def test_advection_skew_symmetric(self, d, N):
        g = make_grid(d, N)
        a, b = random_field(g, 13), random_field(g, 14, amplitude=2.0)
        val = inner(dealiased_product(a, b, "advection"), b)
        assert abs(val) < 1e-11 * l2_norm(a) * l2_norm(b) ** 2

    def test_unknown_kind(self, g2):
        a = random_field(g2, 0)
        with pytest.raises(ValueError):
            dealiased_product(a, a, "wedge")


class TestTruncate:
    def test_large_radius_is_identity(self, g2):
        u = random_field(g2, 15)
        assert np.array_equal(truncate(u, 100).data, u.data)

    def test_zero_radius_keeps_mean(self, g2):
        vals = np.random.default_rng(0).standard_normal((3,) + g2.shape)
        u = to_spectral(g2, vals)
        t = truncate(u, 0)
        assert np.count_nonzero(np.abs(t.data).sum(0)) == 1
        assert np.allclose(t.mean(), vals.mean(axis=(1, 2)))

    def test_tail_estimate(self):
        g = make_grid(3, 16)
        u = to_spectral(g, np.random.default_rng(16).standard_normal((3,) + g.shape))
        lhs = hs_norm(truncate(u, 4) - u, 0.0)
        rhs = 4.0 ** -1 * hs_norm(u, 1.0)
        assert lhs <= rhs


class TestSobolevNorm:
    def test_zero_field(self, g2):
        z = SpectralField.zeros(g2)
        for s in (-1.0, 0.0, 2.5):
            assert sobolev_norm(z, NormSpec(s, s < 0)) == 0.0

    def test_single_shell_homogeneous(self, g2):
        u = single_mode(g2, (2, 0))
        assert sobolev_norm(u, NormSpec(1.0, True)) == pytest.approx(2 * l2_norm(u), rel=1e-14)

    def test_h0_is_l2(self, g3):
        u = random_field(g3, 17)
        assert abs(hs_norm(u, 0.0) - l2_norm(u)) < 1e-13 * l2_norm(u)

    def test_negative_order_needs_zero_mean(self, g2):
        vals = np.ones((3,) + g2.shape)
        with pytest.raises(MeanModeError):
            sobolev_norm(to_spectral(g2, vals), NormSpec(-1.0, True))

    def test_normspec_validation(self):
        with pytest.raises(ValueError):
            NormSpec(np.inf)
        with pytest.raises(ValueError):
            NormSpec(1.0, besov_q=0.5)

    @pytest.mark.parametrize("seed", range(5))
    def test_interpolation_inequality(self, seed):
        g = make_grid(2, 32)
        u = random_field(g, seed)
        s1, s2 = 1.0, 2.0
        lhs = sobolev_norm(u, NormSpec(s1, True))
        rhs = l2_norm(u) ** (1 - s1 / s2) * sobolev_norm(u, NormSpec(s2, True)) ** (s1 / s2)
        assert lhs <= rhs * (1 + 1e-12)
