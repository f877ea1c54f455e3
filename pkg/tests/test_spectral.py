"""Tests for the periodic-box Fourier layer.

The single-mode expected values are hand-derived from the stored-coefficient
convention c_k = fftn(f)/n^3 with ||f||^2 = L^3 sum |c_k|^2:
cos(2 pi k.x / L) has c = 1/2 at +-k, so ||cos|| = sqrt(L^3/2), and
Lambda^s scales that by |k/L|^s while grad scales it by 2 pi |k/L|.
"""

import numpy as np
import pytest

from nsdecay import spectral as sp
from nsdecay.errors import NegativePowerOnNonzeroMean, RepresentationMismatch

L = 4 * np.pi
SQRT_HALF_VOL = 31.499219891444838  # sqrt(L^3/2) for L = 4 pi


def cosine_field(grid, k=(1, 0, 0), phase=0.0):
    x = np.arange(grid.n) * grid.dx
    X = np.meshgrid(x, x, x, indexing="ij")
    arg = 2 * np.pi * sum(k[i] * X[i] for i in range(3)) / grid.box_length
    return sp.Field(grid, np.cos(arg + phase), sp.PHYSICAL)


@pytest.fixture(scope="module")
def grid():
    return sp.make_grid(16, L)


@pytest.fixture(scope="module")
def random_field(grid):
    # Band-limited like every dynamical field: the self-conjugate Nyquist mode
    # has no conjugate partner, so odd multipliers (gradient) are only
    # Hermitian-safe on the dealiased subspace.
    rng = np.random.default_rng(42)
    raw = sp.Field(grid, rng.standard_normal(grid.shape), sp.PHYSICAL)
    return sp.to_physical(sp.dealias(raw))


class TestGrid:
    def test_tables(self, grid):
        assert grid.shape == (16, 16, 16)
        assert grid.dx == pytest.approx(L / 16)
        assert grid.volume == pytest.approx(L ** 3)
        # xi = k/L along each axis, fftfreq ordering
        assert grid.axis_wavenumbers[1] == pytest.approx(1.0 / L)
        assert grid.axis_wavenumbers[-1] == pytest.approx(-1.0 / L)
        assert np.allclose(grid.q2, (2 * np.pi) ** 2 * grid.xi2)
        assert grid.k2_int[2, 3, 1] == 4 + 9 + 1

    def test_validation(self):
        with pytest.raises(ValueError):
            sp.make_grid(15, 1.0)
        with pytest.raises(ValueError):
            sp.make_grid(4, 1.0)
        with pytest.raises(ValueError):
            sp.make_grid(16, -1.0)

    def test_dealias_mask_two_thirds(self, grid):
        # n=16: keep |k| <= 5 (16/3 = 5.33), drop 6..8
        k = np.fft.fftfreq(16, d=1.0 / 16).astype(int)
        for i, ki in enumerate(k):
            expected = abs(ki) <= 16 / 3
            assert grid.dealias_mask[i, 0, 0] == expected

    def test_dealias_mask_symmetric(self, grid):
        m = grid.dealias_mask
        flipped = np.roll(m[::-1, ::-1, ::-1], 1, axis=(0, 1, 2))
        assert np.array_equal(m, flipped)


class TestTransforms:
    def test_roundtrip(self, grid, random_field):
        back = sp.inverse(sp.forward(random_field))
        assert np.max(np.abs(back.data - random_field.data)) < 1e-13

    def test_parseval(self, grid, random_field):
        phys = np.sqrt(grid.cell_volume * np.sum(random_field.data ** 2))
        spec = sp.l2_norm(sp.forward(random_field))
        assert spec == pytest.approx(phys, rel=1e-13)

    def test_representation_guards(self, grid, random_field):
        with pytest.raises(RepresentationMismatch):
            sp.inverse(random_field)
        with pytest.raises(RepresentationMismatch):
            sp.forward(sp.forward(random_field))
        with pytest.raises(RepresentationMismatch):
            sp.Field(grid, random_field.data, "weird")

    def test_single_mode_coefficient(self, grid):
        f = sp.forward(cosine_field(grid))
        assert f.data[1, 0, 0] == pytest.approx(0.5, abs=1e-14)
        assert f.data[-1, 0, 0] == pytest.approx(0.5, abs=1e-14)
        others = f.data.copy()
        others[1, 0, 0] = others[-1, 0, 0] = 0.0
        assert np.max(np.abs(others)) < 1e-14

    def test_mean_value_both_representations(self, grid):
        f = sp.Field(grid, np.full(grid.shape, 0.7), sp.PHYSICAL)
        assert sp.mean_value(f) == pytest.approx(0.7)
        assert sp.mean_value(sp.forward(f)) == pytest.approx(0.7)


class TestNorms:
    def test_cosine_l2(self, grid):
        assert sp.l2_norm(cosine_field(grid)) == pytest.approx(SQRT_HALF_VOL, rel=1e-13)

    def test_vector_norm_sums_components(self, grid):
        f = cosine_field(grid)
        v = sp.VecField(grid, np.stack([f.data, f.data, 0 * f.data]), sp.PHYSICAL)
        assert sp.l2_norm(v) == pytest.approx(np.sqrt(2) * SQRT_HALF_VOL, rel=1e-13)


class TestLambda:
    def test_single_mode_values(self, grid):
        f = cosine_field(grid, k=(1, 0, 0))
        # |xi| = 1/L for this mode
        for s in (0.5, 1.0, 2.0):
            got = sp.l2_norm(sp.lambda_pow(f, s))
            assert got == pytest.approx((1.0 / L) ** s * SQRT_HALF_VOL, rel=1e-12)
        assert sp.l2_norm(sp.lambda_pow(f, 1.0)) == pytest.approx(2.5066282746310007, rel=1e-12)

    def test_identity_at_zero(self, grid, random_field):
        out = sp.lambda_pow(random_field, 0.0)
        assert np.max(np.abs(out.data - random_field.data)) < 1e-13

    def test_composition(self, grid):
        rng = np.random.default_rng(3)
        data = rng.standard_normal(grid.shape)
        f = sp.Field(grid, data - data.mean(), sp.PHYSICAL)
        one = sp.lambda_pow(sp.lambda_pow(f, 0.7), -0.7)
        assert np.max(np.abs(one.data - f.data)) < 1e-11
        a = sp.lambda_pow(sp.lambda_pow(f, 0.4), 0.6)
        b = sp.lambda_pow(f, 1.0)
        assert np.max(np.abs(a.data - b.data)) < 1e-11

    def test_negative_power_needs_zero_mean(self, grid):
        f = sp.Field(grid, np.cos(np.zeros(grid.shape)) * 0.3 + cosine_field(grid).data, sp.PHYSICAL)
        with pytest.raises(NegativePowerOnNonzeroMean):
            sp.lambda_pow(f, -0.5)

    def test_positive_power_kills_mean(self, grid):
        f = sp.Field(grid, np.full(grid.shape, 2.0), sp.PHYSICAL)
        assert sp.l2_norm(sp.lambda_pow(f, 1.0)) == pytest.approx(0.0, abs=1e-13)


class TestDerivatives:
    def test_gradient_single_mode(self, grid):
        f = cosine_field(grid, k=(0, 1, 0))
        g = sp.gradient(f)
        # d/dy cos(2 pi y / L) = -(2 pi / L) sin(...)
        assert sp.l2_norm(g) == pytest.approx(15.749609945722419, rel=1e-12)
        x = np.arange(grid.n) * grid.dx
        expected = -(2 * np.pi / L) * np.sin(2 * np.pi * x / L)
        assert np.max(np.abs(g.data[1][0, :, 0] - expected)) < 1e-13
        assert np.max(np.abs(g.data[0])) < 1e-13

    def test_grad_is_two_pi_lambda(self, grid, random_field):
        got = sp.l2_norm(sp.gradient(random_field))
        assert got == pytest.approx(2 * np.pi * sp.l2_norm(sp.lambda_pow(random_field, 1.0)), rel=1e-13)

    def test_divergence_of_gradient_is_laplacian(self, grid, random_field):
        lap1 = sp.divergence(sp.gradient(sp.forward(random_field)))
        lap2 = sp.laplacian(sp.forward(random_field))
        assert np.max(np.abs(lap1.data - lap2.data)) < 1e-12

    def test_laplacian_single_mode(self, grid):
        f = cosine_field(grid, k=(2, 1, 0))
        lap = sp.laplacian(f)
        q2 = (2 * np.pi / L) ** 2 * 5.0
        assert np.max(np.abs(lap.data + q2 * f.data)) < 1e-12

    def test_jacobian_transpose_symmetry(self, grid):
        rng = np.random.default_rng(5)
        v = sp.VecField(grid, rng.standard_normal((3,) + grid.shape), sp.PHYSICAL)
        J = sp.jacobian(v)
        D = sp.sym_gradient(v)
        assert np.max(np.abs(D.data - np.swapaxes(D.data, 0, 1))) < 1e-14
        assert np.max(np.abs(D.data - 0.5 * (J.data + np.swapaxes(J.data, 0, 1)))) < 1e-14

    def test_frobenius_square(self, grid):
        rng = np.random.default_rng(6)
        v = sp.VecField(grid, rng.standard_normal((3,) + grid.shape), sp.PHYSICAL)
        D = sp.sym_gradient(v)
        fro = sp.tensor_frobenius_sq(D)
        assert np.max(np.abs(fro.data - np.sum(D.data ** 2, axis=(0, 1)))) == 0.0


class TestDealias:
    def test_idempotent(self, grid, random_field):
        once = sp.dealias(sp.forward(random_field))
        twice = sp.dealias(once)
        assert np.array_equal(once.data, twice.data)

    def test_zeros_high_modes_only(self, grid, random_field):
        c = sp.forward(random_field)
        d = sp.dealias(c)
        assert np.all(d.data[~grid.dealias_mask] == 0)
        assert np.array_equal(d.data[grid.dealias_mask], c.data[grid.dealias_mask])


class TestHermitian:
    def test_real_field_is_hermitian(self, grid, random_field):
        assert sp.is_hermitian(sp.forward(random_field))

    def test_broken_symmetry_detected(self, grid):
        c = np.zeros(grid.shape, dtype=complex)
        c[1, 0, 0] = 1.0 + 1.0j
        c[-1, 0, 0] = 1.0 + 1.0j  # should be the conjugate
        assert not sp.is_hermitian(sp.Field(grid, c, sp.SPECTRAL))

    def test_preserved_by_operators(self, grid, random_field):
        f = sp.forward(random_field)
        assert sp.is_hermitian(sp.lambda_pow(f, 1.3))
        assert sp.is_hermitian(sp.gradient(f))
        assert sp.is_hermitian(sp.laplacian(f))
        assert sp.is_hermitian(sp.dealias(f))
