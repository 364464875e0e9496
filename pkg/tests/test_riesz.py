"""Free-space Riesz convolution: fast path vs direct-sum oracle vs analytic.

The Newtonian potential of the Gaussian e^{-r^2} in 3D is
pi^{3/2} erf(r)/r (value 2 pi at r = 0), derived from the error-function
integral; it anchors the alpha = 2 case.
"""

import math

import numpy as np
import pytest
from scipy.special import erf

import choquard as cq
from conftest import smooth_random_field


def coulomb_of_unit_gaussian(r):
    r = np.asarray(r)
    return np.pi**1.5 * np.where(r > 1e-12, erf(r) / np.maximum(r, 1e-12), 2 / math.sqrt(math.pi))


class TestBuild:
    @pytest.mark.parametrize("alpha", [0.0, -0.5, 3.0, 3.5])
    def test_alpha_out_of_range(self, grid3_small, alpha):
        with pytest.raises(cq.AlphaOutOfRange):
            cq.build_convolver(grid3_small, alpha)

    def test_coulomb_kernel_samples(self):
        # alpha = 2, N = 3: convolving a single-cell density isolates the
        # kernel, which must equal 1/|x - x0| away from the source
        g = cq.GridSpec(3, 4.0, 16)
        conv = cq.build_convolver(g, 2.0)
        dens = np.zeros(g.shape)
        c = g.points_per_axis // 2
        dens[c, c, c] = 1.0 / g.cell_volume  # unit total charge
        pot = cq.riesz_convolve(conv, cq.ScalarField(g, dens)).values
        x = g.axis()
        for idx in ((c + 3, c, c), (c, c + 2, c + 1), (c + 1, c + 1, c + 1)):
            r = math.sqrt(sum((x[i] - x[c]) ** 2 for i in idx))
            assert pot[idx] == pytest.approx(1.0 / r, rel=1e-12)

    def test_refinement_convergence(self):
        # doubling M at fixed extent changes the Gaussian potential < 1e-4
        vals = {}
        for m in (48, 96):
            g = cq.GridSpec(3, 8.0, m)
            rho = cq.gaussian_field(g, 1.5)
            conv = cq.build_convolver(g, 2.0)
            out = cq.riesz_convolve(conv, rho).values
            step = m // 48
            vals[m] = out[::step, ::step, ::step]
        diff = np.max(np.abs(vals[96] - vals[48])) / np.max(np.abs(vals[48]))
        assert diff < 1e-4


class TestConvolve:
    def test_zero_density(self, grid3_small):
        conv = cq.build_convolver(grid3_small, 2.0)
        out = cq.riesz_convolve(conv, cq.zero_field(grid3_small))
        assert np.all(out.values == 0.0)

    def test_grid_mismatch(self, grid3_small):
        conv = cq.build_convolver(grid3_small, 2.0)
        other = cq.GridSpec(3, 8.0, 16)
        with pytest.raises(cq.GridMismatch):
            cq.riesz_convolve(conv, cq.zero_field(other))

    def test_gaussian_erf_formula(self):
        g = cq.GridSpec(3, 9.0, 48)
        f = cq.from_callable(g, lambda x, y, z: np.exp(-(x * x + y * y + z * z)))
        out = cq.riesz_convolve(cq.build_convolver(g, 2.0), f).values
        r = g.radius()
        rel = np.abs(out - coulomb_of_unit_gaussian(r)) / coulomb_of_unit_gaussian(r)
        assert rel[r <= g.half_extent / 2].max() < 2e-3

    def test_linearity(self, grid3_small):
        rng = np.random.default_rng(8)
        conv = cq.build_convolver(grid3_small, 1.7)
        r1 = smooth_random_field(grid3_small, rng)
        r2 = smooth_random_field(grid3_small, rng)
        combo = cq.ScalarField(grid3_small, 1.3 * r1.values - 0.4 * r2.values)
        lhs = cq.riesz_convolve(conv, combo).values
        rhs = 1.3 * cq.riesz_convolve(conv, r1).values - 0.4 * cq.riesz_convolve(conv, r2).values
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(rhs))

    def test_self_adjoint(self, grid3_small):
        rng = np.random.default_rng(9)
        conv = cq.build_convolver(grid3_small, 2.0)
        r1 = smooth_random_field(grid3_small, rng)
        r2 = smooth_random_field(grid3_small, rng)
        lhs = cq.inner(cq.riesz_convolve(conv, r1), r2)
        rhs = cq.inner(r1, cq.riesz_convolve(conv, r2))
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_positivity(self, grid3_small):
        rng = np.random.default_rng(10)
        rho = cq.ScalarField(grid3_small, np.abs(smooth_random_field(grid3_small, rng).values))
        out = cq.riesz_convolve(cq.build_convolver(grid3_small, 2.0), rho).values
        assert out.min() >= -1e-12 * out.max()

    def test_quadratic_form_dilation_exponent(self):
        # <K * u_s, u_s> = e^{-alpha s} <K * u, u> for the mass-preserving
        # dilation u_s; anchors the kernel's homogeneity exponent
        g = cq.GridSpec(3, 10.0, 48)
        alpha = 2.0
        conv = cq.build_convolver(g, alpha)
        u = cq.gaussian_field(g, 1.2)
        base = cq.inner(cq.riesz_convolve(conv, u), u)
        for s in (0.2, -0.2):
            us = cq.dilate(u, s)
            form = cq.inner(cq.riesz_convolve(conv, us), us)
            assert abs(form / (math.exp(-alpha * s) * base) - 1) < 5e-3


class TestOracle:
    @pytest.mark.parametrize(
        "dim,m,L,alpha", [(1, 64, 8.0, 0.5), (2, 24, 6.0, 1.2), (3, 12, 4.0, 2.0)]
    )
    def test_fast_equals_oracle(self, dim, m, L, alpha):
        g = cq.GridSpec(dim, L, m)
        rng = np.random.default_rng(dim)
        rho = cq.ScalarField(g, rng.standard_normal(g.shape))
        fast = cq.riesz_convolve(cq.build_convolver(g, alpha), rho).values
        slow = cq.riesz_convolve_oracle(g, alpha, rho).values
        assert np.max(np.abs(fast - slow)) / np.max(np.abs(slow)) < 1e-8

    def test_zero(self, grid1):
        out = cq.riesz_convolve_oracle(grid1, 0.5, cq.zero_field(grid1))
        assert np.all(out.values == 0.0)

    def test_oracle_gaussian_erf(self):
        g = cq.GridSpec(3, 4.0, 16)
        f = cq.from_callable(g, lambda x, y, z: np.exp(-(x * x + y * y + z * z)))
        out = cq.riesz_convolve_oracle(g, 2.0, f).values
        r = g.radius()
        mask = r <= 2.0
        rel = np.abs(out - coulomb_of_unit_gaussian(r)) / coulomb_of_unit_gaussian(r)
        assert rel[mask].max() < 2e-2  # coarse grid, quadrature-level error

    def test_too_large(self):
        g = cq.GridSpec(3, 4.0, 32)
        with pytest.raises(cq.TooLarge):
            cq.riesz_convolve_oracle(g, 2.0, cq.zero_field(g))
