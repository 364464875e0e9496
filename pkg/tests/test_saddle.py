"""Supercritical fiber min-max: geometry, fiber maximization, saddle solves.

Solve-level tests run the p = q = 3, mu = 60 family on small 3D grids where
the solution widths (0.8 - 1.9 across the tested masses) stay resolved.
"""

import math
import warnings

import numpy as np
import pytest

import choquard as cq


SUP = dict(dim=3, alpha=2.0, p=3.0, q=3.0, mu1=60.0, mu2=60.0, xi=1.0, eta=1.0)
SOPTS = cq.SaddleOptions(max_iters=300, grad_tol=2e-5, pohozaev_rel_tol=1e-6)


def sup_params(beta0=0.015, **kw):
    return cq.ModelParams(**{**SUP, **kw}, coupling=cq.CouplingSpec("constant", beta0))


@pytest.fixture(scope="module")
def grid32():
    return cq.GridSpec(3, 10.0, 32)


@pytest.fixture(scope="module")
def grid48():
    # solve-level tests need the cubed density spectrally resolved; M=32 is
    # below the fiber solver's resolution floor at mu = 60
    return cq.GridSpec(3, 10.0, 48)


@pytest.fixture(scope="module")
def saddle_report(grid48):
    bump = cq.gaussian_field(grid48, 1.2, mass=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return cq.mountain_pass_solve(sup_params(), cq.StatePair(bump, bump.copy()), SOPTS)


class TestGeometry:
    def test_thresholds_and_separation(self, grid32):
        geo = cq.check_geometry(sup_params(), grid32)
        assert geo.k2 > geo.k1 > 0
        assert geo.inf_barrier_estimate > 0
        assert geo.sup_well_estimate < geo.inf_barrier_estimate
        assert geo.separated
        assert geo.inf_barrier_estimate >= geo.analytic_barrier_lower_bound - 1e-12

    def test_beta_too_large(self, grid32):
        geo = cq.check_geometry(sup_params(), grid32)
        with pytest.raises(cq.BetaTooLarge):
            cq.check_geometry(sup_params(beta0=2.0 * geo.beta_bound), grid32)

    def test_requires_supercritical(self, grid32):
        params = cq.ModelParams(
            dim=3, alpha=2.0, p=2.0, q=2.0, mu1=1.0, mu2=1.0, xi=1.0, eta=1.0
        )
        with pytest.raises(cq.NotSupercritical):
            cq.check_geometry(params, grid32)

    def test_requires_equal_exponents(self, grid32):
        params = cq.ModelParams(
            dim=3, alpha=2.0, p=3.0, q=3.2, mu1=1.0, mu2=1.0, xi=1.0, eta=1.0
        )
        with pytest.raises(cq.NotSupercritical):
            cq.check_geometry(params, grid32)

    def test_rejects_potentials(self, grid32):
        params = cq.ModelParams(**SUP, v1=cq.PotentialSpec("harmonic", stiffness=1.0))
        with pytest.raises(cq.ModeMismatch):
            cq.check_geometry(params, grid32)


class TestFiberMaximize:
    def test_interior_max_dominates_origin(self, grid32):
        params = sup_params()
        state = cq.StatePair(
            cq.gaussian_field(grid32, 1.3, mass=1.0), cq.gaussian_field(grid32, 1.1, mass=1.0)
        )
        s_star, value = cq.fiber_maximize(state, params)
        assert value >= cq.fiber_energy(state, params, 0.0)
        assert SOPTS.s_min < s_star < SOPTS.s_max

    def test_asymptotics(self, grid32):
        beta0 = 0.015
        params = sup_params(beta0)
        u = cq.gaussian_field(grid32, 1.2, mass=1.0)
        state = cq.StatePair(u, u.copy())
        assert cq.fiber_energy(state, params, 3.0) < cq.fiber_energy(state, params, 0.0)
        limit = -beta0 * cq.inner(u, u)
        assert cq.fiber_energy(state, params, -5.0) == pytest.approx(limit, rel=1e-2)

    def test_zero_state_rejected(self, grid32):
        params = sup_params()
        state = cq.StatePair(cq.zero_field(grid32), cq.zero_field(grid32))
        with pytest.raises(cq.ZeroMass):
            cq.fiber_maximize(state, params)

    def test_no_interior_max_for_flat_profile(self, grid32):
        # a near-constant profile has vanishing kinetic term: the fiber
        # maximum escapes every bracket toward -inf
        params = sup_params(beta0=0.0)
        vol = (2 * grid32.half_extent) ** 3
        vals = np.full(grid32.shape, 1.0 / math.sqrt(vol))
        vals[0, 0, 0] *= 1.0 + 1e-9  # not exactly constant
        state = cq.StatePair(
            cq.ScalarField(grid32, vals), cq.ScalarField(grid32, vals.copy())
        )
        with pytest.raises(cq.NoInteriorMax):
            cq.fiber_maximize(state, params)


class TestKineticIdentity:
    def test_assembled_identity(self, grid32):
        # 2 p dp E - dE/ds|_0 = (p dp - 1) K - int (2 p dp beta + x.grad beta) uv
        params = cq.ModelParams(
            **SUP, coupling=cq.CouplingSpec("rational_decay", 0.01, 2.0 / 3.0)
        )
        conv = cq.build_convolver(grid32, 2.0)
        rng = np.random.default_rng(17)
        from conftest import smooth_random_nonneg
        from choquard.model import coupling_values, coupling_x_grad_values

        for _ in range(5):
            u = smooth_random_nonneg(grid32, rng)
            v = smooth_random_nonneg(grid32, rng)
            s = cq.StatePair(u, v)
            bd = cq.energy_total(s, params, conv)
            poh = cq.pohozaev_residual(s, params, conv)
            pdp = params.p * params.delta_p
            lhs = 2 * pdp * bd.total - poh
            beta = coupling_values(params.coupling, grid32)
            xgb = coupling_x_grad_values(params.coupling, grid32)
            combo = 2 * pdp * beta + xgb
            k = bd.grad_sq_u + bd.grad_sq_v
            rhs = (pdp - 1) * k - grid32.cell_volume * np.sum(combo * u.values * v.values)
            assert lhs == pytest.approx(rhs, rel=1e-8)


class TestMountainPass:
    def test_level_positive_and_certified(self, saddle_report, grid48):
        rep = saddle_report
        geo = cq.check_geometry(sup_params(), grid48)
        assert rep.converged
        assert rep.energy.total > 0.0
        assert rep.energy.total >= geo.inf_barrier_estimate
        kin = rep.energy.grad_sq_u + rep.energy.grad_sq_v
        assert kin >= geo.k1

    def test_multipliers_positive(self, saddle_report):
        assert saddle_report.multipliers.lambda1 > 0
        assert saddle_report.multipliers.lambda2 > 0

    def test_pohozaev_and_identity_gap(self, saddle_report):
        kin = saddle_report.energy.grad_sq_u + saddle_report.energy.grad_sq_v
        assert abs(saddle_report.residuals["pohozaev"]) < 1e-5 * kin
        assert saddle_report.residuals["multiplier_identity_gap"] < 1e-4

    def test_positive_radial_profile(self, saddle_report):
        u = saddle_report.state.u
        assert u.values.min() > -1e-8
        _, prof = cq.radial_profile(u)
        assert np.all(np.diff(prof) <= 1e-8)

    def test_monotone_merit_trace(self, saddle_report):
        tr = saddle_report.energy_trace
        assert all(b <= a + 1e-10 * max(1.0, abs(a)) for a, b in zip(tr, tr[1:]))

    def test_kinetic_bounds(self, saddle_report):
        lower_ok, upper_ok = cq.kinetic_bounds_check(saddle_report, sup_params())
        assert lower_ok and upper_ok

    def test_mass_drift(self, saddle_report):
        assert saddle_report.residuals["mass_drift"] < 1e-10

    def test_not_supercritical_guard(self, grid32):
        params = cq.ModelParams(
            dim=3, alpha=2.0, p=2.0, q=2.0, mu1=1.0, mu2=1.0, xi=1.0, eta=1.0
        )
        bump = cq.gaussian_field(grid32, 1.0)
        with pytest.raises(cq.NotSupercritical):
            cq.mountain_pass_solve(params, cq.StatePair(bump, bump.copy()))


class TestScalarSaddle:
    def test_levels_strictly_decreasing_in_mass(self, grid48):
        # masses with widths 1.57 - 2.2, comfortably resolved at this grid
        vals = []
        for c in (1.1, 1.2, 1.3):
            rep = cq.scalar_constrained_saddle(
                c, 60.0, 3.0, 2.0, grid48, SOPTS, init_width=1.3 * c * c
            )
            assert rep.converged
            assert rep.multipliers.lambda1 > 0
            vals.append(rep.energy.total)
        assert vals[0] > vals[1] > vals[2]

    def test_nonpositive_mass_rejected(self, grid32):
        with pytest.raises(cq.ZeroMass):
            cq.scalar_constrained_saddle(0.0, 60.0, 3.0, 2.0, grid32)


class TestKineticBoundsGuards:
    def test_requires_converged(self, saddle_report, grid32):
        import dataclasses

        broken = dataclasses.replace(saddle_report, converged=False)
        with pytest.raises(cq.NotConverged):
            cq.kinetic_bounds_check(broken, sup_params())
