import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hermite_lab.errors import BandLimitError, InstabilityError, ParameterError, ShapeError
from hermite_lab.hartree import (
    Discretization,
    HartreeConfig,
    HartreeState,
    InteractionKernel,
    UniformGrid,
    convolve,
    energy,
    energy_drift,
    evolve_hartree,
    hat_matrix,
    max_spacing,
    strang_step,
)
from hermite_lab.hermite_basis import MultiIndexSet
from hermite_lab.propagator import evolve_spectral
from hermite_lab.strichartz import random_orthonormal_system, spectral_projection_system

W = InteractionKernel.gaussian(0.5, 1.0)
ZERO = InteractionKernel.gaussian(0.0)


def system(J=4, K=16, seed=3):
    return random_orthonormal_system(J, MultiIndexSet(1, K), seed)


class TestConvolution:
    def test_narrow_kernel_is_identity(self):
        g = UniformGrid(12.0, 961)
        sigma = g.spacing
        k = InteractionKernel.gaussian(1 / (sigma * math.sqrt(2 * math.pi)), sigma)
        rho = np.exp(-g.points**2) * (1 + 0.5 * np.cos(g.points))
        assert np.max(np.abs(convolve(k, rho, g) - rho)) <= 0.02 * np.max(rho)

    def test_zero_density(self):
        g = UniformGrid(10.0, 101)
        assert np.all(convolve(W, np.zeros(101), g) == 0)

    def test_gaussian_pair(self):
        g = UniformGrid(14.0, 1401)
        y = g.points
        w0, sigma, s, c, A = 0.7, 0.8, 0.6, 1.3, 2.0
        rho = A * np.exp(-(y - c) ** 2 / (2 * s * s))
        var = sigma**2 + s**2
        ref = A * w0 * 2 * math.pi * sigma * s / math.sqrt(2 * math.pi * var) * np.exp(-(y - c) ** 2 / (2 * var))
        np.testing.assert_allclose(convolve(InteractionKernel.gaussian(w0, sigma), rho, g), ref, atol=1e-6)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            convolve(W, np.zeros(10), UniformGrid(10.0, 11))

    def test_real_output(self):
        g = UniformGrid(10.0, 51)
        assert convolve(W, np.ones(51), g).dtype == float


class TestKernel:
    def test_tabulated_matches_gaussian(self):
        g = UniformGrid(8.0, 81)
        d = g.spacing * np.arange(-80, 81)
        tab = InteractionKernel.tabulated(0.5 * np.exp(-d * d / 2), g.spacing)
        rho = np.exp(-g.points**2)
        np.testing.assert_allclose(convolve(tab, rho, g), convolve(W, rho, g), atol=1e-15)

    def test_tabulated_symmetrized(self):
        k = InteractionKernel.tabulated([1.0, 2.0, 5.0], 0.1)
        np.testing.assert_array_equal(k.samples, [3.0, 2.0, 3.0])

    def test_tabulated_zero_outside(self):
        g = UniformGrid(1.0, 11)
        off = InteractionKernel.tabulated([1.0, 1.0, 1.0], g.spacing).offsets(g)
        assert off.size == 21 and off.sum() == 3.0

    def test_tabulated_errors(self):
        with pytest.raises(ShapeError):
            InteractionKernel.tabulated([1.0, 2.0], 0.1)
        with pytest.raises(ShapeError):
            InteractionKernel.tabulated([1.0], 0.3).offsets(UniformGrid(1.0, 11))
        with pytest.raises(ParameterError):
            InteractionKernel.tabulated([np.inf], 0.1)

    def test_l1(self):
        assert W.l1_norm == pytest.approx(0.5 * math.sqrt(2 * math.pi))
        assert InteractionKernel.tabulated([1.0, -2.0, 1.0], 0.5).l1_norm == 2.0

    def test_bad_kind(self):
        with pytest.raises(ParameterError):
            InteractionKernel("coulomb")
        with pytest.raises(ParameterError):
            InteractionKernel.gaussian(1.0, 0.0)


class TestHatMatrix:
    def test_linear_exact(self):
        x = np.sort(np.random.default_rng(0).uniform(-3, 3, 12))
        y = np.linspace(x[0], x[-1], 40)
        np.testing.assert_allclose(hat_matrix(x, y) @ (2 * x - 1), 2 * y - 1, atol=1e-13)

    def test_outside_zero(self):
        P = hat_matrix(np.array([-1.0, 0.0, 1.0]), np.array([-2.0, 0.5, 1.0, 3.0]))
        np.testing.assert_allclose(P.sum(axis=1), [0, 1, 1, 0])


class TestConfig:
    def test_time_span(self):
        with pytest.raises(ParameterError):
            HartreeConfig(0.01, 700, W)

    def test_grid_cover(self):
        with pytest.raises(ParameterError):
            HartreeConfig(0.01, 10, W, M=65, grid=UniformGrid(8.0, 400))

    def test_grid_resolution(self):
        with pytest.raises(ParameterError):
            HartreeConfig(0.01, 10, W, M=33, grid=UniformGrid(8.0, 41))

    def test_default_grid(self):
        c = HartreeConfig(0.01, 10, W, M=33)
        assert c.grid.R >= 8 and c.grid.spacing <= max_spacing(33)

    def test_orthogonal_transform(self):
        d = Discretization.build(HartreeConfig(0.01, 1, W, M=65))
        np.testing.assert_allclose(d.Q.T @ d.Q, np.eye(65), atol=1e-13)


class TestStep:
    def test_linear_reduction(self):
        s = system()
        d = Discretization.build(HartreeConfig(0.01, 1, ZERO, M=65))
        out = strang_step(HartreeState.from_system(s, d), d, 0.37).coefficients(d)
        for j in range(s.J):
            ref = evolve_spectral(s.member(j), 0.37).coeffs
            np.testing.assert_allclose(out[:17, j], ref, atol=1e-10)
            assert np.max(np.abs(out[17:, j])) < 1e-10

    def test_single_mass(self):
        s = spectral_projection_system(1, MultiIndexSet(1, 4))
        d = Discretization.build(HartreeConfig(0.01, 1, InteractionKernel.gaussian(2.0, 0.5), M=33))
        a = HartreeState.from_system(s, d)
        b = strang_step(a, d, 0.05)
        assert abs(np.linalg.norm(b.v) - np.linalg.norm(a.v)) < 1e-12

    def test_pair_gram(self):
        s = system(J=2)
        d = Discretization.build(HartreeConfig(0.01, 1, W, M=65))
        a = HartreeState.from_system(s, d)
        b = strang_step(a, d, 0.05)
        assert np.linalg.norm(b.gram() - a.gram()) < 1e-10

    def test_values_match_synthesis(self):
        from hermite_lab.hermite_basis import synthesize

        s = system(J=1)
        d = Discretization.build(HartreeConfig(0.01, 1, W, M=65))
        st_ = HartreeState.from_system(s, d)
        np.testing.assert_allclose(st_.values(d)[:, 0], synthesize(s.member(0), d.rule.nodes), atol=1e-12)


class TestEnergy:
    def test_linear_ground(self):
        s = spectral_projection_system(1, MultiIndexSet(1, 4))
        d = Discretization.build(HartreeConfig(0.01, 1, ZERO, M=33))
        assert energy(HartreeState.from_system(s, d), d) == pytest.approx(1.0, abs=1e-13)

    def test_gaussian_interaction(self):
        # rho = pi^{-1/2} e^{-x^2}: 1/2 int int w rho rho = (w0/2) sigma / sqrt(1 + sigma^2)
        s = spectral_projection_system(1, MultiIndexSet(1, 4))
        d = Discretization.build(HartreeConfig(0.01, 1, W, M=65))
        assert energy(HartreeState.from_system(s, d), d) - 1 == pytest.approx(0.25 / math.sqrt(2), rel=0.01)


class TestEvolution:
    def test_pi_return(self):
        s = system()
        run = evolve_hartree(s, HartreeConfig(math.pi / 500, 500, ZERO, M=65))
        d = run.disc
        rho0 = d.nodal_density(run.initial.v, s.weights)
        rho1 = d.nodal_density(run.final.v, s.weights)
        assert np.max(np.abs(rho1 - rho0)) < 1e-8

    def test_conservation(self):
        s = system().reweighted([1.0, 0.5, 0.25, 2.0])
        run = evolve_hartree(s, HartreeConfig(5e-3, 400, W, M=65))
        traces = np.array([r.trace for r in run.records])
        assert np.max(np.abs(traces - 3.75)) < 1e-10
        assert max(r.mass_drift for r in run.records) < 1e-12
        assert max(r.gram_drift for r in run.records) < 1e-10
        assert [r.step for r in run.records] == list(range(401))

    def test_self_convergence(self):
        s = system()

        def final(dt):
            return evolve_hartree(s, HartreeConfig(dt, round(1.0 / dt), W, M=65)).final.v

        # reference at a quarter of the finer step
        ref = final(0.02 / 8)
        ratio = np.linalg.norm(final(0.02) - ref) / np.linalg.norm(final(0.01) - ref)
        assert ratio == pytest.approx(4, rel=0.2)

    def test_energy_second_order(self):
        s = system()
        dts = [1e-2, 5e-3, 2.5e-3]
        drifts = [energy_drift(evolve_hartree(s, HartreeConfig(dt, round(1.0 / dt), W, M=65))) for dt in dts]
        assert 1.8 <= np.polyfit(np.log(dts), np.log(drifts), 1)[0] <= 2.2

    def test_instability(self):
        s = system(J=1)
        with pytest.raises(InstabilityError) as exc:
            evolve_hartree(s, HartreeConfig(0.01, 3, InteractionKernel.gaussian(1e308, 100.0), M=65))
        # the potential overflows as soon as the initial diagnostics are formed
        assert exc.value.step == 0

    def test_band_limit(self):
        s = system(J=1, K=62)
        with pytest.raises(BandLimitError):
            evolve_hartree(s, HartreeConfig(0.01, 2, W, M=65))
        run = evolve_hartree(s, HartreeConfig(0.01, 2, W, M=65), check_band=False)
        assert run.records[-1].band_edge > 1e-6

    def test_rejects_two_dims(self):
        s = random_orthonormal_system(1, MultiIndexSet(2, 2), 0)
        with pytest.raises(ParameterError):
            evolve_hartree(s, HartreeConfig(0.01, 1, W, M=33))


@settings(max_examples=10, deadline=None)
@given(w0=st.floats(-2, 2), sigma=st.floats(0.3, 3), seed=st.integers(0, 500))
def test_gram_preserved_for_any_kernel(w0, sigma, seed):
    s = system(J=3, K=10, seed=seed)
    run = evolve_hartree(s, HartreeConfig(0.02, 20, InteractionKernel.gaussian(w0, sigma), M=41))
    assert run.records[-1].gram_drift < 1e-12
