"""Synthetic factor-driven curve processes and their population structure."""

import numpy as np
import pytest

from ffm import (MODELS, SimSpec, companion_spectral_radius, fourier_basis,
                 fpca, make_grid, population_structure, replication_rng,
                 simulate)

MOMENT_RTOL = 0.05


class TestBasis:
    def test_layout_and_values(self):
        r = np.array([0.0, 0.25, 0.5])
        b = fourier_basis(r)
        assert b.shape == (10, 3)
        assert np.array_equal(b[0], [1.0, 1.0, 1.0])
        s2 = np.sqrt(2.0)
        assert np.allclose(b[1], s2 * np.sin(2 * np.pi * r), atol=1e-15)
        assert np.allclose(b[2], s2 * np.cos(2 * np.pi * r), atol=1e-15)
        assert np.allclose(b[3], s2 * np.sin(4 * np.pi * r), atol=1e-14)
        assert np.allclose(b[4], s2 * np.cos(4 * np.pi * r), atol=1e-14)

    def test_orthonormal_under_quadrature(self):
        grid = make_grid(0.0, 1.0, 401)
        b = fourier_basis(grid.points)
        gram = (b * grid.weights) @ b.T
        assert np.allclose(gram, np.eye(10), atol=1e-4)


class TestSpec:
    def test_named_models(self):
        for name, (k, p) in {"M1": (3, 1), "M2": (2, 2), "M3": (2, 4), "M4": (1, 4)}.items():
            spec = SimSpec(model=name)
            assert (spec.k, spec.p) == (k, p)
            assert companion_spectral_radius(np.stack(spec.lag_matrices)) < 1.0

    def test_custom_model(self):
        spec = SimSpec(model="custom", lag_matrices=(np.array([[0.5]]),))
        assert (spec.k, spec.p) == (1, 1)

    def test_validation(self):
        with pytest.raises(ValueError, match="unknown model"):
            SimSpec(model="M9")
        with pytest.raises(ValueError, match="needs lag_matrices"):
            SimSpec(model="custom")
        with pytest.raises(ValueError, match="only accepted"):
            SimSpec(model="M1", lag_matrices=(np.eye(3) * 0.1,))
        with pytest.raises(ValueError, match="unstable"):
            SimSpec(model="custom", lag_matrices=(np.array([[1.01]]),))
        with pytest.raises(ValueError):
            SimSpec(n_obs=0)
        with pytest.raises(ValueError):
            SimSpec(burn_in=-1)
        with pytest.raises(ValueError):
            SimSpec(noise_scale=-0.5)

    def test_default_grid(self):
        spec = SimSpec()
        assert spec.grid.n == 51
        assert spec.grid.a == 0.0 and spec.grid.b == 1.0


class TestSimulate:
    def test_deterministic_given_seed(self):
        spec = SimSpec(model="M2", n_obs=50, seed=123)
        a = simulate(spec)
        b = simulate(spec)
        assert np.array_equal(a.matrix, b.matrix)
        c = simulate(SimSpec(model="M2", n_obs=50, seed=124))
        assert not np.array_equal(a.matrix, c.matrix)

    def test_replication_streams_are_independent_of_scheduling(self):
        spec = SimSpec(model="M1", n_obs=40, seed=7)
        direct = simulate(spec, replication_rng(7, 5))
        # drawing other replications first must not change replication 5
        for r in (0, 1, 2):
            simulate(spec, replication_rng(7, r))
        again = simulate(spec, replication_rng(7, 5))
        assert np.array_equal(direct.matrix, again.matrix)
        other = simulate(spec, replication_rng(7, 6))
        assert not np.array_equal(direct.matrix, other.matrix)

    def test_zero_noise_scale_gives_zero_sample(self):
        sample = simulate(SimSpec(model="M3", n_obs=30, noise_scale=0.0))
        assert np.array_equal(sample.matrix, np.zeros_like(sample.matrix))

    def test_shapes_and_grid(self):
        grid = make_grid(0.0, 1.0, 21)
        sample = simulate(SimSpec(model="M4", n_obs=17, grid=grid))
        assert sample.matrix.shape == (17, 21)
        assert sample.grid is grid

    def test_idiosyncratic_variances_decay_like_inverse_squares(self):
        # coordinates beyond the factors are white noise with sd 1/l;
        # project a long sample back onto the basis and check the moments
        spec = SimSpec(model="M4", n_obs=100000, seed=11, burn_in=50)
        sample = simulate(spec)
        basis = fourier_basis(sample.grid.points)
        w = sample.grid.weights
        coords = sample.matrix @ (basis * w).T  # quadrature projections
        var = coords.var(axis=0)
        for l in range(2, 11):  # noise coordinates, sd 1/l
            assert var[l - 1] == pytest.approx(1.0 / l ** 2, rel=MOMENT_RTOL)

    def test_factor_autocovariance_matches_lyapunov_solution(self):
        spec = SimSpec(model="M1", n_obs=200000, seed=13, burn_in=300)
        pop = population_structure(spec)
        sample = simulate(spec)
        basis = fourier_basis(sample.grid.points)[: spec.k]
        w = sample.grid.weights
        factors = sample.matrix @ (basis * w).T
        gamma0_hat = np.cov(factors.T, bias=True)
        assert np.allclose(gamma0_hat, pop.gamma0, atol=0.03)
        # lag-1 autocovariance of M1: Gamma_1 = A_1 Gamma_0
        x0, x1 = factors[:-1], factors[1:]
        gamma1_hat = (x1 - factors.mean(0)).T @ (x0 - factors.mean(0)) / len(x0)
        gamma1 = MODELS["M1"][0] @ pop.gamma0
        assert np.allclose(gamma1_hat, gamma1, atol=0.03)


class TestPopulationStructure:
    def test_eigen_decomposition_consistency(self):
        for name in MODELS:
            spec = SimSpec(model=name)
            pop = population_structure(spec)
            k = spec.k
            assert pop.eigenvalues.shape == (k,)
            assert np.all(np.diff(pop.eigenvalues) <= 1e-12)
            # rotation diagonalizes gamma0
            d = pop.rotation.T @ pop.gamma0 @ pop.rotation
            assert np.allclose(d, np.diag(pop.eigenvalues), atol=1e-10)
            # loadings orthonormal in quadrature up to grid error
            gram = (pop.loadings * spec.grid.weights) @ pop.loadings.T
            assert np.allclose(gram, np.eye(k), atol=1e-3)
            integrals = pop.loadings @ spec.grid.weights
            tiny = np.abs(integrals) < 1e-9
            assert np.all(integrals[~tiny] > 0)

    def test_rotated_dynamics_reproduce_companion_radius(self):
        # an orthogonal change of coordinates leaves the spectrum alone
        spec = SimSpec(model="M2")
        pop = population_structure(spec)
        raw = companion_spectral_radius(np.stack(spec.lag_matrices))
        rot = companion_spectral_radius(pop.lag_matrices)
        assert rot == pytest.approx(raw, rel=1e-10)

    def test_matches_long_sample_fpca(self):
        spec = SimSpec(model="M2", n_obs=100000, seed=21, burn_in=300,
                       grid=make_grid(0.0, 1.0, 101))
        pop = population_structure(spec)
        result = fpca(simulate(spec), k_max=2)
        # the two leading sample eigenvalues and eigenfunctions approach
        # the population ones (idiosyncratic mass perturbs them a little,
        # hence the loose tolerances)
        assert np.allclose(result.eigenvalues[:2], pop.eigenvalues, rtol=0.1)
        for l in range(2):
            dot = np.dot(result.eigenfunctions[l] * result.grid.weights,
                         pop.loadings[l])
            assert abs(dot) > 0.99

    def test_m4_variance_matches_yule_walker_oracle(self):
        spec = SimSpec(model="M4")
        pop = population_structure(spec)
        assert pop.rotation.shape == (1, 1)
        assert abs(pop.rotation[0, 0]) == pytest.approx(1.0)
        assert np.allclose(np.ravel(pop.lag_matrices), [0.2, 0.0, 0.0, 0.7])
        # independent oracle: Yule-Walker system of x_t = a1 x_{t-1} +
        # a4 x_{t-4} + e_t with unit innovation variance, using the
        # symmetry g_{-k} = g_k; unknowns are g0..g4
        a1, a4 = 0.2, 0.7
        a = np.array([
            [1.0, -a1, 0.0, 0.0, -a4],   # g0 = a1 g1 + a4 g4 + 1
            [-a1, 1.0, 0.0, -a4, 0.0],   # g1 = a1 g0 + a4 g3
            [0.0, -a1, 1.0 - a4, 0.0, 0.0],  # g2 = a1 g1 + a4 g2
            [0.0, -a4, -a1, 1.0, 0.0],   # g3 = a1 g2 + a4 g1
            [-a4, 0.0, 0.0, -a1, 1.0],   # g4 = a1 g3 + a4 g0
        ])
        b = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
        g = np.linalg.solve(a, b)
        assert pop.gamma0[0, 0] == pytest.approx(g[0], rel=1e-10)
        assert pop.eigenvalues[0] == pytest.approx(g[0], rel=1e-10)
