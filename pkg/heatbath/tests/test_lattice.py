import dataclasses

import numpy as np
import pytest
from scipy import special

from heatbath.core.errors import DegenerateInputError, ReflectionWindowError
from heatbath.core.poly_rational import is_inner
from heatbath.core.utils import match_spectra
from heatbath.simulation import lattice
from heatbath.simulation.lattice import ChainConfig


@pytest.fixture(scope="module")
def small_cfg():
    return ChainConfig(half_width=100, c=1.0, beta=1.0, dt=0.05, t_max=10.0, seed=3)


@pytest.fixture(scope="module")
def small_trace(small_cfg):
    state = lattice.sample_invariant(small_cfg, np.random.default_rng(11))
    return state, lattice.integrate(state, small_cfg)


def test_potential_stencil():
    V2 = lattice.build_potential(1, 2.0).toarray()
    np.testing.assert_array_equal(V2, [[8, -4, 0], [-4, 8, -4], [0, -4, 8]])


@pytest.mark.parametrize("kwargs, error", [
    ({"half_width": 1}, DegenerateInputError),
    ({"half_width": 10, "c": 0.0}, DegenerateInputError),
    ({"half_width": 10, "beta": -1.0}, DegenerateInputError),
    ({"half_width": 10, "t_max": 10.0}, ReflectionWindowError),
])
def test_chain_config_guards(kwargs, error):
    with pytest.raises(error):
        ChainConfig(**kwargs)


def test_build_potential_rejects_empty_chain():
    with pytest.raises(DegenerateInputError):
        lattice.build_potential(0, 1.0)


@pytest.mark.parametrize("n, c", [(5, 1.0), (21, 0.7), (64, 2.0)])
def test_dirichlet_eigenpairs(n, c):
    V2 = lattice._dirichlet_matrix(n, c).toarray()
    omegas = lattice.dirichlet_frequencies(n, c)
    np.testing.assert_allclose(np.sort(omegas ** 2), np.linalg.eigvalsh(V2), atol=1e-12)
    S = lattice.mode_rows(n, np.arange(n))
    np.testing.assert_allclose(S @ np.diag(omegas ** 2) @ S.T, V2, atol=1e-12)
    x = np.random.default_rng(n).standard_normal(n)
    np.testing.assert_allclose(lattice.to_modes(x), S.T @ x, atol=1e-12)
    np.testing.assert_allclose(lattice.from_modes(lattice.to_modes(x)), x, atol=1e-12)


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_symbol_factorization(c):
    factor = lattice.factor_symbol(c)
    assert factor.reproduces_potential
    np.testing.assert_allclose(factor.product_stencil, [-c * c, 2 * c * c, -c * c])


@pytest.mark.parametrize("c", [0.5, 1.0, 3.0])
def test_reduced_models(c):
    models = lattice.reduced_models(c)
    assert match_spectra(models.gamma_eigs(), [0.0, -2 * c]) < 1e-12
    assert match_spectra(models.gamma_bar_eigs(), [0.0, 2 * c]) < 1e-12
    assert is_inner(models.Q)
    assert not models.is_time_reflection()


def test_sampler_zero_temperature():
    cfg = ChainConfig(half_width=10, beta=0.0, t_max=1.0)
    q, p = lattice.sample_invariant_batch(cfg, 4, np.random.default_rng(0))
    assert not q.any() and not p.any()


def test_sampler_is_reproducible(small_cfg):
    a = lattice.sample_invariant(small_cfg)
    b = lattice.sample_invariant(small_cfg)
    np.testing.assert_array_equal(a.q, b.q)
    np.testing.assert_array_equal(a.p, b.p)


def test_whitening_covariance(small_cfg):
    n_samples = 4000
    cov = lattice.whitening_covariance(small_cfg, n_samples, np.random.default_rng(5))
    target = lattice.whitening_target(small_cfg)
    assert np.max(np.abs(cov - target)) < 5.0 / np.sqrt(n_samples)


def test_momentum_variance(small_cfg):
    _, p = lattice.sample_invariant_batch(small_cfg, 400, np.random.default_rng(6))
    assert np.mean(p ** 2) == pytest.approx(small_cfg.beta, rel=0.03)


def test_energy_conserved(small_cfg, small_trace):
    _, trace = small_trace
    assert trace.energy_drift() < 1e-10


def test_evolve_state_matches_sampled_trace(small_cfg, small_trace):
    state, trace = small_trace
    end = lattice.evolve_state(state, small_cfg.c, trace.t_grid[-1])
    assert end.q[small_cfg.index(0)] == pytest.approx(trace.q0[-1], abs=1e-10)
    assert end.p[small_cfg.index(0)] == pytest.approx(trace.p0[-1], abs=1e-10)


def test_langevin_identities_converge_at_second_order(small_cfg, small_trace):
    state, _ = small_trace
    forward_order, backward_order = lattice.convergence_order(state, small_cfg)
    assert forward_order >= 1.9
    assert backward_order >= 1.9


def test_langevin_residual_shrinks_with_step(small_cfg, small_trace):
    state, coarse = small_trace
    fine = lattice.integrate(state, ChainConfig(half_width=100, dt=0.025, t_max=10.0, seed=3))
    coarse_res = lattice.langevin_residual(coarse, small_cfg.c)
    fine_res = lattice.langevin_residual(fine, small_cfg.c)
    for big, small in zip(coarse_res, fine_res):
        assert 0.0 <= small < big


def test_langevin_residual_of_rest_state_is_zero():
    t = np.arange(0.0, 5.0, 0.1)
    zeros = np.zeros_like(t)
    trace = lattice.ParticleTrace(t, zeros, zeros, zeros, zeros, zeros, zeros)
    assert lattice.langevin_residual(trace, 1.0) == (0.0, 0.0)


def test_langevin_residual_flags_corrupted_wave(small_cfg, small_trace):
    _, trace = small_trace
    clean_fwd, clean_bwd = lattice.langevin_residual(trace, small_cfg.c)
    w = trace.w.copy()
    w[w.size // 2] += 1.0
    fwd, bwd = lattice.langevin_residual(dataclasses.replace(trace, w=w), small_cfg.c)
    assert fwd >= 4.0 * small_cfg.c - clean_fwd
    assert fwd > 10.0 * clean_fwd
    assert bwd == clean_bwd


def test_unit_kick_follows_symbol_oracle(small_cfg):
    n = small_cfg.n_sites
    p = np.zeros(n)
    p[small_cfg.index(0)] = 1.0
    trace = lattice.integrate(lattice.ChainState(np.zeros(n), p), small_cfg)
    np.testing.assert_allclose(trace.p0, lattice.symbol_oracle(trace.t_grid, small_cfg.c), atol=1e-7)


def test_waves_combine_to_momentum(small_trace):
    _, trace = small_trace
    np.testing.assert_allclose(trace.w - trace.w_bar, trace.p0, atol=1e-12)


@pytest.mark.parametrize("c", [0.5, 1.0])
def test_symbol_oracle_is_bessel(c):
    t = np.linspace(0.0, 30.0, 31)
    np.testing.assert_allclose(lattice.symbol_oracle(t, c, 2.0), 2.0 * special.j0(2 * c * t), atol=1e-7)


def test_truncated_oracles_at_zero_lag(small_cfg):
    assert lattice.truncated_momentum_oracle(0.0, small_cfg)[0] == pytest.approx(small_cfg.beta)
    # truncated oracle agrees with the infinite chain before the reflection time
    t = np.linspace(0.0, 40.0, 9)
    np.testing.assert_allclose(
        lattice.truncated_momentum_oracle(t, small_cfg), lattice.symbol_oracle(t, small_cfg.c), atol=1e-6
    )
    assert lattice.truncated_wave_oracle(0.0, small_cfg)[0] > 0


def test_momentum_autocorrelation_against_oracle():
    cfg = ChainConfig(half_width=200, dt=0.5, t_max=150.0, seed=21)
    report = lattice.momentum_autocorr(cfg, n_runs=64, max_lag=40.0, workers=4)
    assert report.lags[-1] == pytest.approx(40.0)
    assert report.p0_variance == pytest.approx(cfg.beta, rel=0.1)
    assert np.max(np.abs(report.empirical - report.truncated_oracle)) < 0.1
    assert report.max_deviation(cfg.beta) < 0.1


def test_momentum_autocorrelation_independent_of_workers():
    cfg = ChainConfig(half_width=60, dt=0.5, t_max=50.0, seed=4)
    one = lattice.momentum_autocorr(cfg, n_runs=6, max_lag=10.0, workers=1)
    many = lattice.momentum_autocorr(cfg, n_runs=6, max_lag=10.0, workers=3)
    np.testing.assert_allclose(one.empirical, many.empirical, rtol=0, atol=1e-12)
    np.testing.assert_allclose(one.msd, many.msd, rtol=0, atol=1e-12)


def test_momentum_autocorrelation_rejects_long_lag():
    cfg = ChainConfig(half_width=60, dt=0.5, t_max=20.0)
    with pytest.raises(DegenerateInputError):
        lattice.momentum_autocorr(cfg, n_runs=2, max_lag=30.0)


@pytest.mark.parametrize("n_sites", [3, 4, 5, 6, 7, 8])
def test_isolated_chain_is_periodic(n_sites):
    assert lattice.isolated_peak_count(n_sites) == n_sites
