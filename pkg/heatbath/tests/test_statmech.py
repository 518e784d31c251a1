import numpy as np
import pytest

from heatbath.core import statmech
from heatbath.core.errors import DegenerateInputError
from heatbath.core.statmech import MBParams

PARAMS = [MBParams(1.0, 1.0), MBParams(2.0, 0.5), MBParams(0.3, 4.0, 1.380649)]


@pytest.mark.parametrize("params", PARAMS)
def test_speed_pdf_moments(params):
    assert statmech.mb_normalization(params) == pytest.approx(1.0, abs=1e-10)
    assert statmech.mean_kinetic_energy(params) == pytest.approx(1.5 * params.kT, rel=1e-10)


@pytest.mark.parametrize("params", PARAMS)
def test_mode_is_pdf_maximum(params):
    v = np.linspace(0.0, 6.0 * params.sigma, 60001)
    assert v[np.argmax(statmech.mb_speed_pdf(params, v))] == pytest.approx(statmech.mb_mode(params), rel=1e-3)


@pytest.mark.parametrize("mass, kT, k", [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, 0.0)])
def test_params_validated(mass, kT, k):
    with pytest.raises(DegenerateInputError):
        MBParams(mass, kT, k)


def test_negative_speed_rejected():
    with pytest.raises(DegenerateInputError):
        statmech.mb_speed_pdf(MBParams(), [-1.0])


def test_sampled_kinetic_energy():
    params = MBParams(1.0, 2.0)
    speeds = statmech.sample_mb(params, 100_000, seed=0)
    kinetic = np.mean(0.5 * params.mass * speeds ** 2)
    assert kinetic == pytest.approx(1.5 * params.kT, rel=0.02)


def test_sampling_is_seeded():
    a = statmech.sample_mb(MBParams(), 100, seed=9)
    b = statmech.sample_mb(MBParams(), 100, seed=9)
    np.testing.assert_array_equal(a, b)


def test_speed_distribution_passes_ks():
    params = MBParams(1.5, 0.8)
    speeds = statmech.sample_mb(params, 50_000, seed=1)
    stat, critical = statmech.ks_chi2_test(speeds, params, alpha=0.001)
    assert stat < critical


def test_ks_detects_wrong_temperature():
    speeds = statmech.sample_mb(MBParams(1.0, 1.3), 50_000, seed=2)
    stat, critical = statmech.ks_chi2_test(speeds, MBParams(1.0, 1.0))
    assert stat > critical


@pytest.mark.parametrize("T0, T1", [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (0.25, 4.0)])
def test_kl_closed_form_matches_quadrature(T0, T1):
    closed = statmech.kl_mb(T0, T1)
    assert closed >= 0
    assert (closed == 0) == (T0 == T1)
    assert statmech.kl_mb_quadrature(T0, T1, mass=1.7) == pytest.approx(closed, abs=1e-6)


def test_kl_rejects_non_positive_temperature():
    with pytest.raises(DegenerateInputError):
        statmech.kl_mb(0.0, 1.0)


@pytest.mark.parametrize("params", PARAMS)
def test_negentropy_closed_form(params):
    assert statmech.negentropy_mb(params) == pytest.approx(statmech.negentropy_mb_closed(params), abs=1e-6)


def test_negentropy_decreases_with_temperature():
    values = [statmech.negentropy_mb(MBParams(1.0, t)) for t in (0.5, 1.0, 2.0, 4.0)]
    assert np.all(np.diff(values) < 0)


def test_white_noise_autocovariance_in_band():
    x = np.random.default_rng(3).standard_normal(20_000)
    stats = statmech.autocovariance(x, 50)
    assert stats.acov[0] == pytest.approx(1.0, rel=0.05)
    assert stats.inside_band_fraction() > 0.9
    assert stats.lags.size == 51
    assert stats.freqs.size == stats.power.size


def test_autocovariance_needs_long_series():
    with pytest.raises(DegenerateInputError):
        statmech.autocovariance(np.ones(100), 25)


def test_spectral_peaks_find_lines():
    dt = 0.5
    t = np.arange(0.0, 4000.0, dt)
    x = np.sin(2 * np.pi * 0.1 * t) + 0.2 * np.sin(2 * np.pi * 0.37 * t)
    peaks = statmech.spectral_peaks(x, dt)
    assert peaks.size == 2
    np.testing.assert_allclose(peaks, [0.1, 0.37], atol=1e-3)
    assert statmech.periodicity_probe(x, dt) == 2
