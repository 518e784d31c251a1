import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatbath.core import coupling
from heatbath.core.coupling import Observable
from heatbath.core.errors import (
    DegenerateInputError,
    ImproperResultError,
    InvalidLoadError,
    NotLosslessError,
    StageError,
)
from heatbath.core.poly_rational import RationalFunction, evaluate, is_inner
from heatbath.core.realization import (
    FosterSpec,
    LosslessRealization,
    StateSpace,
    foster_realize,
    foster_to_rational,
    random_foster_spec,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def rf(num, den):
    return RationalFunction.from_coeffs(num, den)


CAPACITOR = FosterSpec(1.0)
TANK = FosterSpec(0.0, ((0.5, 1.0),))


def test_capacitor_closed_loops():
    pair = coupling.close_loops(foster_realize(CAPACITOR))
    np.testing.assert_allclose(pair.gamma, [[-1.0]])
    np.testing.assert_allclose(pair.gamma_bar, [[1.0]])
    assert pair.K.allclose(rf([1, -1], [1, 1]))
    assert pair.K.pretty() == "(1 - s)/(1 + s)"


def test_tank_closed_loops():
    pair = coupling.close_loops(foster_realize(TANK))
    eigs = pair.gamma_eigs()
    np.testing.assert_allclose(np.sort(eigs.real), [-0.5, -0.5])
    np.testing.assert_allclose(np.sort(np.abs(eigs.imag)), [np.sqrt(3) / 2] * 2)
    assert coupling.mirror_residual(pair) < 1e-12


@pytest.mark.parametrize("Z, K", [
    (rf([1], [0, 1]), rf([1, -1], [1, 1])),
    (rf([0, 1], [1, 0, 1]), rf([-1, 1, -1], [1, 1, 1])),
])
def test_scattering_formula(Z, K):
    result = coupling.scattering_K(Z)
    assert result.allclose(K)
    assert is_inner(result)
    assert result.value_at_infinity() == pytest.approx(-1.0)


@pytest.mark.parametrize("Z, error", [
    (rf([1], [1, 1]), NotLosslessError),
    (rf([0, 1], [1]), ImproperResultError),
])
def test_scattering_rejects(Z, error):
    with pytest.raises(error):
        coupling.scattering_K(Z)


def test_close_loops_rejects_lossy_load():
    lossy = LosslessRealization(StateSpace([[-1.0]], [1.0], [1.0]), np.eye(1))
    with pytest.raises(InvalidLoadError):
        coupling.close_loops(lossy)


def test_statespace_scattering_matches_formula():
    load = foster_realize(FosterSpec(0.7, ((0.3, 0.8), (1.1, 2.5))))
    pair = coupling.close_loops(load)
    K_ss = coupling.scattering_K_statespace(pair, load)
    assert K_ss.coefficient_distance(pair.K) < 1e-8


@pytest.mark.parametrize("c, d, W, W_bar", [
    ([1.0], 0.0, rf([2], [1, 1]), rf([2], [1, -1])),
    ([0.0], 1.0, rf([0, 2], [1, 1]), None),
])
def test_capacitor_observable_transfers(c, d, W, W_bar):
    load = foster_realize(CAPACITOR)
    pair = coupling.close_loops(load)
    obs = Observable.from_output(c, d, load.c)
    W_found, W_bar_found = coupling.observable_transfers(pair, obs)
    assert W_found.allclose(W)
    if W_bar is not None:
        assert W_bar_found.allclose(W_bar)
    assert (W_found / W_bar_found).allclose(pair.K)


def test_zero_observable_has_zero_transfers():
    # the direct term of W is 2d; a constant 2 is the d = 1 case
    load = foster_realize(CAPACITOR)
    pair = coupling.close_loops(load)
    W, W_bar = coupling.observable_transfers(pair, Observable.from_output([0.0], 0.0, load.c))
    assert W.is_zero and W_bar.is_zero
    assert not W.allclose(RationalFunction.constant(2.0))
    W_one, W_bar_one = coupling.observable_transfers(pair, Observable.from_output([0.0], 1.0, load.c))
    assert W_one.allclose(rf([0, 2], [1, 1]))
    assert W_one.value_at_infinity() == pytest.approx(2.0)
    assert (W_one / W_bar_one).allclose(pair.K)


@pytest.mark.parametrize("d", [-0.0056, 1e-3, 0.0])
def test_small_feedthrough_keeps_scattering(d):
    rng = np.random.default_rng(7510)
    load = foster_realize(random_foster_spec(rng, 6))
    pair = coupling.close_loops(load)
    obs = Observable.from_output(rng.standard_normal(load.n), d, load.c)
    W, W_bar = coupling.observable_transfers(pair, obs)
    ratio = W / W_bar
    assert ratio.identity_residual(pair.K) < 1e-8
    for omega in (0.05, 0.5, 2.0, 20.0):
        s = 1j * omega
        assert evaluate(ratio, s) == pytest.approx(evaluate(W, s) / evaluate(W_bar, s), rel=1e-8)
        assert evaluate(ratio, s) == pytest.approx(evaluate(pair.K, s), rel=1e-8)


def test_observable_rows_must_be_consistent():
    with pytest.raises(DegenerateInputError):
        Observable(np.ones(2), 0.0, np.ones(2), np.zeros(2))


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_random_load_pair_properties(seed):
    rng = np.random.default_rng(seed)
    summary = coupling.load_summary(random_foster_spec(rng, max_dim=6))
    pair = summary["pair"]
    radius = max(1.0, float(np.max(np.abs(pair.gamma_eigs()))))
    assert summary["max_re_gamma"] < 0
    assert summary["mirror_residual"] <= 1e-8 * radius
    assert summary["allpass_residual"] < 1e-8
    assert summary["K_route_distance"] < 1e-8
    assert is_inner(pair.K)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_scattering_does_not_depend_on_observable(seed):
    rng = np.random.default_rng(seed)
    load = foster_realize(random_foster_spec(rng, max_dim=6))
    pair = coupling.close_loops(load)
    for _ in range(5):
        W, W_bar = coupling.observable_transfers(pair, coupling.random_observable(rng, load))
        assert (W / W_bar).identity_residual(pair.K) < 1e-8


@pytest.mark.parametrize("K, Z", [
    (rf([1, -1], [1, 1]), rf([1], [0, 1])),
    (rf([-1, 1, -1], [1, 1, 1]), rf([0, 1], [1, 0, 1])),
])
def test_invert_scattering(K, Z):
    assert coupling.invert_K_to_Z(K).allclose(Z)


def test_invert_minus_one_is_short_circuit(caplog, monkeypatch):
    monkeypatch.setattr(logging.getLogger("heatbath"), "propagate", True)
    with caplog.at_level(logging.WARNING, logger="heatbath"):
        Z = coupling.invert_K_to_Z(RationalFunction.constant(-1.0))
    assert Z.is_zero
    assert "short circuit" in caplog.text


@pytest.mark.parametrize("K, error", [
    (RationalFunction.constant(1.0), ImproperResultError),
    (rf([1], [2, 1]), NotLosslessError),
    (rf([1, 1], [1, -1]), NotLosslessError),
])
def test_invert_rejects(K, error):
    with pytest.raises(error):
        coupling.invert_K_to_Z(K)


@pytest.mark.parametrize("Z, k0, tanks", [
    (rf([1], [0, 1]), 1.0, ()),
    (rf([0, 1], [1, 0, 1]), 0.0, ((0.5, 1.0),)),
    (rf([1, 0, 1], [0, 4, 0, 1]), 0.25, ((0.375, 2.0),)),
])
def test_foster_decompose(Z, k0, tanks):
    spec = coupling.foster_decompose(Z)
    assert spec.k0 == pytest.approx(k0)
    assert len(spec.tanks) == len(tanks)
    for (k, w), (k_exp, w_exp) in zip(spec.tanks, tanks):
        assert k == pytest.approx(k_exp)
        assert w == pytest.approx(w_exp)


def test_foster_decompose_rejects_negative_residue():
    with pytest.raises(InvalidLoadError):
        coupling.foster_decompose(rf([0, -1], [1, 0, 1]))


def test_spectrum_to_bath_capacitor():
    bath = coupling.spectrum_to_bath(rf([1], [1, 0, -1]))
    assert bath.W.allclose(rf([1], [1, 1]))
    assert bath.K.allclose(rf([1, -1], [1, 1]))
    assert bath.Z.allclose(rf([1], [0, 1]))
    assert bath.spec.k0 == pytest.approx(1.0)
    assert bath.spectrum_residual() < 1e-8


@pytest.mark.parametrize("Phi, stage", [
    (RationalFunction.constant(1.0), "invert"),
    (rf([0, 1], [1]), "spectral_factor"),
    (rf([1], [1, 0, 1]), "spectral_factor"),
])
def test_spectrum_to_bath_names_failing_stage(Phi, stage):
    with pytest.raises(StageError) as info:
        coupling.spectrum_to_bath(Phi)
    assert info.value.stage == stage


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_spectrum_to_bath_recovers_load(seed):
    rng = np.random.default_rng(seed)
    spec, Phi = coupling.random_spectral_density(rng, max_dim=4)
    bath = coupling.spectrum_to_bath(Phi)
    assert bath.Z.coefficient_distance(foster_to_rational(spec)) < 1e-7
    assert bath.spectrum_residual() < 1e-6
    round_trip = coupling.scattering_K(coupling.invert_K_to_Z(bath.K))
    assert round_trip.coefficient_distance(bath.K) < 1e-8


def test_spectrum_to_bath_over_a_seeded_stream():
    rng = np.random.default_rng(1)
    for _ in range(25):
        spec, Phi = coupling.random_spectral_density(rng, max_dim=8)
        bath = coupling.spectrum_to_bath(Phi)
        assert bath.K.den.degree == bath.W.den.degree
        assert is_inner(bath.K)
        assert bath.spectrum_residual() < 1e-6


def test_synthesized_factor_reproduces_density():
    spec, Phi = coupling.random_spectral_density(np.random.default_rng(3), max_dim=4)
    bath = coupling.spectrum_to_bath(Phi)
    for omega in np.logspace(-2, 2, 50):
        s = 1j * omega
        assert abs(evaluate(bath.W, s)) ** 2 == pytest.approx(evaluate(Phi, s).real, rel=1e-6)


def test_scattering_comes_from_factor_denominator():
    W = rf([1], [2, 3, 1])            # 1/((s + 1)(s + 2))
    W_bar = rf([1], [2, -3, 1])
    K = coupling._scattering_from_factors(W, W_bar)
    assert K.allclose(-(W / W_bar))
    assert K.value_at_infinity() == pytest.approx(-1.0)
    assert is_inner(K)


def test_fit_observable_reproduces_factor():
    load = foster_realize(TANK)
    pair = coupling.close_loops(load)
    obs = Observable.from_output([0.3, -1.2], 0.5, load.c)
    W, _ = coupling.observable_transfers(pair, obs)
    fitted = coupling.fit_observable(pair, W)
    W_fit, _ = coupling.observable_transfers(pair, fitted)
    for omega in (0.1, 1.0, 4.0):
        assert abs(evaluate(W_fit, 1j * omega) - evaluate(W, 1j * omega)) < 1e-9
