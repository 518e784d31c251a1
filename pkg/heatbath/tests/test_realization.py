import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatbath.core.errors import DegenerateInputError
from heatbath.core.poly_rational import RationalFunction, evaluate
from heatbath.core.realization import (
    FosterSpec,
    LosslessRealization,
    StateSpace,
    energy_drift,
    foster_realize,
    foster_to_rational,
    random_foster_spec,
    scaled,
    transfer_function,
    verify_lossless_certificate,
)
from heatbath.core.utils import match_spectra

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@pytest.mark.parametrize("spec, num, den", [
    (FosterSpec(1.0), [1], [0, 1]),
    (FosterSpec(0.0, ((0.5, 1.0),)), [0, 1], [1, 0, 1]),
    (FosterSpec(0.25, ((0.375, 2.0),)), [1, 0, 1], [0, 4, 0, 1]),
])
def test_foster_to_rational(spec, num, den):
    assert foster_to_rational(spec).allclose(RationalFunction.from_coeffs(num, den))


def test_capacitor_realization():
    load = foster_realize(FosterSpec(4.0))
    np.testing.assert_array_equal(load.A, [[0.0]])
    np.testing.assert_allclose(load.b, [2.0])
    np.testing.assert_allclose(load.c, [2.0])
    np.testing.assert_array_equal(load.omega, np.eye(1))


def test_tank_realization():
    load = foster_realize(FosterSpec(0.0, ((0.5, 1.0),)))
    np.testing.assert_array_equal(load.A, [[0.0, 1.0], [-1.0, 0.0]])
    np.testing.assert_allclose(load.b, [0.0, 1.0])
    assert transfer_function(load.ss).allclose(RationalFunction.from_coeffs([0, 1], [1, 0, 1]))


@pytest.mark.parametrize("k0, tanks", [
    (0.0, ()),
    (-1.0, ()),
    (0.0, ((-0.5, 1.0),)),
    (0.0, ((0.5, 0.0),)),
    (0.0, ((0.5, 2.0), (0.5, 1.0))),
    (0.0, ((0.5, 1.0), (0.7, 1.0))),
])
def test_invalid_foster_specs(k0, tanks):
    with pytest.raises(DegenerateInputError):
        FosterSpec(k0, tanks)


def test_state_space_shape_checked():
    with pytest.raises(DegenerateInputError):
        StateSpace(np.zeros((2, 2)), np.ones(3), np.ones(2))


def test_certificate_rejects_dissipative_load():
    lossy = LosslessRealization(StateSpace([[-1.0]], [1.0], [1.0]), np.eye(1))
    report = verify_lossless_certificate(lossy)
    assert not report.is_valid()
    assert report.lyapunov_residual == pytest.approx(2.0)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_random_realization_round_trip(seed):
    rng = np.random.default_rng(seed)
    spec = random_foster_spec(rng, max_dim=8)
    load = foster_realize(spec)
    assert load.n == spec.dimension <= 8
    Z = foster_to_rational(spec)
    Z_ss = transfer_function(load.ss)
    for s in rng.uniform(-2, 2, 10) + 1j * rng.uniform(-3, 3, 10):
        ref = evaluate(Z, s)
        assert abs(evaluate(Z_ss, s) - ref) <= 1e-8 * abs(ref)

    report = verify_lossless_certificate(load)
    assert report.is_valid()
    assert report.controllable and report.observable
    assert match_spectra(np.linalg.eigvals(load.A), spec.eigenvalues()) < 1e-9


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_autonomous_flow_conserves_energy(seed):
    rng = np.random.default_rng(seed)
    load = foster_realize(random_foster_spec(rng))
    assert energy_drift(load, rng.standard_normal(load.n), dt=0.01, steps=500) < 1e-10


@pytest.mark.parametrize("rho", [0.5, 2.0, 3.0])
def test_scaled_load(rho):
    load = foster_realize(FosterSpec(1.0, ((0.5, 1.0),)))
    big = scaled(load, rho)
    assert verify_lossless_certificate(big).is_valid()
    assert transfer_function(big.ss).allclose(rho * transfer_function(load.ss))


def test_scaled_rejects_non_positive():
    with pytest.raises(DegenerateInputError):
        scaled(foster_realize(FosterSpec(1.0)), 0.0)
