import numpy as np
import pytest

from heatbath.core import statmech
from heatbath.core.coupling import Observable
from heatbath.core.errors import ContaminatedWindowError, DegenerateInputError, ReflectionWindowError
from heatbath.core.realization import FosterSpec, foster_realize
from heatbath.simulation import waveline

DX = 0.01
X_MAX = 20.0
T_MAX = 39.0
WINDOW = (10.0, 38.0)


def bump_field(dx=DX, x_max=X_MAX, center=3.0, width=1.0):
    x = np.arange(int(round(x_max / dx)) + 1) * dx
    profile = waveline.bump(x, center, width)
    return waveline.init_waves(profile, profile, dx)


def run_line(spec, far_end="open", t_max=T_MAX):
    load = foster_realize(spec)
    cfg = waveline.LineConfig(DX, X_MAX, t_max, load, far_end)
    coupler = waveline.BoundaryCoupler(load, cfg.dt, observable=Observable.state(load))
    field_, trace = waveline.propagate(bump_field(), cfg.steps, coupler, cfg.far_end)
    return load, coupler.pair, field_, trace


@pytest.fixture(scope="module", params=[(FosterSpec(1.0), -1.0), (FosterSpec(0.0, ((0.5, 1.0),)), -0.5)],
                ids=["capacitor", "tank"])
def line_run(request):
    spec, rate = request.param
    return run_line(spec) + (rate,)


def test_init_waves_split():
    field_ = waveline.init_waves([1.0, 2.0], [1.0, 0.0], 0.5)
    np.testing.assert_allclose(field_.a_prime, [1.0, 1.0])
    np.testing.assert_allclose(field_.b_prime, [0.0, 1.0])
    np.testing.assert_allclose(field_.v, [1.0, 2.0])
    np.testing.assert_allclose(field_.i, [1.0, 0.0])


@pytest.mark.parametrize("v0, i0", [
    ([1.0, 2.0], [1.0]),
    ([1.0, np.inf], [1.0, 0.0]),
    (np.zeros((2, 2)), np.zeros((2, 2))),
])
def test_init_waves_rejects(v0, i0):
    with pytest.raises(DegenerateInputError):
        waveline.init_waves(v0, i0)


def test_bump_has_compact_support():
    x = np.linspace(0, 10, 1001)
    b = waveline.bump(x, 5.0, 1.0)
    assert b.max() == pytest.approx(1.0)
    assert np.all(b[np.abs(x - 5.0) >= 1.0] == 0.0)


def test_white_noise_field_variance():
    field_ = waveline.white_noise_field(20001, DX, 0.5, np.random.default_rng(2))
    assert field_.a_prime.size == 20001
    assert np.var(field_.v) == pytest.approx(0.25 / DX, rel=0.05)
    assert np.var(field_.i) == pytest.approx(0.25 / DX, rel=0.05)


def test_white_noise_reaches_load_unchanged():
    load = foster_realize(FosterSpec(1.0))
    cfg = waveline.LineConfig(DX, X_MAX, T_MAX, load)
    field_ = waveline.white_noise_field(cfg.n_cells + 1, DX, 1.0, np.random.default_rng(8))
    coupler = waveline.BoundaryCoupler(load, cfg.dt, observable=Observable.state(load))
    _, trace = waveline.propagate(field_, cfg.steps, coupler)
    w = waveline.free_incoming(trace, X_MAX)
    assert w.size == cfg.n_cells
    np.testing.assert_array_equal(w, field_.a_prime[: cfg.n_cells])
    assert trace.energy_drift() < 1e-9
    assert trace.boundary_residual(load) < 1e-12
    stats = statmech.autocovariance(w, 100, dt=DX)
    assert stats.acov[0] == pytest.approx(1.0 / (2 * DX), rel=0.1)
    assert stats.inside_band_fraction() > 0.9


def test_line_config_guards():
    load = foster_realize(FosterSpec(1.0))
    with pytest.raises(ReflectionWindowError):
        waveline.LineConfig(DX, X_MAX, 2 * X_MAX, load)
    with pytest.raises(DegenerateInputError):
        waveline.LineConfig(DX, X_MAX, 10.0, load, far_end="matched")
    with pytest.raises(DegenerateInputError):
        waveline.LineConfig(-DX, X_MAX, 10.0, load)
    cfg = waveline.LineConfig(DX, X_MAX, 2 * X_MAX, load, reflection_free=False)
    assert cfg.steps == 4000


def test_propagate_rejects_reflected_window():
    load = foster_realize(FosterSpec(1.0))
    coupler = waveline.BoundaryCoupler(load, DX)
    with pytest.raises(ReflectionWindowError):
        waveline.propagate(bump_field(), 4000, coupler)


def test_decay_rate_matches_slowest_mode(line_run):
    _, pair, _, trace, rate = line_run
    assert np.max(pair.gamma_eigs().real) == pytest.approx(rate)
    measured = waveline.decay_rate_probe(trace, WINDOW)
    assert abs(measured - rate) <= 0.05 * abs(rate)


def test_energy_conserved(line_run):
    _, _, _, trace, _ = line_run
    assert trace.energy_drift() < 1e-9


def test_boundary_condition_holds(line_run):
    load, _, _, trace, _ = line_run
    assert trace.boundary_residual(load) < 1e-12
    np.testing.assert_allclose(trace.i0, 2 * trace.w - trace.v0)


def test_reduced_models_reproduce_load_state(line_run):
    load, pair, _, trace, _ = line_run
    obs = Observable.state(load)
    xi_f, y_f = waveline.reduced_forward(pair, obs, trace.w, trace.xi[0], trace.dt)
    xi_b, y_b = waveline.reduced_backward(pair, obs, trace.w_bar, trace.xi[-1], trace.dt)
    assert np.max(np.abs(xi_f - trace.xi)) < 1e-6
    assert np.max(np.abs(xi_b - trace.xi)) < 1e-6
    assert np.max(np.abs(y_f - trace.y)) < 1e-6
    assert np.max(np.abs(y_b - trace.y)) < 1e-6


def test_window_with_incoming_wave_rejected(line_run):
    _, _, _, trace, _ = line_run
    with pytest.raises(ContaminatedWindowError):
        waveline.decay_rate_probe(trace, (0.0, 5.0))


def test_shorted_far_end_runs():
    _, _, _, trace = run_line(FosterSpec(1.0), far_end="shorted", t_max=30.0)
    assert trace.energy_drift() < 1e-9


@pytest.mark.parametrize("omega", [0.5, 1.0, 1.5])
def test_frequency_response(omega):
    load = foster_realize(FosterSpec(0.0, ((0.5, 1.0),)))
    pair = waveline.BoundaryCoupler(load, DX).pair
    obs = Observable.from_output([0.4, -0.7], 0.3, load.c)
    measured, exact = waveline.frequency_response_probe(pair, obs, omega, dt=DX)
    assert abs(measured - exact) <= 1e-4 * abs(exact)


def test_trapezoid_backward_inverts_forward():
    G = np.array([[0.0, 1.0], [-1.0, -1.0]])
    stepper = waveline.TrapezoidStepper(G, np.array([0.0, 2.0]), 0.1)
    xi = np.array([0.3, -0.2])
    nxt = stepper.forward(xi, 0.5, 0.7)
    np.testing.assert_allclose(stepper.backward(nxt, 0.5, 0.7), xi, atol=1e-14)


def test_string_requires_unit_wave_speed():
    load = foster_realize(FosterSpec(1.0))
    with pytest.raises(DegenerateInputError):
        waveline.StringConfig(DX, X_MAX, 10.0, load, tau=1.0, rho=2.0)


def test_string_with_unit_density_matches_line():
    spec = FosterSpec(1.0)
    _, _, _, line_trace = run_line(spec, t_max=20.0)
    cfg = waveline.StringConfig(DX, X_MAX, 20.0, foster_realize(spec), tau=1.0, rho=1.0)
    pair, strace = waveline.string_simulation(cfg, bump_field())
    np.testing.assert_allclose(strace.xi, line_trace.xi, atol=1e-12)
    np.testing.assert_allclose(strace.b_prime, -line_trace.w_bar, atol=1e-12)
    np.testing.assert_allclose(strace.f0, line_trace.i0, atol=1e-12)


@pytest.mark.parametrize("rho", [1.5, 3.0])
def test_string_with_scaled_density(rho):
    load = foster_realize(FosterSpec(0.0, ((0.5, 1.0),)))
    cfg = waveline.StringConfig(DX, X_MAX, T_MAX, load, tau=rho, rho=rho)
    line_load = cfg.line_config().load
    pair, strace = waveline.string_simulation(cfg, bump_field())
    np.testing.assert_allclose(strace.f0, rho * strace.line.i0)
    assert strace.line.boundary_residual(line_load) < 1e-12
    assert strace.line.energy_drift() < 1e-9
    rate = float(np.max(pair.gamma_eigs().real))
    assert rate < 0
    measured = waveline.decay_rate_probe(strace.line, WINDOW)
    assert abs(measured - rate) <= 0.05 * abs(rate)
