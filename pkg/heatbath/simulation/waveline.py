"""Truncated lossless line (or string) driving a lossless load at x = 0.

Unit wave speed, dt = dx. The grid carries the d'Alembert components
A_k = a'(x_k + t) (moving toward the load) and B_k = b'(x_k - t) (moving
away), so one time step is an exact index shift. Only the load ODE needs a
scheme: one trapezoidal step per dt with i0 = -c0 xi + 2 a'(t).
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from heatbath.core.coupling import CoupledModelPair, Observable, close_loops, observable_transfers
from heatbath.core.errors import (
    ContaminatedWindowError,
    DegenerateInputError,
    ReflectionWindowError,
)
from heatbath.core.poly_rational import evaluate
from heatbath.core.realization import LosslessRealization, scaled

logger = logging.getLogger(__name__)

FAR_END_MODES = ("open", "shorted")


@dataclass(frozen=True)
class LineConfig:
    dx: float
    x_max: float
    t_max: float
    load: LosslessRealization
    far_end: str = "open"
    reflection_free: bool = True

    def __post_init__(self):
        if not self.dx > 0:
            raise DegenerateInputError(f"dx must be positive, got {self.dx}")
        if not self.x_max > self.dx:
            raise DegenerateInputError(f"x_max must exceed dx, got {self.x_max}")
        if self.t_max < 0:
            raise DegenerateInputError(f"t_max must be non-negative, got {self.t_max}")
        if self.far_end not in FAR_END_MODES:
            raise DegenerateInputError(f"far_end must be one of {FAR_END_MODES}, got {self.far_end!r}")
        if abs(self.n_cells * self.dx - self.x_max) > 1e-9 * self.x_max:
            raise DegenerateInputError(f"x_max = {self.x_max} is not a multiple of dx = {self.dx}")
        if self.reflection_free and self.t_max >= 2.0 * self.x_max:
            raise ReflectionWindowError(
                f"t_max = {self.t_max} reaches the far-end reflection at 2 x_max = {2 * self.x_max}"
            )

    @property
    def dt(self):
        return self.dx

    @property
    def n_cells(self):
        return int(round(self.x_max / self.dx))

    @property
    def steps(self):
        return int(round(self.t_max / self.dt))

    @property
    def grid(self):
        return np.arange(self.n_cells + 1) * self.dx


@dataclass(frozen=True)
class StringConfig:
    """String with tension tau and density rho; unit wave speed needs tau = rho."""

    dx: float
    x_max: float
    t_max: float
    load: LosslessRealization
    tau: float = 1.0
    rho: float = 1.0
    far_end: str = "open"
    reflection_free: bool = True

    def __post_init__(self):
        if not (self.tau > 0 and self.rho > 0):
            raise DegenerateInputError(f"tau and rho must be positive: {self.tau}, {self.rho}")
        if abs(self.tau - self.rho) > 1e-12 * max(self.tau, self.rho):
            raise DegenerateInputError(f"unit wave speed needs tau = rho, got {self.tau} and {self.rho}")

    def line_config(self) -> LineConfig:
        """Same run in line variables: v -> v, f -> rho i, load impedance scaled by rho."""
        return LineConfig(
            self.dx, self.x_max, self.t_max, scaled(self.load, self.rho),
            self.far_end, self.reflection_free,
        )


@dataclass(eq=False)
class WaveField:
    """a' and b' on the grid; v = a' + b', i = a' - b'."""

    a_prime: np.ndarray
    b_prime: np.ndarray
    dx: float
    t: float = 0.0

    @property
    def v(self):
        return self.a_prime + self.b_prime

    @property
    def i(self):
        return self.a_prime - self.b_prime

    def copy(self):
        return WaveField(self.a_prime.copy(), self.b_prime.copy(), self.dx, self.t)

    def energy(self):
        """Line energy dx * sum over cells of the squared cell-midpoint waves."""
        a_mid = 0.5 * (self.a_prime[1:] + self.a_prime[:-1])
        b_mid = 0.5 * (self.b_prime[1:] + self.b_prime[:-1])
        return self.dx * float(np.sum(a_mid * a_mid) + np.sum(b_mid * b_mid))


def init_waves(v0, i0, dx: float = 1.0) -> WaveField:
    v0 = np.asarray(v0, dtype=float)
    i0 = np.asarray(i0, dtype=float)
    if v0.shape != i0.shape or v0.ndim != 1:
        raise DegenerateInputError(f"v0 and i0 must be 1-D of equal length: {v0.shape} vs {i0.shape}")
    if not (np.all(np.isfinite(v0)) and np.all(np.isfinite(i0))):
        raise DegenerateInputError("initial data must have finite energy")
    return WaveField(0.5 * (v0 + i0), 0.5 * (v0 - i0), float(dx))


def bump(x, center, width):
    """cos^2 bump supported on |x - center| < width."""
    x = np.asarray(x, dtype=float)
    r = (x - center) / width
    return np.where(np.abs(r) < 1.0, np.cos(0.5 * np.pi * r) ** 2, 0.0)


def white_noise_field(n_points: int, dx: float, sigma: float, rng: np.random.Generator) -> WaveField:
    """v0, i0 i.i.d. Gaussian with variance sigma^2 / dx per cell."""
    scale = sigma / np.sqrt(dx)
    return init_waves(scale * rng.standard_normal(n_points), scale * rng.standard_normal(n_points), dx)


def free_incoming(trace: "BoundaryTrace", x_max: float):
    """Incoming wave w(t) for t < x_max, before any far-end data reaches x = 0."""
    return trace.w[trace.t_grid < x_max - 1e-12 * x_max]


class TrapezoidStepper:
    """xi_{n+1} = (I - h/2 G)^-1 [(I + h/2 G) xi_n + h/2 g (u_n + u_{n+1})]."""

    def __init__(self, G, gain, h):
        G = np.atleast_2d(np.asarray(G, dtype=float))
        n = G.shape[0]
        eye = np.eye(n)
        self.h = float(h)
        self.gain = np.asarray(gain, dtype=float)
        self.plus = eye + 0.5 * self.h * G
        self.minus = eye - 0.5 * self.h * G
        self._lu = linalg.lu_factor(self.minus) if n else None

    def forward(self, xi, u_now, u_next):
        rhs = self.plus @ xi + 0.5 * self.h * self.gain * (u_now + u_next)
        return linalg.lu_solve(self._lu, rhs) if self._lu is not None else rhs

    def backward(self, xi_next, u_now, u_next):
        """Solve the same trapezoid relation for xi_n given xi_{n+1}."""
        rhs = self.minus @ xi_next - 0.5 * self.h * self.gain * (u_now + u_next)
        return linalg.solve(self.plus, rhs) if rhs.size else rhs


class BoundaryCoupler:
    """Load state at x = 0, advanced from the incoming wave."""

    def __init__(self, load: LosslessRealization, dt: float, xi0=None, observable: Optional[Observable] = None):
        self.load = load
        self.dt = float(dt)
        self.pair = close_loops(load)
        self.observable = observable
        self.xi = np.zeros(load.n) if xi0 is None else np.array(xi0, dtype=float)
        if self.xi.shape != (load.n,):
            raise DegenerateInputError(f"xi0 has shape {self.xi.shape}, load has {load.n} states")
        self._stepper = TrapezoidStepper(self.pair.gamma, self.pair.input_gain, self.dt)

    def voltage(self):
        return float(self.load.c @ self.xi)

    def current(self, w):
        return -self.voltage() + 2.0 * w

    def output(self, w):
        if self.observable is None:
            return 0.0
        obs = self.observable
        return float(obs.c @ self.xi + obs.d * self.current(w))

    def advance(self, w_now, w_next):
        self.xi = self._stepper.forward(self.xi, w_now, w_next)
        return self.xi


@dataclass(eq=False)
class BoundaryTrace:
    t_grid: np.ndarray
    xi: np.ndarray
    y: np.ndarray
    w: np.ndarray
    w_bar: np.ndarray
    v0: np.ndarray
    i0: np.ndarray
    energy: np.ndarray = field(default_factory=lambda: np.zeros(0))
    far_end_flux: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def dt(self):
        return float(self.t_grid[1] - self.t_grid[0]) if self.t_grid.size > 1 else 0.0

    def boundary_residual(self, load: LosslessRealization):
        """max |v0 - c0 xi| over the trace."""
        return float(np.max(np.abs(self.v0 - self.xi @ load.c), initial=0.0))

    def energy_drift(self):
        """Max relative change of line + load + far-end outflow."""
        total = self.energy + self.far_end_flux
        if total.size == 0 or total[0] == 0:
            return 0.0
        return float(np.max(np.abs(total - total[0])) / abs(total[0]))


def propagate(field_: WaveField, steps: int, boundary: BoundaryCoupler, far_end: str = "open",
              reflection_free: bool = True):
    """Advance the line and the load `steps` times; returns (field, trace)."""
    if abs(boundary.dt - field_.dx) > 1e-12 * field_.dx:
        raise DegenerateInputError(f"exact characteristics need dt = dx, got {boundary.dt} vs {field_.dx}")
    if far_end not in FAR_END_MODES:
        raise DegenerateInputError(f"far_end must be one of {FAR_END_MODES}, got {far_end!r}")
    n_cells = field_.a_prime.size - 1
    x_max = n_cells * field_.dx
    if reflection_free and field_.t + steps * boundary.dt >= 2.0 * x_max:
        raise ReflectionWindowError(
            f"run to t = {field_.t + steps * boundary.dt:g} reaches the far-end reflection at {2 * x_max:g}"
        )

    f = field_.copy()
    A, B, dx = f.a_prime, f.b_prime, f.dx
    load = boundary.load
    B[0] = boundary.voltage() - A[0]

    n = load.n
    xi = np.empty((steps + 1, n))
    w = np.empty(steps + 1)
    y = np.empty(steps + 1)
    v0 = np.empty(steps + 1)
    energy = np.empty(steps + 1)
    flux = np.zeros(steps + 1)

    def record(k):
        xi[k] = boundary.xi
        w[k] = A[0]
        y[k] = boundary.output(A[0])
        v0[k] = A[0] + B[0]
        energy[k] = f.energy() + load.energy(boundary.xi)

    record(0)
    for k in range(1, steps + 1):
        inflow = 0.0 if far_end == "open" else -B[n_cells - 1]
        outflow = dx * (0.25 * (B[n_cells - 1] + B[n_cells]) ** 2 - 0.25 * (A[n_cells] + inflow) ** 2)
        w_now = A[0]
        A[:-1] = A[1:]
        A[-1] = inflow
        B[1:] = B[:-1].copy()
        boundary.advance(w_now, A[0])
        B[0] = boundary.voltage() - A[0]
        f.t += boundary.dt
        flux[k] = flux[k - 1] + outflow
        record(k)

    t_grid = field_.t + boundary.dt * np.arange(steps + 1)
    w_bar = w - xi @ load.c
    i0 = 2.0 * w - v0
    trace = BoundaryTrace(t_grid, xi, y, w, w_bar, v0, i0, energy, flux)
    logger.debug("propagated %d steps, energy drift %.3e", steps, trace.energy_drift())
    return f, trace


def reduced_forward(pair: CoupledModelPair, obs: Observable, w, xi0, dt: float):
    """xi' = Gamma xi + 2 b0 w, y = h xi + 2 d w, trapezoidal."""
    w = np.asarray(w, dtype=float)
    stepper = TrapezoidStepper(pair.gamma, pair.input_gain, dt)
    xi = np.empty((w.size, pair.n))
    xi[0] = xi0
    for k in range(w.size - 1):
        xi[k + 1] = stepper.forward(xi[k], w[k], w[k + 1])
    y = xi @ obs.h + 2.0 * obs.d * w
    return xi, y


def reduced_backward(pair: CoupledModelPair, obs: Observable, w_bar, xiT, dt: float):
    """xi' = Gamma_bar xi + 2 b0 w_bar from the terminal state, y = h_bar xi + 2 d w_bar."""
    w_bar = np.asarray(w_bar, dtype=float)
    stepper = TrapezoidStepper(pair.gamma_bar, pair.input_gain, dt)
    xi = np.empty((w_bar.size, pair.n))
    xi[-1] = xiT
    for k in range(w_bar.size - 2, -1, -1):
        xi[k] = stepper.backward(xi[k + 1], w_bar[k], w_bar[k + 1])
    y = xi @ obs.h_bar + 2.0 * obs.d * w_bar
    return xi, y


def decay_rate_probe(trace: BoundaryTrace, window, w_tol: float = 1e-9) -> float:
    """Least-squares slope of log ||xi(t)|| on [t1, t2]."""
    t1, t2 = window
    mask = (trace.t_grid >= t1) & (trace.t_grid <= t2)
    if np.count_nonzero(mask) < 2:
        raise DegenerateInputError(f"window {window} holds fewer than two samples")
    scale = max(float(np.max(np.abs(trace.w), initial=0.0)), 1e-300)
    if np.max(np.abs(trace.w[mask])) > w_tol * scale:
        raise ContaminatedWindowError(f"incoming wave is still active inside window {window}")
    norms = np.linalg.norm(trace.xi[mask], axis=1)
    if norms[0] == 0 or np.any(norms == 0):
        raise DegenerateInputError("load state vanishes in the window; no decay to measure")
    slope, _ = np.polyfit(trace.t_grid[mask], np.log(norms), 1)
    return float(slope)


def frequency_response_probe(pair: CoupledModelPair, obs: Observable, omega: float, dt: float = 1e-3,
                             periods: int = 40):
    """Measured and exact W(j omega) from a sinusoidally driven forward model."""
    t = np.arange(0.0, periods * 2.0 * np.pi / omega, dt)
    w = np.cos(omega * t)
    _, y = reduced_forward(pair, obs, w, np.zeros(pair.n), dt)
    tail = t >= 0.5 * t[-1]
    design = np.column_stack([np.cos(omega * t[tail]), np.sin(omega * t[tail])])
    (a, b), *_ = linalg.lstsq(design, y[tail])
    W, _ = observable_transfers(pair, obs)
    return complex(a, -b), evaluate(W, 1j * omega)


@dataclass(eq=False)
class StringTrace:
    """Boundary series in string variables; b_prime is b'(t) = -w_bar(t)."""

    t_grid: np.ndarray
    xi: np.ndarray
    v0: np.ndarray
    f0: np.ndarray
    a_prime: np.ndarray
    b_prime: np.ndarray
    line: BoundaryTrace


def string_simulation(cfg: StringConfig, field_: WaveField, xi0=None, observable=None):
    """Run the line engine for a string; returns (line pair, string trace)."""
    line_cfg = cfg.line_config()
    coupler = BoundaryCoupler(line_cfg.load, line_cfg.dt, xi0, observable)
    _, trace = propagate(field_, line_cfg.steps, coupler, line_cfg.far_end, line_cfg.reflection_free)
    string_trace = StringTrace(
        trace.t_grid, trace.xi, trace.v0, cfg.rho * trace.i0, trace.w, -trace.w_bar, trace,
    )
    return coupler.pair, string_trace
