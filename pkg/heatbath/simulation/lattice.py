"""Harmonic chain heat bath with a Brownian particle at site 0.

Sites -M..M are stored at indices 0..2M (site k at index k + M) with Dirichlet
ends. The flow is propagated exactly in the sine (DST-I) eigenbasis of the
tridiagonal potential, so energy is conserved to rounding and the only
discretization left is the sampling step.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import fft, integrate as sp_integrate, linalg, signal, sparse

from heatbath.core.errors import DegenerateInputError, ReflectionWindowError
from heatbath.core.poly_rational import Polynomial, RationalFunction
from heatbath.core.statmech import autocovariance, periodicity_probe

logger = logging.getLogger(__name__)

TIME_CHUNK = 512


@dataclass(frozen=True)
class ChainConfig:
    half_width: int
    c: float = 1.0
    beta: float = 1.0
    dt: float = 0.05
    t_max: float = 10.0
    seed: int = 0
    reflection_free: bool = True

    def __post_init__(self):
        if int(self.half_width) != self.half_width or self.half_width < 2:
            raise DegenerateInputError(f"half_width must be an integer >= 2, got {self.half_width}")
        if not self.c > 0:
            raise DegenerateInputError(f"coupling c must be positive, got {self.c}")
        if self.beta < 0:
            raise DegenerateInputError(f"beta must be non-negative, got {self.beta}")
        if not self.dt > 0 or self.t_max < 0:
            raise DegenerateInputError(f"need dt > 0 and t_max >= 0, got {self.dt}, {self.t_max}")
        # Group velocity is at most c sites per unit time, so the Dirichlet
        # ends are felt at site 0 only after M / c.
        if self.reflection_free and self.t_max >= self.reflection_time:
            raise ReflectionWindowError(
                f"t_max = {self.t_max} reaches the truncation boundary at M/c = {self.reflection_time}"
            )

    @property
    def n_sites(self):
        return 2 * self.half_width + 1

    @property
    def reflection_time(self):
        return self.half_width / self.c

    @property
    def steps(self):
        return int(round(self.t_max / self.dt))

    @property
    def t_grid(self):
        return self.dt * np.arange(self.steps + 1)

    def index(self, site):
        return site + self.half_width


@dataclass(eq=False)
class ChainState:
    q: np.ndarray
    p: np.ndarray

    def energy(self, c):
        """0.5 |p|^2 + 0.5 q' V^2 q."""
        V2 = _dirichlet_matrix(self.q.size, c)
        return 0.5 * float(self.p @ self.p) + 0.5 * float(self.q @ (V2 @ self.q))


@dataclass(eq=False)
class ParticleTrace:
    t_grid: np.ndarray
    q0: np.ndarray
    p0: np.ndarray
    w: np.ndarray
    w_bar: np.ndarray
    q_left: np.ndarray
    q_right: np.ndarray
    energy_start: float = float("nan")
    energy_end: float = float("nan")

    @property
    def dt(self):
        return float(self.t_grid[1] - self.t_grid[0]) if self.t_grid.size > 1 else 0.0

    def energy_drift(self):
        if not self.energy_start:
            return 0.0
        return abs(self.energy_end - self.energy_start) / abs(self.energy_start)


@dataclass(frozen=True, eq=False)
class BrownianModelPair:
    """2x2 forward/backward models of the particle state (q0, p0)."""

    c: float
    gamma: np.ndarray
    gamma_bar: np.ndarray
    input_gain: np.ndarray
    Q: RationalFunction

    def gamma_eigs(self):
        return linalg.eigvals(self.gamma)

    def gamma_bar_eigs(self):
        return linalg.eigvals(self.gamma_bar)

    def is_time_reflection(self):
        return bool(np.allclose(self.gamma_bar, -self.gamma))


@dataclass(frozen=True)
class SymbolFactor:
    upper_stencil: tuple
    lower_stencil: tuple
    product_stencil: tuple
    reproduces_potential: bool


def _dirichlet_matrix(n, c):
    c2 = c * c
    return sparse.diags([-c2 * np.ones(n - 1), 2 * c2 * np.ones(n), -c2 * np.ones(n - 1)], [-1, 0, 1], format="csr")


def build_potential(half_width: int, c: float):
    """Sparse tridiagonal V^2 of the chain on sites -M..M (diagonal 2c^2, off-diagonal -c^2)."""
    if half_width < 1:
        raise DegenerateInputError(f"half_width must be >= 1, got {half_width}")
    return _dirichlet_matrix(2 * half_width + 1, c)


def _potential_banded(n, c):
    """Upper banded storage of V^2 for cholesky_banded / solve_banded."""
    c2 = c * c
    ab = np.empty((2, n))
    ab[0, 0] = 0.0
    ab[0, 1:] = -c2
    ab[1, :] = 2 * c2
    return ab


def dirichlet_frequencies(n, c):
    """omega_k = 2c sin(k pi / (2(n + 1))), k = 1..n."""
    k = np.arange(1, n + 1)
    return 2.0 * c * np.sin(0.5 * k * np.pi / (n + 1))


def mode_rows(n, indices):
    """Rows of the orthonormal DST-I eigenvector matrix for the given site indices."""
    j = np.asarray(indices)[:, None] + 1
    k = np.arange(1, n + 1)[None, :]
    return np.sqrt(2.0 / (n + 1)) * np.sin(j * k * np.pi / (n + 1))


def to_modes(x):
    return fft.dst(np.asarray(x, dtype=float), type=1, norm="ortho", axis=-1)


def from_modes(x_hat):
    return fft.idst(np.asarray(x_hat, dtype=float), type=1, norm="ortho", axis=-1)


def factor_symbol(c: float) -> SymbolFactor:
    """V* rows c(q_{k+1} - q_k) and the check V V* = c^2 [-1, 2, -1]."""
    if not c > 0:
        raise DegenerateInputError(f"coupling c must be positive, got {c}")
    upper = (-c, c)       # offsets 0, +1
    lower = (c, -c)       # offsets -1, 0
    product = tuple(np.convolve(lower, upper).tolist())
    expected = (-c * c, 2 * c * c, -c * c)
    return SymbolFactor(upper, lower, product, bool(np.allclose(product, expected, rtol=0, atol=1e-15 * c * c)))


def whitening_operator(n, c):
    """Truncated V*: (V* q)_k = c (q_{k+1} - q_k) with q beyond the end clamped to 0."""
    return sparse.diags([-c * np.ones(n), c * np.ones(n - 1)], [0, 1], format="csr")


def sample_invariant_batch(cfg: ChainConfig, size: int, rng: np.random.Generator):
    """(q, p) arrays of shape (size, n) drawn from the truncated Gibbs measure."""
    n = cfg.n_sites
    if cfg.beta == 0:
        return np.zeros((size, n)), np.zeros((size, n))
    scale = np.sqrt(cfg.beta)
    p = scale * rng.standard_normal((size, n))
    upper = linalg.cholesky_banded(_potential_banded(n, cfg.c), lower=False)
    z = scale * rng.standard_normal((n, size))
    q = linalg.solve_banded((0, 1), upper, z).T
    return q, p


def sample_invariant(cfg: ChainConfig, rng: Optional[np.random.Generator] = None) -> ChainState:
    """p ~ N(0, beta I), q ~ N(0, beta (V^2)^-1) via banded Cholesky factor-solve."""
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    q, p = sample_invariant_batch(cfg, 1, rng)
    return ChainState(q[0], p[0])


def _site_series(rows, omegas, q_hat, p_hat, times):
    """q and p at the selected sites for every time, shape (len(times), len(rows))."""
    q_out = np.empty((times.size, rows.shape[0]))
    p_out = np.empty_like(q_out)
    q_rows = rows * q_hat
    p_rows = rows * p_hat
    for start in range(0, times.size, TIME_CHUNK):
        phase = np.outer(times[start : start + TIME_CHUNK], omegas)
        cos, sin = np.cos(phase), np.sin(phase)
        q_out[start : start + TIME_CHUNK] = cos @ q_rows.T + sin @ (p_rows / omegas).T
        p_out[start : start + TIME_CHUNK] = cos @ p_rows.T - sin @ (q_rows * omegas).T
    return q_out, p_out


def evolve_state(state: ChainState, c: float, t: float) -> ChainState:
    n = state.q.size
    omegas = dirichlet_frequencies(n, c)
    q_hat, p_hat = to_modes(state.q), to_modes(state.p)
    cos, sin = np.cos(omegas * t), np.sin(omegas * t)
    q_t = from_modes(q_hat * cos + p_hat / omegas * sin)
    p_t = from_modes(p_hat * cos - q_hat * omegas * sin)
    return ChainState(q_t, p_t)


def integrate(state: ChainState, cfg: ChainConfig) -> ParticleTrace:
    """Exact spectral propagation sampled every dt; records site 0 and its waves."""
    n = cfg.n_sites
    if state.q.shape != (n,) or state.p.shape != (n,):
        raise DegenerateInputError(f"state has {state.q.size} sites, config expects {n}")
    omegas = dirichlet_frequencies(n, cfg.c)
    q_hat, p_hat = to_modes(state.q), to_modes(state.p)
    rows = mode_rows(n, [cfg.index(-1), cfg.index(0), cfg.index(1)])
    times = cfg.t_grid
    q_sites, p_sites = _site_series(rows, omegas, q_hat, p_hat, times)
    q_left, q0, q_right = q_sites[:, 0], q_sites[:, 1], q_sites[:, 2]
    p0 = p_sites[:, 1]
    c = cfg.c
    spring = c * (q_right - q0) + c * (q_left - q0)
    w = 0.25 * (spring + 2.0 * p0)
    w_bar = 0.25 * (spring - 2.0 * p0)

    e0 = state.energy(c)
    e1 = evolve_state(state, c, times[-1]).energy(c)
    trace = ParticleTrace(times, q0, p0, w, w_bar, q_left, q_right, e0, e1)
    logger.debug("chain M=%d integrated to t=%g, energy drift %.2e", cfg.half_width, times[-1], trace.energy_drift())
    return trace


def langevin_residual_series(trace: ParticleTrace, c: float):
    """Central-difference residuals of the forward and backward Langevin identities."""
    dt = trace.dt
    if trace.t_grid.size < 3:
        return np.zeros(0), np.zeros(0)
    dp = (trace.p0[2:] - trace.p0[:-2]) / (2.0 * dt)
    p = trace.p0[1:-1]
    forward = dp + 2.0 * c * p - 4.0 * c * trace.w[1:-1]
    backward = dp - 2.0 * c * p - 4.0 * c * trace.w_bar[1:-1]
    return forward, backward


def langevin_residual(trace: ParticleTrace, c: float):
    """(max forward residual, max backward residual)."""
    forward, backward = langevin_residual_series(trace, c)
    return float(np.max(np.abs(forward), initial=0.0)), float(np.max(np.abs(backward), initial=0.0))


def convergence_order(state: ChainState, cfg: ChainConfig):
    """Measured order of both residuals under dt halving, on the coarse time points."""
    coarse = integrate(state, cfg)
    fine = integrate(state, replace(cfg, dt=0.5 * cfg.dt))
    orders = []
    for coarse_res, fine_res in zip(langevin_residual_series(coarse, cfg.c), langevin_residual_series(fine, cfg.c)):
        shared = fine_res[1::2][: coarse_res.size]
        ratio = np.max(np.abs(coarse_res[: shared.size])) / np.max(np.abs(shared))
        orders.append(float(np.log2(ratio)))
    return tuple(orders)


def reduced_models(c: float) -> BrownianModelPair:
    if not c > 0:
        raise DegenerateInputError(f"coupling c must be positive, got {c}")
    gamma = np.array([[0.0, 1.0], [0.0, -2.0 * c]])
    gamma_bar = np.array([[0.0, 1.0], [0.0, 2.0 * c]])
    Q = RationalFunction(Polynomial([-2.0 * c, 1.0]), Polynomial([2.0 * c, 1.0]))
    return BrownianModelPair(float(c), gamma, gamma_bar, np.array([0.0, 4.0 * c]), Q)


def symbol_oracle(t, c: float, beta: float = 1.0):
    """beta * (1/pi) * integral_0^pi cos(2 c t sin(theta/2)) d theta, by quadrature."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    values = [
        sp_integrate.quad(lambda th: np.cos(2.0 * c * tk * np.sin(0.5 * th)), 0.0, np.pi, limit=200)[0] / np.pi
        for tk in t
    ]
    return beta * np.array(values)


def truncated_momentum_oracle(t, cfg: ChainConfig):
    """Exact E[p0(t) p0(0)] of the truncated chain: beta sum_k S_0k^2 cos(omega_k t)."""
    n = cfg.n_sites
    omegas = dirichlet_frequencies(n, cfg.c)
    weights = mode_rows(n, [cfg.index(0)])[0] ** 2
    return cfg.beta * np.cos(np.outer(np.atleast_1d(t), omegas)) @ weights


def truncated_wave_oracle(t, cfg: ChainConfig):
    """Exact E[w(t) w(0)]: beta sum_k cos(omega_k t) (a_k^2 / omega_k^2 + b_k^2)."""
    n = cfg.n_sites
    omegas = dirichlet_frequencies(n, cfg.c)
    s0 = mode_rows(n, [cfg.index(0)])[0]
    a = -s0 * omegas ** 2 / (4.0 * cfg.c)
    b = 0.5 * s0
    weights = a * a / omegas ** 2 + b * b
    return cfg.beta * np.cos(np.outer(np.atleast_1d(t), omegas)) @ weights


def _lagged_products(x, n_lags):
    """Time-averaged x(s + tau) x(s) over the common origins, tau = 0..n_lags-1."""
    n_origins = x.size - n_lags + 1
    return signal.correlate(x, x[:n_origins], mode="valid") / n_origins


def _lagged_msd(x, n_lags):
    n_origins = x.size - n_lags + 1
    csum = np.concatenate([[0.0], np.cumsum(x * x)])
    head = csum[n_origins] - csum[0]
    tails = csum[np.arange(n_lags) + n_origins] - csum[np.arange(n_lags)]
    cross = signal.correlate(x, x[:n_origins], mode="valid")
    return (tails + head - 2.0 * cross) / n_origins


@dataclass(eq=False)
class AutocorrReport:
    lags: np.ndarray
    empirical: np.ndarray
    oracle: np.ndarray
    truncated_oracle: np.ndarray
    wave_empirical: np.ndarray
    wave_oracle: np.ndarray
    msd: np.ndarray
    msd_slope: float
    p0_variance: float
    n_runs: int

    def max_deviation(self, beta):
        return float(np.max(np.abs(self.empirical - self.oracle)) / beta) if beta else 0.0


def _single_run(cfg: ChainConfig, seed_seq, n_lags):
    rng = np.random.default_rng(seed_seq)
    trace = integrate(sample_invariant(cfg, rng), cfg)
    return (
        _lagged_products(trace.p0, n_lags),
        _lagged_products(trace.w, n_lags),
        _lagged_msd(trace.q0, n_lags),
        float(np.mean(trace.p0 ** 2)),
    )


def momentum_autocorr(cfg: ChainConfig, n_runs: int, max_lag: Optional[float] = None,
                      workers: Optional[int] = None) -> AutocorrReport:
    """Ensemble and time averaged E[p0(t) p0(0)] with its oracles.

    Runs use independent child seeds of cfg.seed and are reduced in seed
    order, so the result does not depend on the worker count.
    """
    if n_runs < 1:
        raise DegenerateInputError(f"n_runs must be >= 1, got {n_runs}")
    max_lag = 0.5 * cfg.t_max if max_lag is None else max_lag
    n_lags = int(round(max_lag / cfg.dt)) + 1
    if n_lags > cfg.steps:
        raise DegenerateInputError(f"max_lag {max_lag} leaves no time origins in t_max {cfg.t_max}")
    children = np.random.SeedSequence(cfg.seed).spawn(n_runs)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda ss: _single_run(cfg, ss, n_lags), children))
    p_prod = np.mean([r[0] for r in results], axis=0)
    w_prod = np.mean([r[1] for r in results], axis=0)
    msd = np.mean([r[2] for r in results], axis=0)
    p_var = float(np.mean([r[3] for r in results]))
    lags = cfg.dt * np.arange(n_lags)
    tail = lags >= 0.5 * lags[-1]
    slope = float(np.polyfit(lags[tail], msd[tail], 1)[0]) if np.count_nonzero(tail) > 1 else float("nan")
    return AutocorrReport(
        lags, p_prod, symbol_oracle(lags, cfg.c, cfg.beta), truncated_momentum_oracle(lags, cfg),
        w_prod, truncated_wave_oracle(lags, cfg), msd, slope, p_var, n_runs,
    )


def wave_spectrum(trace: ParticleTrace, max_lag: int):
    """Autocovariance and periodogram of the incoming wave, reported without a flatness claim."""
    return autocovariance(trace.w, max_lag, dt=trace.dt)


def isolated_chain_series(n_sites: int, c: float, dt: float, t_max: float):
    """Momentum at an end site of an isolated N-site chain released from a unit end displacement."""
    if n_sites < 1:
        raise DegenerateInputError(f"n_sites must be >= 1, got {n_sites}")
    omegas = dirichlet_frequencies(n_sites, c)
    s_end = mode_rows(n_sites, [0])[0]
    t = np.arange(0.0, t_max, dt)
    return t, -np.sin(np.outer(t, omegas)) @ (s_end * s_end * omegas)


def isolated_peak_count(n_sites: int, c: float = 1.0, dt: float = 0.1, t_max: float = 4000.0,
                        threshold: float = 1e-5) -> int:
    _, p = isolated_chain_series(n_sites, c, dt, t_max)
    return periodicity_probe(p, dt, threshold)


def whitening_covariance(cfg: ChainConfig, n_samples: int, rng: np.random.Generator, sites=(-1, 0, 1)):
    """Sample covariance of V* q at the given sites, normalized by beta."""
    q, _ = sample_invariant_batch(cfg, n_samples, rng)
    x = (whitening_operator(cfg.n_sites, cfg.c) @ q.T).T
    idx = [cfg.index(s) for s in sites]
    cov = x[:, idx].T @ x[:, idx] / n_samples
    return cov / cfg.beta if cfg.beta else cov


def whitening_target(cfg: ChainConfig, n_sites: int = 3):
    """Exact normalized covariance of truncated V* q: I - 11'/(n + 1)."""
    return np.eye(n_sites) - np.ones((n_sites, n_sites)) / (cfg.n_sites + 1)
