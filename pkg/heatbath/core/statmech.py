"""Maxwell-Boltzmann statistics, entropy functionals and series estimators."""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import integrate, signal, stats

from heatbath.core.errors import DegenerateInputError

logger = logging.getLogger(__name__)

QUAD_OPTS = {"epsabs": 1e-13, "epsrel": 1e-12, "limit": 200}


@dataclass(frozen=True)
class MBParams:
    mass: float = 1.0
    kT: float = 1.0
    k_boltzmann: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0 and self.kT > 0 and self.k_boltzmann > 0):
            raise DegenerateInputError(
                f"mass, kT and k must be positive: m={self.mass}, kT={self.kT}, k={self.k_boltzmann}"
            )

    @property
    def sigma(self):
        return float(np.sqrt(self.kT / self.mass))


def mb_speed_pdf(params: MBParams, v):
    """4 pi (m / 2 pi kT)^(3/2) v^2 exp(-m v^2 / 2 kT)."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise DegenerateInputError("speeds must be non-negative")
    a = params.mass / (2.0 * params.kT)
    return 4.0 * np.pi * (a / np.pi) ** 1.5 * v * v * np.exp(-a * v * v)


def _velocity_log_density(params: MBParams, v):
    """log of the 3D Gaussian velocity density at a vector of speed |v|."""
    var = params.kT / params.mass
    return -1.5 * np.log(2.0 * np.pi * var) - 0.5 * v * v / var


def mb_normalization(params: MBParams) -> float:
    value, _ = integrate.quad(lambda v: mb_speed_pdf(params, v), 0.0, np.inf, **QUAD_OPTS)
    return value


def mean_kinetic_energy(params: MBParams) -> float:
    integrand = lambda v: 0.5 * params.mass * v * v * mb_speed_pdf(params, v)
    value, _ = integrate.quad(integrand, 0.0, np.inf, **QUAD_OPTS)
    return value


def mb_mode(params: MBParams) -> float:
    return float(np.sqrt(2.0 * params.kT / params.mass))


def sample_mb_velocities(params: MBParams, n: int, seed=None) -> np.ndarray:
    """(n, 3) Gaussian velocity components with variance kT/m."""
    if n < 1:
        raise DegenerateInputError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return params.sigma * rng.standard_normal((n, 3))


def sample_mb(params: MBParams, n: int, seed=None) -> np.ndarray:
    """Speeds sigma * sqrt(g1^2 + g2^2 + g3^2)."""
    return np.sqrt(np.sum(sample_mb_velocities(params, n, seed) ** 2, axis=1))


def ks_chi2_test(speeds, params: MBParams, alpha: float = 0.01):
    """Kolmogorov-Smirnov statistic of v^2/sigma^2 against chi^2(3) and the exact critical value."""
    speeds = np.asarray(speeds, dtype=float)
    x = speeds ** 2 / params.sigma ** 2
    result = stats.kstest(x, stats.chi2(3).cdf)
    critical = float(stats.kstwo.ppf(1.0 - alpha, x.size))
    return float(result.statistic), critical


def kl_mb(T0: float, T1: float) -> float:
    """KL(p_T0 || p_T1) of Maxwell-Boltzmann laws: (3/2)(r - 1 - ln r), r = T0/T1."""
    if not (T0 > 0 and T1 > 0):
        raise DegenerateInputError(f"temperatures must be positive: T0={T0}, T1={T1}")
    r = T0 / T1
    return 1.5 * (r - 1.0 - np.log(r))


def kl_mb_quadrature(T0: float, T1: float, mass: float = 1.0) -> float:
    if not (T0 > 0 and T1 > 0):
        raise DegenerateInputError(f"temperatures must be positive: T0={T0}, T1={T1}")
    p0, p1 = MBParams(mass, T0), MBParams(mass, T1)

    def integrand(v):
        log_ratio = _velocity_log_density(p0, v) - _velocity_log_density(p1, v)
        return log_ratio * mb_speed_pdf(p0, v)

    value, _ = integrate.quad(integrand, 0.0, np.inf, **QUAD_OPTS)
    return value


def negentropy_mb(params: MBParams) -> float:
    """k * integral of p log p for the velocity density, integrated radially over speeds."""
    integrand = lambda v: _velocity_log_density(params, v) * mb_speed_pdf(params, v)
    value, _ = integrate.quad(integrand, 0.0, np.inf, **QUAD_OPTS)
    return params.k_boltzmann * value


def negentropy_mb_closed(params: MBParams) -> float:
    return -1.5 * params.k_boltzmann * np.log(2.0 * np.pi * np.e * params.kT / params.mass)


@dataclass(frozen=True, eq=False)
class SeriesStats:
    lags: np.ndarray
    acov: np.ndarray
    band: float
    freqs: np.ndarray
    power: np.ndarray

    def inside_band_fraction(self):
        if self.lags.size <= 1:
            return 1.0
        return float(np.mean(np.abs(self.acov[1:]) <= self.band))


def autocovariance(series, max_lag: int, dt: float = 1.0) -> SeriesStats:
    """Biased autocovariance with a +-3 acov[0]/sqrt(n) band, plus a Hann periodogram."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if max_lag < 0 or n <= 4 * max_lag:
        raise DegenerateInputError(f"series of length {n} too short for max_lag {max_lag}")
    x = x - x.mean()
    full = signal.correlate(x, x, mode="full", method="auto")
    acov = full[n - 1 : n + max_lag] / n
    band = 3.0 * acov[0] / np.sqrt(n)
    freqs, power = signal.periodogram(x, fs=1.0 / dt, window="hann", detrend=False)
    return SeriesStats(np.arange(max_lag + 1) * dt, acov, float(band), freqs, power)


def spectral_peaks(series, dt: float, threshold: float = 1e-5):
    """Frequencies of Blackman-Harris periodogram peaks above threshold * max."""
    x = np.asarray(series, dtype=float)
    freqs, power = signal.periodogram(x, fs=1.0 / dt, window="blackmanharris", detrend="constant")
    top = float(np.max(power)) if power.size else 0.0
    if top <= 0:
        return np.zeros(0)
    peaks, _ = signal.find_peaks(power, height=threshold * top, distance=2)
    return freqs[peaks]


def periodicity_probe(series, dt: float, threshold: float = 1e-5) -> int:
    """Number of distinct spectral lines of a uniformly sampled series."""
    count = int(spectral_peaks(series, dt, threshold).size)
    logger.debug("periodicity probe: %d peaks above %.1e of max", count, threshold)
    return count
