"""Heat-bath feedback closure around a lossless load.

A load (A, b0, c0) attached to the end of a unit line sees the port current
i0 = -c0 xi + 2 w, where w is the incoming wave. Eliminating i0 once with the
incoming and once with the outgoing wave gives the stable matrix
Gamma = A - b0 c0 and the antistable Gamma_bar = A + b0 c0. The scattering
function K = (Z0 - 1)/(Z0 + 1) is inner and does not depend on what is
observed.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from heatbath.core.errors import (
    DegenerateInputError,
    HeatBathError,
    ImproperResultError,
    InvalidLoadError,
    NotLosslessError,
    NotSpectralDensityError,
    ScatteringMismatchError,
    StageError,
)
from heatbath.core.poly_rational import (
    RationalFunction,
    evaluate,
    is_inner,
    is_lossless_pr,
    snap_to_axis,
    spectral_factor,
)
from heatbath.core.realization import (
    FosterSpec,
    LosslessRealization,
    StateSpace,
    foster_realize,
    foster_to_rational,
    random_foster_spec,
    transfer_function,
    verify_lossless_certificate,
)
from heatbath.core.utils import match_spectra

logger = logging.getLogger(__name__)

CROSS_CHECK_TOL = 1e-6
ALLPASS_GRID = np.logspace(-3, 3, 200)


@dataclass(frozen=True, eq=False)
class CoupledModelPair:
    gamma: np.ndarray
    gamma_bar: np.ndarray
    input_gain: np.ndarray
    K: RationalFunction
    b0: np.ndarray
    c0: np.ndarray

    @property
    def n(self):
        return self.gamma.shape[0]

    def gamma_eigs(self):
        return linalg.eigvals(self.gamma) if self.n else np.zeros(0, dtype=complex)

    def gamma_bar_eigs(self):
        return linalg.eigvals(self.gamma_bar) if self.n else np.zeros(0, dtype=complex)


@dataclass(frozen=True, eq=False)
class Observable:
    """Scalar output y = c xi + d i0 and its feedback-adjusted rows."""

    c: np.ndarray
    d: float
    h: np.ndarray
    h_bar: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        h = np.asarray(self.h, dtype=float).ravel()
        h_bar = np.asarray(self.h_bar, dtype=float).ravel()
        if not (c.shape == h.shape == h_bar.shape):
            raise DegenerateInputError("observable rows have inconsistent lengths")
        if np.max(np.abs(h + h_bar - 2 * c), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(c), initial=0.0)):
            raise DegenerateInputError("observable rows violate h + h_bar = 2c")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "h_bar", h_bar)
        object.__setattr__(self, "d", float(self.d))

    @classmethod
    def from_output(cls, c, d, c0):
        c = np.asarray(c, dtype=float).ravel()
        c0 = np.asarray(c0, dtype=float).ravel()
        return cls(c, d, c - d * c0, c + d * c0)

    @classmethod
    def state(cls, load: LosslessRealization, index: int = 0):
        """Observe one load state coordinate."""
        c = np.zeros(load.n)
        c[index] = 1.0
        return cls.from_output(c, 0.0, load.c)


def close_loops(load: LosslessRealization) -> CoupledModelPair:
    report = verify_lossless_certificate(load)
    if not report.is_valid():
        raise InvalidLoadError(f"load fails the lossless certificate: {report.to_dict()}")
    b0, c0 = load.b, load.c
    feedback = np.outer(b0, c0)
    gamma = load.A - feedback
    gamma_bar = load.A + feedback
    Z0 = transfer_function(load.ss)
    K = scattering_K(Z0)
    pair = CoupledModelPair(gamma, gamma_bar, 2.0 * b0, K, b0, c0)
    K_ss = scattering_K_statespace(pair, load)
    if not K.allclose(K_ss, rtol=CROSS_CHECK_TOL):
        raise ScatteringMismatchError(
            f"scattering routes disagree: {K.pretty()} vs {K_ss.pretty()}"
        )
    return pair


def scattering_formula(Z: RationalFunction) -> RationalFunction:
    """(Z - 1)/(Z + 1) with no admissibility checks."""
    return RationalFunction((Z.num - Z.den).trim(), (Z.num + Z.den).trim())


def scattering_K(Z0: RationalFunction) -> RationalFunction:
    if not is_lossless_pr(Z0):
        raise NotLosslessError(f"impedance is not lossless positive-real: {Z0.pretty()}")
    if not Z0.is_strictly_proper:
        raise ImproperResultError(f"impedance must be strictly proper: {Z0.pretty()}")
    return scattering_formula(Z0)


def scattering_K_statespace(pair: CoupledModelPair, load: LosslessRealization) -> RationalFunction:
    """K from the two closed-loop port transfers.

    The quotient c0(sI-Gamma)^-1 b0 / c0(sI-Gamma_bar)^-1 b0 maps w to
    w_bar = -b'(-t); K maps w to b'(-t), hence the sign.
    """
    forward = transfer_function(StateSpace(pair.gamma, pair.b0, pair.c0))
    backward = transfer_function(StateSpace(pair.gamma_bar, pair.b0, pair.c0))
    return -(forward / backward)


def observable_transfers(pair: CoupledModelPair, obs: Observable):
    """(W, W_bar) with W = 2[h(sI-Gamma)^-1 b0 + d], W_bar = -2[h_bar(sI-Gamma_bar)^-1 b0 + d].

    W maps the incoming wave to y; W_bar maps the reflected wave b'(-t) to y,
    so W_bar^-1 W = K for every observable.
    """
    if obs.h.shape != (pair.n,):
        raise DegenerateInputError(f"observable has {obs.h.size} entries, state has {pair.n}")
    W = 2.0 * transfer_function(StateSpace(pair.gamma, pair.b0, obs.h, obs.d))
    W_bar = -2.0 * transfer_function(StateSpace(pair.gamma_bar, pair.b0, obs.h_bar, obs.d))
    return W, W_bar


def invert_K_to_Z(K: RationalFunction) -> RationalFunction:
    if not is_inner(K):
        raise NotLosslessError(f"scattering function is not inner: {K.pretty()}")
    k_inf = K.value_at_infinity()
    if abs(k_inf + 1.0) > 1e-8:
        raise ImproperResultError(
            f"K(inf) = {k_inf:.6g}; a strictly proper load needs K(inf) = -1"
        )
    num = (K.den + K.num).trim()
    den = (K.den - K.num).trim()
    if num.is_zero or num.max_abs() <= 1e-12 * den.max_abs():
        logger.warning("K = -1 inverts to the short circuit Z = 0")
        return RationalFunction.constant(0.0)
    Z = RationalFunction(num, den)
    if not is_lossless_pr(Z):
        raise NotLosslessError(f"inverted impedance is not lossless: {Z.pretty()}")
    return Z


def foster_decompose(Z: RationalFunction, tol: float = 1e-8) -> FosterSpec:
    """Partial fractions of a strictly proper lossless Z into Foster form."""
    if not Z.is_strictly_proper or Z.is_zero:
        raise ImproperResultError(f"Foster decomposition needs a strictly proper Z: {Z.pretty()}")
    poles, on_axis = snap_to_axis(Z.poles, tol)
    if not np.all(on_axis):
        raise InvalidLoadError(f"impedance has poles off the imaginary axis: {Z.poles}")
    dden = Z.den.derivative()
    k0 = 0.0
    tanks = []
    for p in poles:
        if abs(p) <= tol:
            k0 = float(np.real(Z.num(0.0) / dden(0.0)))
        elif p.imag > 0:
            residue = complex(Z.num(p) / dden(p))
            tanks.append((residue.real, p.imag))
    bad = [(k, w) for k, w in [(k0, 0.0)] + tanks if k < 0]
    if bad:
        raise InvalidLoadError(f"negative Foster residue(s) (k, omega) = {bad} for Z = {Z.pretty()}")
    tanks.sort(key=lambda item: item[1])
    return FosterSpec(k0, tuple(tanks))


def allpass_residual(K: RationalFunction, omegas=ALLPASS_GRID) -> float:
    return float(np.max(np.abs(np.abs(K(1j * np.asarray(omegas))) - 1.0)))


def mirror_residual(pair: CoupledModelPair) -> float:
    return match_spectra(pair.gamma_bar_eigs(), -pair.gamma_eigs())


def random_observable(rng: np.random.Generator, load: LosslessRealization) -> Observable:
    c = rng.standard_normal(load.n)
    d = float(rng.standard_normal()) if rng.random() < 0.5 else 0.0
    return Observable.from_output(c, d, load.c)


def fit_observable(pair: CoupledModelPair, W: RationalFunction, n_points: int = 64) -> Observable:
    """Observable whose forward transfer reproduces W.

    The feedthrough is fixed by W at infinity; the row h solves the resolvent
    equations on a frequency grid in least squares.
    """
    if not W.is_proper:
        raise ImproperResultError(f"observable transfer must be proper: {W.pretty()}")
    if pair.n == 0:
        raise DegenerateInputError("cannot fit an observable on an empty state")
    d = 0.5 * W.value_at_infinity()
    grid = 1j * np.logspace(-1.5, 1.5, n_points)
    eye = np.eye(pair.n)
    rows = np.array([linalg.solve(s * eye - pair.gamma, pair.b0) for s in grid])
    target = 0.5 * np.array([evaluate(W, s) for s in grid]) - d
    lhs = np.vstack([rows.real, rows.imag])
    rhs = np.concatenate([target.real, target.imag])
    h, *_ = linalg.lstsq(lhs, rhs)
    return Observable.from_output(h + d * pair.c0, d, pair.c0)


@dataclass(frozen=True, eq=False)
class BathSynthesis:
    Phi: RationalFunction
    W: RationalFunction
    W_bar: RationalFunction
    K: RationalFunction
    Z: RationalFunction
    spec: FosterSpec
    load: LosslessRealization
    pair: CoupledModelPair
    observable: Optional[Observable] = None

    def spectrum_residual(self, omegas=ALLPASS_GRID) -> float:
        """Max relative gap between |W_obs(j omega)|^2 and Phi(j omega)."""
        if self.observable is None:
            return float("nan")
        W_obs, _ = observable_transfers(self.pair, self.observable)
        s = 1j * np.asarray(omegas)
        phi = self.Phi(s).real
        return float(np.max(np.abs(np.abs(W_obs(s)) ** 2 - phi) / np.abs(phi)))


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except HeatBathError as exc:
        raise StageError(name, exc) from exc
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise StageError(name, exc) from exc


def _scattering_from_factors(W, W_bar, omegas=(0.1, 0.37, 1.0, 3.7)):
    """W_bar^-1 W = d(-s)/d(s) for the factors of `spectral_factor`, signed so that K(inf) = -1.

    K is assembled from the denominator of W rather than by dividing the
    factors. A constant density has no pole to carry the sign and gives K = 1.
    """
    d = W.den
    if not d.degree:
        return RationalFunction.constant(1.0)
    sign = -1.0 if d.degree % 2 == 0 else 1.0
    K = RationalFunction.unreduced(sign * d.mirror(), d)
    for omega in omegas:
        s = 1j * omega
        direct = sign * evaluate(W, s) / evaluate(W_bar, s)
        if abs(direct - evaluate(K, s)) > CROSS_CHECK_TOL * abs(direct):
            raise ScatteringMismatchError(f"W_bar^-1 W disagrees with d(-s)/d(s) at s = {s}")
    return K


def spectrum_to_bath(Phi: RationalFunction, fit: bool = True) -> BathSynthesis:
    """Spectral density -> factors -> K -> Z0 -> Foster load -> closed loops."""
    W, W_bar = _stage("spectral_factor", spectral_factor, Phi)
    K = _stage("scattering", _scattering_from_factors, W, W_bar)
    Z = _stage("invert", invert_K_to_Z, K)
    spec = _stage("foster", foster_decompose, Z)
    load = _stage("realize", foster_realize, spec)
    pair = _stage("close_loops", close_loops, load)
    observable = _stage("observable", fit_observable, pair, W) if fit else None
    logger.debug("synthesized Z0 = %s from Phi = %s", Z.pretty(), Phi.pretty())
    return BathSynthesis(Phi, W, W_bar, K, Z, spec, load, pair, observable)


def random_spectral_density(rng: np.random.Generator, max_dim: int = 8, attempts: int = 20):
    """(spec, Phi) with Phi = |W|^2 for a random observable of a random Foster load."""
    for _ in range(attempts):
        spec = random_foster_spec(rng, max_dim)
        load = foster_realize(spec)
        pair = close_loops(load)
        obs = random_observable(rng, load)
        W, _ = observable_transfers(pair, obs)
        if W.is_zero or W.den.degree != pair.n:
            continue
        Phi = W * W.mirror()
        try:
            spectral_factor(Phi)
        except NotSpectralDensityError:
            continue
        return spec, Phi
    raise DegenerateInputError("could not draw an admissible spectral density")


def load_summary(spec: FosterSpec):
    """Everything the coupling report needs for one load."""
    load = foster_realize(spec)
    pair = close_loops(load)
    Z0 = foster_to_rational(spec)
    K_ss = scattering_K_statespace(pair, load)
    return {
        "Z0": Z0,
        "load": load,
        "pair": pair,
        "K_statespace": K_ss,
        "mirror_residual": mirror_residual(pair),
        "allpass_residual": allpass_residual(pair.K),
        "K_route_distance": pair.K.coefficient_distance(K_ss),
        "max_re_gamma": float(np.max(pair.gamma_eigs().real)),
    }
