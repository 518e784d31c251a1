"""Real polynomials and rational transfer functions.

Coefficients are stored lowest degree first, the numpy.polynomial convention.
Rational functions are kept in reduced form (common roots cancelled by root
matching) with a monic denominator, so two equal functions have equal
coefficients up to floating noise.
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial import polynomial as P

from heatbath.core.errors import (
    DegenerateInputError,
    NotSpectralDensityError,
    PoleEvaluationError,
)

logger = logging.getLogger(__name__)

DEGREE_CAP = 32
ROOT_SNAP_TOL = 1e-8      # |Re r| < tol * (1 + |r|) counts as imaginary axis
ROOT_MATCH_TOL = 1e-7     # relative distance for cancelling common roots
ROOT_BACKWARD_TOL = 1e-9  # |p(z)| / sum_k |c_k| |z|^k accepted for a cancelled root
COEFF_RTOL = 1e-12        # relative size below which a leading coefficient is noise


def _as_real_array(coeffs):
    arr = np.atleast_1d(np.asarray(coeffs))
    if np.iscomplexobj(arr):
        if np.any(np.abs(arr.imag) > 1e-9 * max(1.0, float(np.max(np.abs(arr))))):
            raise DegenerateInputError(f"complex coefficients are not supported: {arr}")
        arr = arr.real
    return np.array(arr, dtype=float)


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Real polynomial, coefficients lowest degree first.

    The zero polynomial has `degree is None`.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        arr = _as_real_array(self.coeffs)
        if not np.all(np.isfinite(arr)):
            raise DegenerateInputError(f"non-finite polynomial coefficients: {arr}")
        nonzero = np.flatnonzero(arr)
        arr = arr[: nonzero[-1] + 1] if nonzero.size else np.zeros(0)
        if arr.size - 1 > DEGREE_CAP:
            raise DegenerateInputError(
                f"polynomial degree {arr.size - 1} exceeds the cap of {DEGREE_CAP}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def from_roots(cls, roots, lead=1.0):
        roots = np.asarray(roots, dtype=complex)
        if roots.size == 0:
            return cls([lead])
        return cls(lead * P.polyfromroots(roots).real)

    @classmethod
    def constant(cls, value):
        return cls([value])

    @property
    def degree(self):
        return None if self.is_zero else self.coeffs.size - 1

    @property
    def is_zero(self):
        return self.coeffs.size == 0

    @property
    def lead(self):
        return float(self.coeffs[-1]) if self.coeffs.size else 0.0

    def trim(self, rtol=COEFF_RTOL):
        """Drop leading coefficients that are noise relative to the largest one."""
        if self.is_zero:
            return self
        arr = self.coeffs.copy()
        big = np.max(np.abs(arr))
        keep = np.flatnonzero(np.abs(arr) > rtol * big)
        return Polynomial(arr[: keep[-1] + 1])

    def __call__(self, s):
        if self.is_zero:
            return np.zeros_like(np.asarray(s, dtype=complex))
        return P.polyval(s, self.coeffs)

    def __add__(self, other):
        other = _coerce_poly(other)
        return Polynomial(P.polyadd(self._safe(), other._safe()))

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce_poly(other)
        return Polynomial(P.polysub(self._safe(), other._safe()))

    def __rsub__(self, other):
        return _coerce_poly(other) - self

    def __mul__(self, other):
        other = _coerce_poly(other)
        if self.is_zero or other.is_zero:
            return Polynomial([0.0])
        return Polynomial(P.polymul(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __neg__(self):
        return Polynomial(-self._safe())

    def __divmod__(self, other):
        other = _coerce_poly(other)
        if other.is_zero:
            raise DegenerateInputError("polynomial division by zero")
        if self.is_zero:
            return Polynomial([0.0]), Polynomial([0.0])
        quo, rem = P.polydiv(self.coeffs, other.coeffs)
        return Polynomial(quo), Polynomial(rem)

    def mirror(self):
        """p(-s)."""
        signs = (-1.0) ** np.arange(self.coeffs.size)
        return Polynomial(self.coeffs * signs)

    def even_part(self):
        arr = self._safe().copy()
        arr[1::2] = 0.0
        return Polynomial(arr)

    def odd_part(self):
        arr = self._safe().copy()
        arr[0::2] = 0.0
        return Polynomial(arr)

    def derivative(self):
        if self.degree is None or self.degree == 0:
            return Polynomial([0.0])
        return Polynomial(P.polyder(self.coeffs))

    def monic(self):
        if self.is_zero:
            raise DegenerateInputError("the zero polynomial has no monic form")
        return Polynomial(self.coeffs / self.lead)

    def roots(self):
        return roots(self)

    def max_abs(self):
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def _safe(self):
        return self.coeffs if self.coeffs.size else np.zeros(1)

    def __repr__(self):
        return f"Polynomial({list(self.coeffs)})"


def _coerce_poly(value):
    if isinstance(value, Polynomial):
        return value
    return Polynomial(np.atleast_1d(value))


def _pair_conjugates(values, tol):
    """Make complex roots come in exactly conjugate pairs."""
    values = np.asarray(values, dtype=complex)
    scale = 1.0 + np.abs(values)
    real_mask = np.abs(values.imag) <= tol * scale
    out = list(values[real_mask].real.astype(complex))
    upper = [v for v in values[~real_mask] if v.imag > 0]
    lower = [v for v in values[~real_mask] if v.imag < 0]
    for u in upper:
        if lower:
            k = int(np.argmin([abs(u - np.conj(lo)) for lo in lower]))
            mid = 0.5 * (u + np.conj(lower.pop(k)))
        else:
            mid = u
        out.extend([mid, np.conj(mid)])
    for lo in lower:
        out.extend([np.conj(lo), lo])
    return np.array(sorted(out, key=lambda z: (z.real, z.imag)), dtype=complex)


def roots(p: Polynomial):
    """Roots of `p` with multiplicity, conjugate pairs returned exactly conjugate."""
    p = _coerce_poly(p)
    if p.is_zero:
        raise DegenerateInputError("roots of the zero polynomial are undefined")
    if p.degree == 0:
        return np.zeros(0, dtype=complex)
    raw = P.polyroots(p.coeffs)
    return _pair_conjugates(raw, tol=1e-10)


def snap_to_axis(values, tol=ROOT_SNAP_TOL):
    values = np.array(values, dtype=complex)
    mask = np.abs(values.real) < tol * (1.0 + np.abs(values))
    values[mask] = 1j * values[mask].imag
    return values, mask


def _common_roots(num_roots, den_roots, tol):
    unused = list(den_roots)
    common = []
    for z in num_roots:
        if not unused:
            break
        dist = [abs(z - p) for p in unused]
        k = int(np.argmin(dist))
        if dist[k] <= tol * (1.0 + abs(z)):
            common.append(0.5 * (z + unused.pop(k)))
    return common


@dataclass(frozen=True, eq=False)
class RationalFunction:
    """num(s)/den(s), reduced, with a monic denominator."""

    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        num = _coerce_poly(self.num)
        den = _coerce_poly(self.den)
        if den.is_zero:
            raise DegenerateInputError("rational function with zero denominator")
        if num.is_zero:
            num, den = Polynomial([0.0]), Polynomial([1.0])
        elif not getattr(self, "_skip_reduce", False):
            num, den = _reduce(num, den)
        lead = den.lead
        object.__setattr__(self, "num", Polynomial(num.coeffs / lead) if not num.is_zero else num)
        object.__setattr__(self, "den", Polynomial(den.coeffs / lead))

    @classmethod
    def unreduced(cls, num, den):
        """Keep num/den as given (only the denominator is made monic)."""
        obj = cls.__new__(cls)
        object.__setattr__(obj, "_skip_reduce", True)
        object.__setattr__(obj, "num", num)
        object.__setattr__(obj, "den", den)
        obj.__post_init__()
        return obj

    @classmethod
    def constant(cls, value):
        return cls(Polynomial([value]), Polynomial([1.0]))

    @classmethod
    def from_coeffs(cls, num, den):
        return cls(Polynomial(num), Polynomial(den))

    @classmethod
    def s(cls):
        return cls(Polynomial([0.0, 1.0]), Polynomial([1.0]))

    @cached_property
    def poles(self):
        return roots(self.den)

    @cached_property
    def zeros(self):
        if self.num.is_zero:
            return np.zeros(0, dtype=complex)
        return roots(self.num)

    @property
    def is_zero(self):
        return self.num.is_zero

    @property
    def relative_degree(self):
        if self.num.is_zero:
            return None
        return self.den.degree - self.num.degree

    @property
    def is_proper(self):
        return self.num.is_zero or self.relative_degree >= 0

    @property
    def is_strictly_proper(self):
        return self.num.is_zero or self.relative_degree >= 1

    def value_at_infinity(self):
        rel = self.relative_degree
        if rel is None or rel > 0:
            return 0.0
        if rel == 0:
            return self.num.lead / self.den.lead
        return float("inf")

    def __call__(self, s):
        """Vectorized num(s)/den(s) without the pole check."""
        return self.num(s) / self.den(s)

    def __add__(self, other):
        other = _coerce_rational(other)
        return _trimmed(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce_rational(other)
        return _trimmed(self.num * other.den - other.num * self.den, self.den * other.den)

    def __rsub__(self, other):
        return _coerce_rational(other) - self

    def __mul__(self, other):
        other = _coerce_rational(other)
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce_rational(other)
        if other.is_zero:
            raise DegenerateInputError("division by the zero rational function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return _coerce_rational(other) / self

    def __neg__(self):
        return RationalFunction(-self.num, self.den)

    def inverse(self):
        return RationalFunction.constant(1.0) / self

    def mirror(self):
        """R(-s)."""
        return RationalFunction(self.num.mirror(), self.den.mirror())

    def identity_residual(self, other):
        """Relative size of num1*den2 - num2*den1."""
        other = _coerce_rational(other)
        lhs = self.num * other.den
        rhs = other.num * self.den
        scale = max(lhs.max_abs(), rhs.max_abs(), 1e-300)
        return (lhs - rhs).max_abs() / scale

    def allclose(self, other, rtol=1e-8):
        """Rational identity check by cross multiplication."""
        return self.identity_residual(other) <= rtol

    def coefficient_distance(self, other):
        """Largest coefficient gap between normalized forms, relative to their size."""
        other = _coerce_rational(other)
        if self.num.degree != other.num.degree or self.den.degree != other.den.degree:
            return float("inf")
        scale = max(self.num.max_abs(), self.den.max_abs(), other.num.max_abs(), other.den.max_abs())
        gap = max(
            (self.num - other.num).max_abs() if not self.num.is_zero else 0.0,
            (self.den - other.den).max_abs(),
        )
        return gap / scale

    def pretty(self, digits=6):
        num = _pretty_poly(self.num, digits)
        den = _pretty_poly(self.den, digits)
        if den == "1":
            return num
        return f"({num})/({den})"

    def __repr__(self):
        return f"RationalFunction({self.pretty()})"


def _pretty_poly(p, digits):
    if p.is_zero:
        return "0"
    terms = []
    for k, c in enumerate(p.coeffs):
        if c == 0:
            continue
        mag = f"{abs(c):.{digits}g}"
        if k == 0:
            body = mag
        else:
            power = "s" if k == 1 else f"s^{k}"
            body = power if mag == "1" else f"{mag}*{power}"
        terms.append(("-" if c < 0 else "+", body))
    sign, body = terms[0]
    text = ("-" if sign == "-" else "") + body
    for sign, body in terms[1:]:
        text += f" {sign} {body}"
    return text


def _coerce_rational(value):
    if isinstance(value, RationalFunction):
        return value
    if isinstance(value, Polynomial):
        return RationalFunction(value, Polynomial([1.0]))
    return RationalFunction.constant(float(value))


def _trimmed(num, den):
    return RationalFunction(num.trim(), den)


def root_backward_error(p: Polynomial, z) -> float:
    """|p(z)| relative to sum_k |c_k| |z|^k; zero for an exact root."""
    z = complex(z)
    scale = float(np.sum(np.abs(p.coeffs) * np.abs(z) ** np.arange(p.coeffs.size)))
    return abs(complex(p(z))) / scale if scale > 0 else 0.0


def _real_factor(z):
    if z.imag == 0:
        return Polynomial([-z.real, 1.0])
    return Polynomial([abs(z) ** 2, -2.0 * z.real, 1.0])


def _reduce(num, den):
    """Cancel common roots one real factor at a time.

    A candidate pair matched by distance is only cancelled when it is a root
    of both current polynomials to ROOT_BACKWARD_TOL; the discarded division
    remainders are then at rounding level.
    """
    if num.degree == 0 or den.degree == 0:
        return num, den
    common = _common_roots(roots(num), roots(den), ROOT_MATCH_TOL)
    cancelled, skipped = [], []
    for z in common:
        if z.imag < 0:
            continue
        factor = _real_factor(z)
        if num.degree < factor.degree or den.degree < factor.degree:
            break
        if max(root_backward_error(num, z), root_backward_error(den, z)) > ROOT_BACKWARD_TOL:
            skipped.append(z)
            continue
        num, _ = divmod(num, factor)
        den, _ = divmod(den, factor)
        cancelled.append(z)
    if cancelled or skipped:
        logger.debug("cancelled common root(s) %s, kept near-common %s",
                     np.round(cancelled, 10), np.round(skipped, 10))
    return num, den


def evaluate(R: RationalFunction, s) -> complex:
    """R(s) for a single point, refusing to evaluate at a pole."""
    s = complex(s)
    poles = R.poles
    if poles.size and np.min(np.abs(poles - s)) <= 1e-10 * (1.0 + abs(s)):
        raise PoleEvaluationError(s)
    den = complex(R.den(s))
    if den == 0:
        raise PoleEvaluationError(s)
    return complex(R.num(s)) / den


def is_lossless_pr(Z: RationalFunction, tol: float = ROOT_SNAP_TOL) -> bool:
    """Lossless positive-real test: odd, simple interlacing poles and zeros on
    the imaginary axis, degrees differing by one, positive residues."""
    if Z.is_zero:
        return False
    num, den = Z.num, Z.den
    if abs(num.degree - den.degree) != 1:
        return False
    odd_residual = num.mirror() * den + num * den.mirror()
    scale = max((num * den).max_abs(), 1e-300)
    if not odd_residual.is_zero and odd_residual.max_abs() > 1e-9 * scale:
        return False

    zeros, zero_on_axis = snap_to_axis(Z.zeros, tol)
    poles, pole_on_axis = snap_to_axis(Z.poles, tol)
    if not (np.all(zero_on_axis) and np.all(pole_on_axis)):
        return False

    marks = sorted([(z.imag, "z") for z in zeros] + [(p.imag, "p") for p in poles])
    for (a, kind_a), (b, kind_b) in zip(marks, marks[1:]):
        if abs(b - a) <= tol * (1.0 + abs(a)):
            return False
        if kind_a == kind_b:
            return False
    return num.lead / den.lead > 0


def is_inner(K: RationalFunction, tol: float = 1e-8) -> bool:
    """Stable all-pass test: poles in the open left half-plane and K(s)K(-s) = 1."""
    if K.is_zero:
        return False
    poles = K.poles
    if poles.size and np.any(poles.real >= -tol * (1.0 + np.abs(poles))):
        return False
    num, den = K.num, K.den
    lhs = num * num.mirror()
    rhs = den * den.mirror()
    scale = max(lhs.max_abs(), rhs.max_abs())
    return (lhs - rhs).max_abs() <= tol * scale


def spectral_factor(Phi: RationalFunction, tol: float = ROOT_SNAP_TOL):
    """Analytic/coanalytic spectral factors (W, Wbar) of an even density Phi.

    W carries the left half-plane poles and zeros of Phi. Wbar shares the
    zeros of W and carries the reflected poles, so Wbar^-1 W = d(-s)/d(s) is
    inner; Wbar(s) = W(-s) whenever W has no finite zeros.
    """
    if Phi.is_zero:
        raise NotSpectralDensityError("the zero function is not a spectral density")
    num, den = Phi.num, Phi.den
    parity = num.mirror() * den - num * den.mirror()
    scale = max((num * den).max_abs(), 1e-300)
    if not parity.is_zero and parity.max_abs() > 1e-9 * scale:
        raise NotSpectralDensityError(f"density is not even: Phi(-s) != Phi(s) for {Phi.pretty()}")

    zeros, poles = Phi.zeros, Phi.poles
    for label, values in (("zero", zeros), ("pole", poles)):
        _, on_axis = snap_to_axis(values, tol)
        if np.any(on_axis):
            raise NotSpectralDensityError(
                f"density has an imaginary-axis {label} at {values[on_axis][0]:.6g}"
            )

    left_zeros = zeros[zeros.real < 0]
    left_poles = poles[poles.real < 0]
    if 2 * left_zeros.size != zeros.size or 2 * left_poles.size != poles.size:
        raise NotSpectralDensityError("roots of Phi are not symmetric about the imaginary axis")

    n_w = Polynomial.from_roots(left_zeros)
    d_w = Polynomial.from_roots(left_poles)
    gain2 = evaluate(Phi, 0.0).real / (n_w(0.0) / d_w(0.0)) ** 2
    if not gain2 > 0:
        raise NotSpectralDensityError("density is negative on the imaginary axis")
    gain = float(np.sqrt(gain2))
    W = RationalFunction(gain * n_w, d_w)
    Wbar = RationalFunction(gain * n_w, d_w.mirror())
    return W, Wbar
