"""Foster-form state-space realizations of lossless impedances."""
import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy import linalg, signal

from heatbath.core.errors import DegenerateInputError
from heatbath.core.poly_rational import Polynomial, RationalFunction

logger = logging.getLogger(__name__)

CERTIFICATE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Single-input single-output quadruple (A, b, c, d)."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float = 0.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.size == 0:
            A = np.zeros((0, 0))
        b = np.asarray(self.b, dtype=float).ravel()
        c = np.asarray(self.c, dtype=float).ravel()
        n = A.shape[0]
        if A.shape != (n, n) or b.shape != (n,) or c.shape != (n,):
            raise DegenerateInputError(
                f"inconsistent state-space dimensions: A {A.shape}, b {b.shape}, c {c.shape}"
            )
        for name, arr in (("A", A), ("b", b), ("c", c)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "d", float(self.d))

    @property
    def n(self):
        return self.A.shape[0]


@dataclass(frozen=True)
class FosterSpec:
    """Z(s) = k0/s + sum_i 2 k_i s / (s^2 + omega_i^2).

    `tanks` holds (k_i, omega_i) pairs with strictly increasing omega_i.
    """

    k0: float = 0.0
    tanks: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        tanks = tuple((float(k), float(w)) for k, w in self.tanks)
        object.__setattr__(self, "tanks", tanks)
        object.__setattr__(self, "k0", float(self.k0))
        if not np.isfinite(self.k0) or self.k0 < 0:
            raise DegenerateInputError(f"k0 must be a finite value >= 0, got {self.k0}")
        for k, w in tanks:
            if not (k > 0 and w > 0 and np.isfinite(k) and np.isfinite(w)):
                raise DegenerateInputError(f"tank ({k}, {w}) needs k > 0 and omega > 0")
        omegas = [w for _, w in tanks]
        if any(b <= a for a, b in zip(omegas, omegas[1:])):
            raise DegenerateInputError(f"tank frequencies must be strictly increasing: {omegas}")
        if self.k0 == 0 and not tanks:
            raise DegenerateInputError("empty Foster specification")

    @property
    def dimension(self):
        return (1 if self.k0 > 0 else 0) + 2 * len(self.tanks)

    def eigenvalues(self):
        values = [0j] if self.k0 > 0 else []
        for _, w in self.tanks:
            values.extend([1j * w, -1j * w])
        return np.array(values, dtype=complex)


@dataclass(frozen=True, eq=False)
class LosslessRealization:
    """Load realization (A, b0, c0) with its energy metric Omega."""

    ss: StateSpace
    omega: np.ndarray

    def __post_init__(self):
        omega = np.atleast_2d(np.asarray(self.omega, dtype=float))
        if omega.shape != (self.ss.n, self.ss.n):
            raise DegenerateInputError(f"energy metric shape {omega.shape} != state dimension {self.ss.n}")
        omega.flags.writeable = False
        object.__setattr__(self, "omega", omega)

    @property
    def A(self):
        return self.ss.A

    @property
    def b(self):
        return self.ss.b

    @property
    def c(self):
        return self.ss.c

    @property
    def n(self):
        return self.ss.n

    def energy(self, xi):
        xi = np.asarray(xi, dtype=float)
        return 0.5 * float(xi @ self.omega @ xi)


@dataclass(frozen=True)
class CertificateReport:
    lyapunov_residual: float
    port_residual: float
    max_real_eig: float
    controllability_rank: int
    observability_rank: int
    n: int
    metric_min_eig: float = field(default=float("nan"))

    @property
    def controllable(self):
        return self.controllability_rank == self.n

    @property
    def observable(self):
        return self.observability_rank == self.n

    def is_valid(self, tol=CERTIFICATE_TOL):
        return (
            self.lyapunov_residual <= tol
            and self.port_residual <= tol
            and self.max_real_eig <= tol
            and self.metric_min_eig > 0
        )

    def to_dict(self):
        return {
            "lyapunov_residual": self.lyapunov_residual,
            "port_residual": self.port_residual,
            "max_real_eig": self.max_real_eig,
            "controllability_rank": self.controllability_rank,
            "observability_rank": self.observability_rank,
            "metric_min_eig": self.metric_min_eig,
            "n": self.n,
        }


def foster_to_rational(spec: FosterSpec) -> RationalFunction:
    if spec.k0 == 0 and not spec.tanks:
        raise DegenerateInputError("empty Foster specification")
    Z = RationalFunction.constant(0.0)
    if spec.k0 > 0:
        Z = Z + RationalFunction(Polynomial([spec.k0]), Polynomial([0.0, 1.0]))
    for k, w in spec.tanks:
        Z = Z + RationalFunction(Polynomial([0.0, 2.0 * k]), Polynomial([w * w, 0.0, 1.0]))
    return Z


def foster_realize(spec: FosterSpec) -> LosslessRealization:
    """Capacitor state first, then one skew block per tank; Omega = I."""
    blocks, b_parts = [], []
    if spec.k0 > 0:
        blocks.append(np.zeros((1, 1)))
        b_parts.append([np.sqrt(spec.k0)])
    for k, w in spec.tanks:
        blocks.append(np.array([[0.0, w], [-w, 0.0]]))
        b_parts.append([0.0, np.sqrt(2.0 * k)])
    A = linalg.block_diag(*blocks)
    b = np.concatenate(b_parts)
    ss = StateSpace(A, b, b.copy(), 0.0)
    return LosslessRealization(ss, np.eye(ss.n))


def _clean(coeffs, rtol=1e-12):
    coeffs = np.array(coeffs, dtype=float)
    scale = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    coeffs[np.abs(coeffs) <= rtol * scale] = 0.0
    return coeffs


def transfer_function(ss: StateSpace) -> RationalFunction:
    """c (sI - A)^-1 b + d as a reduced rational function."""
    if ss.n == 0:
        return RationalFunction.constant(ss.d)
    num, den = signal.ss2tf(ss.A, ss.b[:, None], ss.c[None, :], np.array([[ss.d]]))
    num = _clean(np.atleast_2d(num)[0][::-1])
    den = _clean(np.asarray(den)[::-1])
    return RationalFunction(Polynomial(num), Polynomial(den))


def _pbh_ranks(A, b, c, rtol=1e-9):
    n = A.shape[0]
    if n == 0:
        return 0, 0
    eye = np.eye(n)
    scale = max(1.0, float(np.max(np.abs(A))), float(np.max(np.abs(b))), float(np.max(np.abs(c))))
    ctrb, obsv = n, n
    for lam in linalg.eigvals(A):
        M = lam * eye - A
        ctrb = min(ctrb, np.linalg.matrix_rank(np.column_stack([M, b]), tol=rtol * scale))
        obsv = min(obsv, np.linalg.matrix_rank(np.vstack([M, c]), tol=rtol * scale))
    return int(ctrb), int(obsv)


def verify_lossless_certificate(r: LosslessRealization) -> CertificateReport:
    A, b, c, omega = r.A, r.b, r.c, r.omega
    if r.n == 0:
        return CertificateReport(0.0, 0.0, 0.0, 0, 0, 0, float("inf"))
    lyap = float(np.max(np.abs(A.T @ omega + omega @ A)))
    port = float(np.max(np.abs(omega @ b - c)))
    max_re = float(np.max(np.abs(linalg.eigvals(A).real)))
    ctrb, obsv = _pbh_ranks(A, b, c)
    metric_min = float(np.min(linalg.eigvalsh(0.5 * (omega + omega.T))))
    report = CertificateReport(lyap, port, max_re, ctrb, obsv, r.n, metric_min)
    logger.debug("certificate %s", report)
    return report


def scaled(load: LosslessRealization, rho: float) -> LosslessRealization:
    """Impedance scaled by rho: b -> rho b, Omega -> Omega / rho."""
    if not rho > 0:
        raise DegenerateInputError(f"impedance scale must be positive, got {rho}")
    ss = StateSpace(load.A, rho * load.b, load.c, load.ss.d)
    return LosslessRealization(ss, load.omega / rho)


def energy_drift(r: LosslessRealization, xi0, dt=0.01, steps=1000):
    """Max relative change of xi' Omega xi along the autonomous flow, exact propagator."""
    step = linalg.expm(r.A * dt)
    xi = np.asarray(xi0, dtype=float)
    e0 = r.energy(xi)
    if e0 == 0:
        return 0.0
    worst = 0.0
    for _ in range(steps):
        xi = step @ xi
        worst = max(worst, abs(r.energy(xi) - e0) / e0)
    return worst


def random_foster_spec(rng: np.random.Generator, max_dim: int = 8) -> FosterSpec:
    """Well-separated random Foster load with state dimension <= max_dim."""
    if max_dim < 1:
        raise DegenerateInputError("max_dim must be at least 1")
    n_tanks = int(rng.integers(0, max_dim // 2 + 1))
    with_cap = n_tanks == 0 or (2 * n_tanks < max_dim and rng.random() < 0.5)
    k0 = float(rng.uniform(0.2, 2.0)) if with_cap else 0.0
    omegas = 0.3 + np.cumsum(rng.uniform(0.15, 0.8, size=n_tanks))
    ks = rng.uniform(0.2, 2.0, size=n_tanks)
    return FosterSpec(k0, tuple(zip(ks.tolist(), omegas.tolist())))
