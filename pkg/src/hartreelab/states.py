"""Log-domain representations of symmetric many-qubit states.

Amplitudes of collectively evolved states grow or shrink like exp(c*N*t),
which overflows double precision long before the physics becomes
uninteresting.  Everything here therefore stores magnitudes as natural
logarithms and phases separately; conversion to ordinary complex numbers
happens only after normalization, when all quantities are O(1).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

__all__ = [
    "LogComplex",
    "QubitState",
    "DickeState",
    "DensityMatrix",
    "ModelSpec",
    "log_sum_exp_complex",
    "dicke_log_binomial",
    "product_state",
]

_TWO_PI = 2.0 * math.pi


def _wrap_phase(phase):
    """Reduce a phase (scalar or array) to the interval (-pi, pi]."""
    out = np.mod(np.asarray(phase, dtype=float) + math.pi, _TWO_PI) - math.pi
    out = np.where(out == -math.pi, math.pi, out)
    if np.ndim(phase) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class LogComplex:
    """A complex number stored as (log magnitude, phase).

    ``log_mag`` is ln|z|, with ``-inf`` encoding zero; ``phase`` is the
    argument in (-pi, pi].  Multiplication adds log magnitudes and phases,
    so products of numbers with wildly different scales never overflow.

    Attributes
    ----------
    log_mag : float
        Natural logarithm of the magnitude; ``-inf`` means exactly zero.
    phase : float
        Argument in radians, reduced to (-pi, pi].
    """

    log_mag: float
    phase: float = 0.0

    @staticmethod
    def zero() -> "LogComplex":
        """The absorbing zero element."""
        return LogComplex(-math.inf, 0.0)

    @staticmethod
    def from_complex(z: complex) -> "LogComplex":
        """Represent an ordinary complex number in log form."""
        z = complex(z)
        if z == 0:
            return LogComplex.zero()
        return LogComplex(math.log(abs(z)), math.atan2(z.imag, z.real))

    @property
    def is_zero(self) -> bool:
        return self.log_mag == -math.inf

    def to_complex(self) -> complex:
        """Convert back to an ordinary complex number.

        Overflows for log_mag above ~709; callers are expected to
        normalize first.
        """
        if self.is_zero:
            return 0j
        return math.exp(self.log_mag) * cmath.exp(1j * self.phase)

    def __mul__(self, other: "LogComplex") -> "LogComplex":
        if self.is_zero or other.is_zero:
            return LogComplex.zero()
        return LogComplex(
            self.log_mag + other.log_mag,
            _wrap_phase(self.phase + other.phase),
        )


def log_sum_exp_complex(terms) -> LogComplex:
    """Sum LogComplex terms by factoring out the largest magnitude.

    Parameters
    ----------
    terms : sequence of LogComplex
        Non-empty collection of summands.

    Returns
    -------
    LogComplex
        The sum.  All-zero input returns the zero element, as does exact
        cancellation of the rescaled residual.
    """
    terms = list(terms)
    if not terms:
        raise ValueError("log_sum_exp_complex requires at least one term")
    log_mags = np.array([t.log_mag for t in terms])
    phases = np.array([t.phase for t in terms])
    lm, ph = _log_sum_exp_arrays(log_mags, phases)
    return LogComplex(lm, ph)


def _log_sum_exp_arrays(log_mags: np.ndarray, phases: np.ndarray) -> tuple[float, float]:
    """Vectorized kernel behind :func:`log_sum_exp_complex`.

    Returns the (log_mag, phase) pair of sum(exp(log_mags) * cis(phases)).
    Residuals at the rounding floor of the rescaled summation cannot be
    distinguished from exact cancellation and collapse to zero.
    """
    m = float(np.max(log_mags))
    if m == -math.inf:
        return -math.inf, 0.0
    weights = np.exp(log_mags - m)
    s = complex(np.sum(weights * np.exp(1j * phases)))
    floor = 4.0 * np.finfo(float).eps * float(np.sum(weights))
    if abs(s) <= floor:
        return -math.inf, 0.0
    return m + math.log(abs(s)), math.atan2(s.imag, s.real)


def _log_sum_exp_real(log_values: np.ndarray) -> float:
    """log(sum(exp(log_values))) for nonnegative summands."""
    m = float(np.max(log_values))
    if m == -math.inf:
        return -math.inf
    return m + math.log(float(np.sum(np.exp(log_values - m))))


def dicke_log_binomial(n_total: int, n_chosen: int) -> float:
    """ln C(n_total, n_chosen) via log-gamma.

    A single code path serves n_total from 2 up to 10**6 without overflow
    or iterated rounding.
    """
    if not 0 <= n_chosen <= n_total:
        raise ValueError(
            f"binomial index out of range: need 0 <= {n_chosen} <= {n_total}"
        )
    return (
        math.lgamma(n_total + 1)
        - math.lgamma(n_chosen + 1)
        - math.lgamma(n_total - n_chosen + 1)
    )


@lru_cache(maxsize=64)
def _log_binomial_row(n_total: int) -> np.ndarray:
    """Array of ln C(n_total, n) for n = 0..n_total.  Cached per n_total."""
    n = np.arange(n_total + 1, dtype=float)
    row = gammaln(n_total + 1.0) - gammaln(n + 1.0) - gammaln(n_total - n + 1.0)
    row.flags.writeable = False
    return row


@dataclass(frozen=True)
class QubitState:
    """A normalized single-qubit wavefunction (c0, c1)."""

    c0: complex
    c1: complex

    def __post_init__(self):
        norm_sq = abs(self.c0) ** 2 + abs(self.c1) ** 2
        if abs(norm_sq - 1.0) > 1e-12:
            raise ValueError(f"qubit state not normalized: |c|^2 = {norm_sq!r}")

    @staticmethod
    def from_unnormalized(c0: complex, c1: complex) -> "QubitState":
        norm = math.hypot(abs(c0), abs(c1))  # overflow-safe
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return QubitState(c0 / norm, c1 / norm)

    @staticmethod
    def from_probability(p0: float, theta0: float = 0.0, theta1: float = 0.0) -> "QubitState":
        """State with |c0|^2 = p0 and prescribed amplitude phases."""
        if not 0.0 <= p0 <= 1.0:
            raise ValueError(f"p0 must lie in [0, 1], got {p0}")
        return QubitState(
            cmath.exp(1j * theta0) * math.sqrt(p0),
            cmath.exp(1j * theta1) * math.sqrt(1.0 - p0),
        )

    @property
    def prob0(self) -> float:
        return abs(self.c0) ** 2

    @property
    def prob1(self) -> float:
        return abs(self.c1) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.c0, self.c1], dtype=complex)

    def projector(self) -> np.ndarray:
        """The pure density matrix |phi><phi| as a 2x2 array."""
        v = self.as_array()
        return np.outer(v, v.conj())


@dataclass(frozen=True)
class DickeState:
    """A (possibly unnormalized) state in the symmetric subspace of N qubits.

    The basis is indexed by n = 0..N, where n counts qubits in |0>.
    Amplitudes are stored in log form: ``log_mags[n]`` is ln of the
    amplitude magnitude (-inf for zero) and ``phases[n]`` its argument.
    """

    n_particles: int
    log_mags: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("n_particles must be positive")
        lm = np.asarray(self.log_mags, dtype=float)
        ph = np.asarray(self.phases, dtype=float)
        if lm.shape != (self.n_particles + 1,) or ph.shape != (self.n_particles + 1,):
            raise ValueError(
                f"amplitude vectors must have length N+1 = {self.n_particles + 1}"
            )
        lm = lm.copy()
        ph = ph.copy()
        lm.flags.writeable = False
        ph.flags.writeable = False
        object.__setattr__(self, "log_mags", lm)
        object.__setattr__(self, "phases", ph)
        norm_log = self.squared_norm_log()
        if not (math.isfinite(norm_log)):
            raise ValueError("squared norm must be finite and strictly positive")

    @staticmethod
    def from_amplitudes(amplitudes) -> "DickeState":
        """Build from a sequence of N+1 LogComplex amplitudes."""
        amps = list(amplitudes)
        return DickeState(
            n_particles=len(amps) - 1,
            log_mags=np.array([a.log_mag for a in amps]),
            phases=np.array([a.phase for a in amps]),
        )

    @property
    def amplitudes(self) -> tuple[LogComplex, ...]:
        return tuple(
            LogComplex(float(lm), float(ph))
            for lm, ph in zip(self.log_mags, self.phases)
        )

    def amplitude(self, n: int) -> LogComplex:
        return LogComplex(float(self.log_mags[n]), float(self.phases[n]))

    def squared_norm_log(self) -> float:
        """ln <Psi|Psi>, computed stably from the log magnitudes."""
        return _log_sum_exp_real(2.0 * self.log_mags)


@dataclass(frozen=True)
class DensityMatrix:
    """A k-qubit Hermitian matrix with an explicit log-domain scale.

    The physical matrix is ``entries * exp(log_scale)``.  Unnormalized
    marginals of evolved states have traces like exp(N*f*t), so the scale
    is kept separate: ``entries`` always holds O(1) numbers (trace 1 for
    states produced by the marginal routines) and ``log_scale`` carries
    the growth.  A normalized state has ``log_scale == 0``.
    """

    k: int
    entries: np.ndarray
    log_scale: float = 0.0

    def __post_init__(self):
        dim = 2 ** self.k
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (dim, dim):
            raise ValueError(f"entries must be {dim}x{dim} for k={self.k}")
        dev = np.abs(m - m.conj().T).max()
        if dev > 1e-12 * max(1.0, np.abs(m).max()):
            raise ValueError(f"matrix is not Hermitian: max |M - M^dag| = {dev}")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return 2 ** self.k

    def trace(self) -> float:
        """Trace of ``entries`` (the physical trace is this times exp(log_scale))."""
        return float(np.trace(self.entries).real)

    def log_trace(self) -> float:
        """ln of the physical trace."""
        tr = self.trace()
        if tr <= 0:
            raise ValueError("trace must be positive")
        return self.log_scale + math.log(tr)

    def normalized(self) -> "DensityMatrix":
        tr = self.trace()
        if tr <= 0:
            raise ValueError("cannot normalize: nonpositive trace")
        return DensityMatrix(self.k, self.entries / tr, 0.0)

    def require_normalized(self, tol: float = 1e-8) -> None:
        if self.log_scale != 0.0 or abs(self.trace() - 1.0) > tol:
            raise ValueError("density matrix is not normalized to unit trace")

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries).min())

    def trace_last_qubit(self) -> "DensityMatrix":
        """Partial trace over the last qubit."""
        if self.k < 2:
            raise ValueError("need at least two qubits to trace one out")
        d = 2 ** (self.k - 1)
        t = self.entries.reshape(d, 2, d, 2)
        return DensityMatrix(self.k - 1, np.einsum("abcb->ac", t), self.log_scale)


_SWAP_2Q = np.zeros((4, 4))
_SWAP_2Q[0, 0] = _SWAP_2Q[3, 3] = _SWAP_2Q[1, 2] = _SWAP_2Q[2, 1] = 1.0


@dataclass(frozen=True)
class ModelSpec:
    """One- and two-body generators of a collective model.

    ``a1`` is the 2x2 one-particle operator and ``a2`` the 4x4 two-particle
    operator, which must commute with the two-qubit swap.
    """

    a1: np.ndarray
    a2: np.ndarray

    def __post_init__(self):
        a1 = np.asarray(self.a1, dtype=complex)
        a2 = np.asarray(self.a2, dtype=complex)
        if a1.shape != (2, 2):
            raise ValueError("a1 must be 2x2")
        if a2.shape != (4, 4):
            raise ValueError("a2 must be 4x4")
        dev = np.abs(_SWAP_2Q @ a2 @ _SWAP_2Q - a2).max()
        if dev > 1e-12 * max(1.0, np.abs(a2).max()):
            raise ValueError(
                f"a2 must be swap-symmetric: max |S a2 S - a2| = {dev}"
            )
        a1 = a1.copy()
        a2 = a2.copy()
        a1.flags.writeable = False
        a2.flags.writeable = False
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)

    @staticmethod
    def zz() -> "ModelSpec":
        """The purely anti-Hermitian collective model i Z (x) Z."""
        z = np.diag([1.0, -1.0])
        return ModelSpec(np.zeros((2, 2)), 1j * np.kron(z, z))

    @property
    def is_hermitian(self) -> bool:
        return (
            np.abs(self.a1 - self.a1.conj().T).max() <= 1e-12
            and np.abs(self.a2 - self.a2.conj().T).max() <= 1e-12
        )


def product_state(phi: QubitState, n_particles: int) -> DickeState:
    """Expand the product state |phi>^(x)N over the symmetric basis.

    The amplitude at n is phi0^n * phi1^(N-n) * sqrt(C(N, n)), assembled
    directly in log form so that arbitrarily small amplitude magnitudes
    stay representable.
    """
    if n_particles < 1:
        raise ValueError("n_particles must be positive")
    n = np.arange(n_particles + 1, dtype=float)
    lb = _log_binomial_row(n_particles)

    def _pow_log(coeff: complex, exponents: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        # log and phase of coeff**exponents, with 0**0 == 1
        mag = abs(coeff)
        if mag == 0.0:
            lm = np.where(exponents == 0, 0.0, -np.inf)
            return lm, np.zeros_like(exponents)
        return exponents * math.log(mag), exponents * cmath.phase(coeff)

    lm0, ph0 = _pow_log(phi.c0, n)
    lm1, ph1 = _pow_log(phi.c1, n_particles - n)
    return DickeState(
        n_particles=n_particles,
        log_mags=lm0 + lm1 + 0.5 * lb,
        phases=_wrap_phase(ph0 + ph1),
    )
