"""Large-N behavior of the one-particle marginal under the ZZ model.

The diagonal sums defining the marginal are dominated, for large N, by
the maximizers of a rate function f_t on (0, 1).  Everything in this
module is organized around that function: locating its global
maximizer(s), the limiting one-particle state they produce, the
effective evolution equations of the limit, and a finite-N saddle-point
approximation with subexponential prefactors.

For t <= 1/2 the rate function is strictly concave and has one
maximizer; past the critical time t = 1/2 it can develop two local
maxima.  For a balanced initial state (both populations 1/2) and
t > 1/2 the two maxima are exactly degenerate and the limiting state is
mixed; for any other start a unique global maximizer survives and the
limit stays pure.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .states import DensityMatrix, QubitState

__all__ = [
    "SingularityError",
    "RateFunction",
    "MaximizerResult",
    "LimitState",
    "rate_function_eval",
    "second_derivative_roots",
    "find_global_maximizer",
    "limit_marginal",
    "limit_ode_rhs",
    "maximizer_ode_rhs",
    "laplace_marginal_approx",
]

#: balanced initial conditions are detected by exact symmetry, not by
#: comparing two numerically equal maxima
_BALANCED_TOL = 1e-12


class SingularityError(ZeroDivisionError):
    """A denominator that is nonzero on valid trajectories vanished."""


@dataclass(frozen=True)
class RateFunction:
    """The exponent f_t(x) governing the marginal's diagonal sums.

    Parameters are the initial populations p0, p1 (both strictly inside
    (0, 1)) and the time t.
    """

    p0: float
    p1: float
    t: float

    def __post_init__(self):
        if abs(self.p0 + self.p1 - 1.0) > 1e-12:
            raise ValueError("populations must sum to one")
        if not (0.0 < self.p0 < 1.0 and 0.0 < self.p1 < 1.0):
            raise ValueError("populations must lie strictly inside (0, 1)")

    @staticmethod
    def from_state(phi: QubitState, t: float) -> "RateFunction":
        return RateFunction(p0=phi.prob0, p1=1.0 - phi.prob0, t=t)

    @property
    def log_ratio(self) -> float:
        """ln(p1 / p0), the asymmetry entering the maximizer selection."""
        return math.log(self.p1 / self.p0)

    def mirrored(self) -> "RateFunction":
        return RateFunction(p0=self.p1, p1=self.p0, t=self.t)


def rate_function_eval(rf: RateFunction, x: float) -> tuple[float, float, float]:
    """Value, first and second derivative of the rate function at x in (0, 1)."""
    if not 0.0 < x < 1.0:
        raise ValueError(f"x must lie in (0, 1), got {x}")
    one_m = 1.0 - x
    value = (
        x * math.log(rf.p1 * one_m / (rf.p0 * x))
        + math.log(rf.p0 / one_m)
        + rf.t * (1.0 - 2.0 * x) ** 2
    )
    first = rf.log_ratio + math.log(one_m / x) - 4.0 * rf.t * (1.0 - 2.0 * x)
    second = 8.0 * rf.t - 1.0 / (x * one_m)
    return value, first, second


def second_derivative_roots(t: float) -> tuple[float, float] | None:
    """Roots of the rate function's second derivative, if any.

    For t >= 1/2 the concavity changes sign at the symmetric pair
    (1 +- sqrt(1 - 1/(2t))) / 2 (a double root exactly at the critical
    time); for t < 1/2 the function is strictly concave and there is
    nothing to return.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if t < 0.5:
        return None
    half_width = 0.5 * math.sqrt(1.0 - 1.0 / (2.0 * t))
    return 0.5 - half_width, 0.5 + half_width


@dataclass(frozen=True)
class MaximizerResult:
    """Global maximizer(s) of the rate function.

    In the double regime (balanced populations past the critical time)
    ``x_star`` is the left maximizer and ``x_star_mirror`` its reflection
    1 - x_star; otherwise ``x_star_mirror`` is None.
    """

    regime: str
    x_star: float
    f_value: float
    f_second: float
    x_star_mirror: float | None = None

    def __post_init__(self):
        if self.regime not in ("single", "double"):
            raise ValueError("regime must be 'single' or 'double'")
        if self.regime == "double" and self.x_star_mirror is None:
            raise ValueError("double regime requires the mirror maximizer")

    @property
    def all_maximizers(self) -> tuple[float, ...]:
        if self.x_star_mirror is None:
            return (self.x_star,)
        return (self.x_star, self.x_star_mirror)


def _solve_on_decreasing_branch(rf: RateFunction, lo: float, hi: float) -> float:
    """Root of f' on [lo, hi] where f' is decreasing, lo and hi bracketing.

    Bisection first (the bracket is guaranteed by the sign structure of
    f' at the interval ends), then a Newton polish; pure Newton can
    escape the bracket near the critical time where f'' is tiny.
    """
    _, flo, _ = rate_function_eval(rf, lo)
    _, fhi, _ = rate_function_eval(rf, hi)
    if not (flo > 0.0 >= fhi or flo >= 0.0 > fhi):
        raise ValueError(f"branch does not bracket a root: f'({lo})={flo}, f'({hi})={fhi}")
    a, b = lo, hi
    for _ in range(120):
        mid = 0.5 * (a + b)
        _, fm, _ = rate_function_eval(rf, mid)
        if fm > 0.0:
            a = mid
        else:
            b = mid
        if b - a <= 1e-16 * max(1.0, abs(a)):
            break
    x = 0.5 * (a + b)
    for _ in range(40):
        _, first, second = rate_function_eval(rf, x)
        if second == 0.0:
            break
        step = first / second
        x_new = x - step
        if not 0.0 < x_new < 1.0:
            break
        x = x_new
        if abs(step) <= 1e-17 + 1e-16 * abs(x):
            break
    return x


def _left_branch_floor(rf: RateFunction) -> float:
    """A lower bracket endpoint guaranteed left of the left-branch root."""
    return max(1e-300, min(1e-14, (rf.p1 / rf.p0) * math.exp(-4.0 * rf.t - 5.0)))


def _local_maximizers(rf: RateFunction) -> list[float]:
    """All local maximizers of the rate function, global one(s) first."""
    roots = second_derivative_roots(rf.t) if rf.t > 0 else None
    if roots is None or roots[0] == roots[1]:
        # strictly concave (or concave with a flat point): unique maximizer
        eps = 1e-14
        lo = min(eps, _left_branch_floor(rf))
        return [_solve_on_decreasing_branch(rf, lo, 1.0 - eps)]

    r_minus, r_plus = roots
    found: list[float] = []
    # left branch: f' decreasing on (0, r_minus), root exists iff f'(r_minus) <= 0
    _, fp_rm, _ = rate_function_eval(rf, r_minus)
    if fp_rm <= 0.0:
        found.append(_solve_on_decreasing_branch(rf, _left_branch_floor(rf), r_minus))
    # right branch via the mirror identity f'_{p0,p1}(x) = -f'_{p1,p0}(1-x)
    mirror = rf.mirrored()
    _, fp_rm_m, _ = rate_function_eval(mirror, r_minus)
    if fp_rm_m <= 0.0:
        found.append(1.0 - _solve_on_decreasing_branch(mirror, _left_branch_floor(mirror), r_minus))
    if not found:
        raise RuntimeError("no local maximizer found; the branch analysis is broken")

    # order global first: the global maximizer satisfies (1-2x) ln(p1/p0) <= 0
    if len(found) == 2:
        left, right = found
        if rf.log_ratio > 0.0:
            found = [right, left]
        elif rf.log_ratio == 0.0:
            pass  # balanced: degenerate pair, order irrelevant
    return found


def find_global_maximizer(rf: RateFunction) -> MaximizerResult:
    """Locate the global maximizer(s) of the rate function.

    Balanced populations past the critical time give the degenerate
    double regime; the balance test is exact symmetry within 1e-12, so
    floating-point asymmetry cannot misclassify a generic start.  At the
    critical time itself the single regime (maximizer 1/2) is returned.
    """
    balanced = abs(rf.p0 - rf.p1) <= _BALANCED_TOL
    if balanced and rf.t > 0.5:
        half_width = 0.5 * math.sqrt(1.0 - 1.0 / (2.0 * rf.t))
        x = _solve_on_decreasing_branch(
            RateFunction(0.5, 0.5, rf.t), _left_branch_floor(rf), 0.5 - half_width
        )
        value, _, second = rate_function_eval(rf, x)
        return MaximizerResult(
            regime="double", x_star=x, f_value=value, f_second=second,
            x_star_mirror=1.0 - x,
        )
    if balanced:
        value, _, second = rate_function_eval(rf, 0.5)
        return MaximizerResult(regime="single", x_star=0.5, f_value=value, f_second=second)

    candidates = _local_maximizers(rf)
    x = candidates[0]
    value, _, second = rate_function_eval(rf, x)
    return MaximizerResult(regime="single", x_star=x, f_value=value, f_second=second)


@dataclass(frozen=True)
class LimitState:
    """The infinite-N one-particle marginal and, when pure, its wavefunction."""

    regime: str
    rho: DensityMatrix
    theta: float
    nu: QubitState | None = None

    def __post_init__(self):
        if self.regime not in ("pure", "mixed"):
            raise ValueError("regime must be 'pure' or 'mixed'")
        if self.regime == "pure" and self.nu is None:
            raise ValueError("pure regime requires the limit wavefunction")


def _relative_phase(phi0: QubitState) -> float:
    """Phase theta of the limit state's off-diagonal, fixed by the start.

    exp(-i theta) = (c0*/|c0|) (|c1|/c1*), i.e. theta = arg c0 - arg c1,
    defined modulo 2 pi.
    """
    return cmath.phase(phi0.c0) - cmath.phase(phi0.c1)


def limit_marginal(phi0: QubitState, t: float) -> LimitState:
    """Infinite-N limit of the normalized one-particle marginal.

    A unique maximizer x* gives the pure state with populations
    (1 - x*, x*) and off-diagonal phase inherited from the start; the
    degenerate pair of the balanced case gives equal populations 1/2
    with the same off-diagonal magnitude, which is mixed.
    """
    p0 = phi0.prob0
    if not 0.0 < p0 < 1.0:
        raise ValueError(
            "fixed-point initial condition: the marginal equals the initial "
            "projector for every N and t; use the constant solution directly"
        )
    result = find_global_maximizer(RateFunction.from_state(phi0, t))
    theta = _relative_phase(phi0)
    x = result.x_star
    off = math.sqrt(x * (1.0 - x))
    if result.regime == "double":
        rho = np.array(
            [[0.5, cmath.exp(1j * theta) * off],
             [cmath.exp(-1j * theta) * off, 0.5]]
        )
        return LimitState(regime="mixed", rho=DensityMatrix(1, rho), theta=theta)
    rho = np.array(
        [[1.0 - x, cmath.exp(1j * theta) * off],
         [cmath.exp(-1j * theta) * off, x]]
    )
    nu = QubitState.from_unnormalized(
        cmath.exp(1j * theta) * math.sqrt(1.0 - x), math.sqrt(x)
    )
    return LimitState(regime="pure", rho=DensityMatrix(1, rho), theta=theta, nu=nu)


def limit_ode_rhs(nu: QubitState, t: float) -> np.ndarray:
    """Effective evolution of the limiting one-particle wavefunction.

    Shares its numerator with the mean-field flow but carries an explicit
    time dependence through the denominator 1 - 8 t |nu0|^2 |nu1|^2, so
    the two agree only at t = 0 and at the fixed points.
    """
    p0, p1 = nu.prob0, nu.prob1
    den = 1.0 - 8.0 * t * p0 * p1
    if abs(den) < 1e-12:
        raise SingularityError(
            "denominator 1 - 8 t |nu0|^2 |nu1|^2 vanished; the input does not "
            "lie on a valid limit trajectory"
        )
    imbalance = p0 - p1
    coeff = (imbalance - imbalance**2) / den
    coeff_mirror = (-imbalance - imbalance**2) / den
    return np.array([coeff * nu.c0, coeff_mirror * nu.c1])


def maximizer_ode_rhs(x: float, t: float) -> float:
    """Implicit evolution of the global maximizer: dx*/dt."""
    den = 8.0 * t - 1.0 / (x * (1.0 - x))
    if abs(den) < 1e-12:
        raise SingularityError("maximizer flow denominator vanished")
    return 4.0 * (1.0 - 2.0 * x) / den


# ---------------------------------------------------------------------------
# finite-N saddle-point approximation
# ---------------------------------------------------------------------------

def _entry_saddle(
    rf: RateFunction,
    n_particles: int,
    seeds: tuple[float, ...],
    corr: float,
    f_ref: float,
) -> float:
    """One matrix entry by Laplace's method, summed over all maximizers.

    The entry's exponent is N*f(x) - 4*t*x*(1-x) + corr*t*(1-2x); the
    subleading exponent shifts each saddle away from the maximizer of f
    by O(1/N), which is what distinguishes the finite-N approximation
    from the plain limit.  Contributions are measured relative to
    exp(N * f_ref) so that normalization never overflows.
    """
    t = rf.t
    total = 0.0
    for seed in seeds:
        x = seed
        for _ in range(60):
            _, first, second = rate_function_eval(rf, x)
            grad = n_particles * first - 4.0 * t * (1.0 - 2.0 * x) - 2.0 * corr * t
            hess = n_particles * second + 8.0 * t
            step = grad / hess
            x_new = x - step
            if not 0.0 < x_new < 1.0:
                break
            x = x_new
            if abs(step) <= 1e-16:
                break
        value, _, second = rate_function_eval(rf, x)
        exponent = (
            n_particles * (value - f_ref)
            - 4.0 * t * x * (1.0 - x)
            + corr * t * (1.0 - 2.0 * x)
        )
        hess = n_particles * second + 8.0 * t
        prefactor = math.sqrt((1.0 - x) / x) * math.sqrt(n_particles / -hess)
        total += prefactor * math.exp(exponent)
    return total


def laplace_marginal_approx(phi0: QubitState, t: float, n_particles: int) -> DensityMatrix:
    """Finite-N saddle-point approximation of the normalized marginal.

    Each entry keeps the subexponential prefactors (the Gaussian width
    1/sqrt(-f'') and the weight sqrt((1-x)/x)) and its own exponential
    correction factor, evaluated at the entry's own saddle point; all
    local maximizers contribute.  Normalization cancels the common
    exp(N f) growth, and the result approaches the infinite-N limit at
    rate O(1/N).
    """
    p0 = phi0.prob0
    if not 0.0 < p0 < 1.0:
        raise ValueError(
            "fixed-point initial condition: use the constant projector instead"
        )
    rf = RateFunction.from_state(phi0, t)
    result = find_global_maximizer(rf)
    seeds = result.all_maximizers
    if result.regime == "single" and t > 0.5:
        # a subleading local maximizer still contributes exp(-N delta_f)
        others = [x for x in _local_maximizers(rf) if abs(x - result.x_star) > 1e-9]
        seeds = seeds + tuple(others)
    f_ref = result.f_value

    p1 = rf.p1
    # derivation orientation pairs p1 with the summation variable; the
    # diagonal entries differ by the growth-rate shift under n -> n+1
    # (corr = -4) and the off-diagonal carries half of it (corr = -2)
    e00 = _entry_saddle(rf, n_particles, seeds, corr=0.0, f_ref=f_ref)
    e11 = (p1 / rf.p0) * _entry_saddle(rf, n_particles, seeds, corr=-4.0, f_ref=f_ref)
    e10 = math.sqrt(p1 / rf.p0) * _entry_saddle(rf, n_particles, seeds, corr=-2.0, f_ref=f_ref)
    theta = _relative_phase(phi0)

    trace = e00 + e11
    entries = np.array(
        [[e00 / trace, cmath.exp(1j * theta) * e10 / trace],
         [cmath.exp(-1j * theta) * e10 / trace, e11 / trace]]
    )
    return DensityMatrix(k=1, entries=entries)
