"""The non-Hermitian Hartree equation for a single qubit.

The mean-field closure of the hierarchy yields a norm-preserving
nonlinear evolution for the one-particle wavefunction.  For the
collective ZZ model the equation decouples in the amplitude moduli and
integrates in closed form; for general models a fixed-step RK4
integrator with per-step renormalization is provided.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .states import ModelSpec, QubitState

__all__ = [
    "IntegrationError",
    "HartreeTrajectory",
    "ClosedFormParams",
    "hartree_rhs",
    "hartree_matrix_rhs",
    "integrate_hartree",
    "closed_form_zz",
    "classify_fixed_point",
]


class IntegrationError(RuntimeError):
    """The integrator encountered a non-finite state."""

    def __init__(self, message: str, last_valid_time: float):
        super().__init__(message)
        self.last_valid_time = last_valid_time


@dataclass(frozen=True)
class HartreeTrajectory:
    """A mean-field trajectory sampled on a uniform time grid."""

    times: np.ndarray
    states: tuple[QubitState, ...]
    max_norm_correction: float = 0.0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        times.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", tuple(self.states))
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")

    @property
    def endpoint(self) -> QubitState:
        return self.states[-1]


def _two_body_contraction(a2: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """One-particle operator Tr_2(a2 (I (x) gamma))."""
    t = a2.reshape(2, 2, 2, 2)
    return np.einsum("ikjl,lk->ij", t, gamma)


def hartree_rhs(model: ModelSpec, phi: QubitState) -> np.ndarray:
    """Right-hand side of the mean-field wavefunction equation.

    Returns d|phi>/dt as a length-2 complex vector.  The two-body term
    enters through the contraction Tr_2(a2 (I (x) |phi><phi|)); the two
    scalar trace terms keep the norm exactly constant for any model.
    """
    v = phi.as_array()
    gamma = np.outer(v, v.conj())
    a1, a2 = model.a1, model.a2
    b1 = 0.5 * (a1 - a1.conj().T)
    b2 = 0.5 * (a2 - a2.conj().T)

    h2 = _two_body_contraction(a2, gamma)
    e1 = v.conj() @ b1 @ v
    vv = np.kron(v, v)
    e2 = vv.conj() @ b2 @ vv
    return -1j * (a1 @ v - e1 * v + h2 @ v - e2 * v)


def hartree_matrix_rhs(model: ModelSpec, gamma: np.ndarray) -> np.ndarray:
    """Density-matrix form of the mean-field equation (test harness).

    Propagating a pure gamma with this 2x2 equation must reproduce the
    wavefunction route; it is not a production path.
    """
    a1, a2 = model.a1, model.a2
    b1 = a1 - a1.conj().T
    b2 = a2 - a2.conj().T
    eye = np.eye(2)
    h2 = _two_body_contraction(a2, gamma)
    right = _ptrace_last_2(np.kron(eye, gamma) @ a2.conj().T)
    e2 = np.trace(b2 @ np.kron(gamma, gamma))
    return -1j * (
        a1 @ gamma
        - gamma @ a1.conj().T
        - np.trace(b1 @ gamma) * gamma
        + h2 @ gamma
        - gamma @ right
        - e2 * gamma
    )


def _ptrace_last_2(matrix4: np.ndarray) -> np.ndarray:
    t = matrix4.reshape(2, 2, 2, 2)
    return np.einsum("abcb->ac", t)


def integrate_hartree(
    model: ModelSpec, phi0: QubitState, t_end: float, dt: float
) -> HartreeTrajectory:
    """Fixed-step RK4 integration of the mean-field equation.

    The state is renormalized after every step; the largest applied
    correction is recorded as a diagnostic (the equation preserves the
    norm analytically, so large corrections indicate too coarse a step).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")

    def rhs(vec: np.ndarray) -> np.ndarray:
        return hartree_rhs(model, QubitState.from_unnormalized(vec[0], vec[1]))

    times = [0.0]
    states = [phi0]
    v = phi0.as_array()
    t = 0.0
    max_correction = 0.0
    while t < t_end - 1e-12:
        h = min(dt, t_end - t)
        k1 = rhs(v)
        k2 = rhs(v + 0.5 * h * k1)
        k3 = rhs(v + 0.5 * h * k2)
        k4 = rhs(v + h * k3)
        v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
        if not np.all(np.isfinite(v.view(float))):
            raise IntegrationError(
                f"non-finite state at t = {t}", last_valid_time=times[-1]
            )
        norm = math.hypot(abs(v[0]), abs(v[1]))
        if norm == 0.0 or not math.isfinite(norm):
            raise IntegrationError(
                f"state norm degenerated at t = {t}", last_valid_time=times[-1]
            )
        max_correction = max(max_correction, abs(norm - 1.0))
        v = v / norm
        times.append(t)
        states.append(QubitState(v[0], v[1]))
    return HartreeTrajectory(np.array(times), tuple(states), max_correction)


@dataclass(frozen=True)
class ClosedFormParams:
    """Constants of motion of the ZZ mean-field flow for a given start."""

    k: float
    theta0: float
    theta1: float

    @staticmethod
    def from_initial(phi0: QubitState) -> "ClosedFormParams":
        imbalance = phi0.prob0 - phi0.prob1
        if abs(imbalance) >= 1.0:
            raise ValueError("closed-form parameters are singular at the poles")
        return ClosedFormParams(
            k=imbalance / math.sqrt(1.0 - imbalance * imbalance),
            theta0=cmath.phase(phi0.c0),
            theta1=cmath.phase(phi0.c1),
        )


def closed_form_zz(phi0: QubitState, t: float) -> QubitState:
    """Closed-form solution of the ZZ mean-field equation.

    The population imbalance follows a logistic-type curve driven by
    k*exp(2t); the amplitude phases are constants of motion.  Exact fixed
    points (either amplitude zero) are returned unchanged for all t.
    """
    p0 = phi0.prob0
    if p0 == 0.0 or p0 == 1.0 or phi0.c0 == 0 or phi0.c1 == 0:
        return phi0
    params = ClosedFormParams.from_initial(phi0)
    if params.k == 0.0:
        u = 0.0
    else:
        # u = K / sqrt(1 + K^2) with K = k e^{2t}, branch-stable for any K
        w = math.log(abs(params.k)) + 2.0 * t
        if w > 0:
            u = math.copysign(1.0 / math.sqrt(1.0 + math.exp(-2.0 * w)), params.k)
        else:
            ew = math.exp(w)
            u = math.copysign(ew / math.sqrt(1.0 + ew * ew), params.k)
    return QubitState(
        cmath.exp(1j * params.theta0) * math.sqrt(0.5 * (1.0 + u)),
        cmath.exp(1j * params.theta1) * math.sqrt(0.5 * (1.0 - u)),
    )


def classify_fixed_point(phi: QubitState) -> str:
    """Classify a state as 'stable', 'unstable' or 'none' under the ZZ flow.

    The poles (all weight on one amplitude) attract; balanced states sit
    on the unstable manifold; everything else flows.
    """
    if min(abs(phi.c0), abs(phi.c1)) <= 1e-10:
        return "stable"
    if abs(phi.prob0 - phi.prob1) <= 1e-10:
        return "unstable"
    return "none"
