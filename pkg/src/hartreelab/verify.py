"""Cross-implementation verification suite.

Every closed form in the package is checked against an independent
route: diagonal evolution against the full-Hilbert-space oracle,
log-domain marginals against brute-force partial traces, the hierarchy
derivative against finite differences, the mean-field closed form
against RK4, the limit flow against directly located maximizers, and
the determinant fidelity against the matrix-root definition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .asymptotics import RateFunction, find_global_maximizer, limit_ode_rhs
from .dynamics import (
    _ptrace_last,
    bbgky_rhs,
    brute_force_evolve,
    evolve_general,
    evolve_zz,
    marginal_normalized,
)
from .hartree import closed_form_zz, integrate_hartree
from .metrics import qubit_fidelity
from .states import DensityMatrix, DickeState, ModelSpec, QubitState, product_state

__all__ = ["CheckResult", "VerificationReport", "run_verification"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    tolerance: float
    max_deviation: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def render(self) -> str:
        lines = []
        for check in self.checks:
            status = "PASS" if check.passed else "FAIL"
            lines.append(
                f"{status}  {check.name}: max deviation {check.max_deviation:.3e} "
                f"(tolerance {check.tolerance:.0e})"
            )
        verdict = "all checks passed" if self.passed else "VERIFICATION FAILED"
        lines.append(verdict)
        return "\n".join(lines)


def _random_state(rng: np.random.Generator) -> QubitState:
    vec = rng.normal(size=2) + 1j * rng.normal(size=2)
    return QubitState.from_unnormalized(vec[0], vec[1])


def _random_mixed_qubit(rng: np.random.Generator) -> DensityMatrix:
    weights = rng.uniform(0.05, 1.0, size=2)
    weights /= weights.sum()
    rho = np.zeros((2, 2), dtype=complex)
    for w in weights:
        v = _random_state(rng).as_array()
        rho += w * np.outer(v, v.conj())
    return DensityMatrix(1, rho)


def _evolve_with_rates(phi: QubitState, n: int, t: float, rate_fn) -> DickeState:
    """Diagonal evolution with injectable growth rates (corruption hook for tests)."""
    base = product_state(phi, n)
    rates = np.array([rate_fn(n, idx) for idx in range(n + 1)])
    return DickeState(n, base.log_mags + rates * t, base.phases)


def _check_evolution_oracle(rng, max_n, rate_fn) -> CheckResult:
    model = ModelSpec.zz()
    worst = 0.0
    for n in range(2, max_n + 1):
        states = [_random_state(rng) for _ in range(3)]
        for t in (0.1, 0.7, 1.5):
            for phi in states:
                if rate_fn is None:
                    evolved = evolve_zz(phi, n, t)
                else:
                    evolved = _evolve_with_rates(phi, n, t, rate_fn)
                fast = marginal_normalized(evolved, 1).entries
                slow = brute_force_evolve(model, phi, n, t, 1).entries
                worst = max(worst, float(np.linalg.norm(fast - slow)))
    return CheckResult("diagonal evolution vs full-space oracle", 1e-9, worst)


def _check_marginal_oracle(rng) -> CheckResult:
    n = 8
    worst = 0.0
    one_body = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    herm1 = one_body + one_body.conj().T
    pair = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    swap = np.zeros((4, 4))
    swap[0, 0] = swap[3, 3] = swap[1, 2] = swap[2, 1] = 1.0
    herm2 = pair + pair.conj().T
    herm2 = herm2 + swap @ herm2 @ swap
    models = [ModelSpec.zz(), ModelSpec(herm1, herm2)]
    phi = _random_state(rng)
    for model in models:
        state = (
            evolve_zz(phi, n, 0.6)
            if model is models[0]
            else evolve_general(model, phi, n, 0.6)
        )
        for k in (1, 2, 3):
            fast = marginal_normalized(state, k).entries
            slow = brute_force_evolve(model, phi, n, 0.6, k).entries
            worst = max(worst, float(np.abs(fast - slow).max()))
    return CheckResult("log-domain marginal vs brute-force partial trace", 1e-10, worst)


def _bbgky_deviation(phi: QubitState, n: int, t: float) -> float:
    def marginals(time: float):
        state = evolve_zz(phi, n, time)
        return tuple(marginal_normalized(state, k) for k in (1, 2, 3))

    delta = 1e-5
    rhs = bbgky_rhs(ModelSpec.zz(), *marginals(t), n).entries
    fd = (marginals(t + delta)[0].entries - marginals(t - delta)[0].entries) / (2 * delta)
    return float(np.abs(rhs - fd).max())


def _check_bbgky(rng) -> CheckResult:
    phi = _random_state(rng)
    worst = 0.0
    for n in (4, 6, 8):
        for t in (0.2, 0.6, 1.2):
            worst = max(worst, _bbgky_deviation(phi, n, t))
    return CheckResult("hierarchy derivative vs finite differences", 1e-6, worst)


def _check_closed_form(rng) -> CheckResult:
    worst = 0.0
    for _ in range(5):
        phi = _random_state(rng)
        trajectory = integrate_hartree(ModelSpec.zz(), phi, t_end=2.0, dt=1e-3)
        expected = closed_form_zz(phi, 2.0)
        diff = trajectory.endpoint.as_array() - expected.as_array()
        worst = max(worst, float(np.abs(diff).max()))
    return CheckResult("mean-field closed form vs RK4", 1e-8, worst)


def _check_limit_flow(rng) -> CheckResult:
    def rhs(time, vec):
        return limit_ode_rhs(QubitState.from_unnormalized(*vec), time)

    worst = 0.0
    dt = 1e-3
    steps = 2000
    for p0 in (0.3, 0.64):
        phi = QubitState.from_probability(p0, 0.2, -0.4)
        nu = phi.as_array()
        for step in range(1, steps + 1):
            t = (step - 1) * dt
            k1 = rhs(t, nu)
            k2 = rhs(t + dt / 2, nu + dt / 2 * k1)
            k3 = rhs(t + dt / 2, nu + dt / 2 * k2)
            k4 = rhs(t + dt, nu + dt * k3)
            nu = nu + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            nu /= np.linalg.norm(nu)
            if step % 250 == 0:
                x_star = find_global_maximizer(
                    RateFunction(p0, 1 - p0, step * dt)
                ).x_star
                worst = max(worst, abs(abs(nu[1]) ** 2 - x_star))
    return CheckResult("limit flow vs located maximizers", 1e-8, worst)


def _check_fidelity(rng) -> CheckResult:
    worst = 0.0
    for _ in range(20):
        rho = _random_mixed_qubit(rng)
        sigma = _random_mixed_qubit(rng)
        fast = qubit_fidelity(rho, sigma)
        root = scipy.linalg.sqrtm(rho.entries)
        inner = scipy.linalg.sqrtm(root @ sigma.entries @ root)
        slow = float(np.trace(inner).real) ** 2
        worst = max(worst, abs(fast - slow))
    return CheckResult("determinant fidelity vs matrix-root oracle", 1e-10, worst)


def _check_hermitian_corrections(rng) -> CheckResult:
    """The O(N) hierarchy corrections must vanish for Hermitian models."""
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    model = ModelSpec(x, np.kron(z, z).astype(complex))
    phi = _random_state(rng)
    n = 6
    state = evolve_general(model, phi, n, 0.5)
    r1 = marginal_normalized(state, 1).entries
    r2 = marginal_normalized(state, 2).entries
    r3 = marginal_normalized(state, 3).entries
    b1 = model.a1 - model.a1.conj().T
    b2 = model.a2 - model.a2.conj().T
    eye = np.eye(2)
    corr2 = (n - 1) * _ptrace_last(np.kron(eye, b1) @ (r2 - np.kron(r1, r1)), 2, 1)
    corr3 = 0.5 * (n - 2) * _ptrace_last(np.kron(eye, b2) @ (r3 - np.kron(r1, r2)), 3, 2)
    worst = max(float(np.abs(corr2).max()), float(np.abs(corr3).max()))
    return CheckResult("Hermitian model: O(N) correction terms vanish", 1e-12, worst)


def run_verification(
    seed: int = 0, max_n: int = 10, rate_fn=None
) -> VerificationReport:
    """Run the full oracle suite.

    Parameters
    ----------
    seed : int
        Seed for the randomized draws.
    max_n : int
        Largest particle number for the full-space comparisons (<= 12).
    rate_fn : callable, optional
        Replacement growth-rate function for the diagonal path; used by
        mutation tests to confirm the oracle actually bites.
    """
    if max_n > 12:
        raise ValueError("max_n must not exceed 12")
    if max_n < 2:
        raise ValueError("max_n must be at least 2")
    rng = np.random.default_rng(seed)
    checks = (
        _check_evolution_oracle(rng, max_n, rate_fn),
        _check_marginal_oracle(rng),
        _check_bbgky(rng),
        _check_closed_form(rng),
        _check_limit_flow(rng),
        _check_fidelity(rng),
        _check_hermitian_corrections(rng),
    )
    return VerificationReport(checks)
