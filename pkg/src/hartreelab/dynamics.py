"""Exact non-unitary evolution in the symmetric subspace.

Three routes are provided, from fastest to slowest:

* a closed-form diagonal path for the collective ZZ model, which never
  forms a matrix and works up to N = 10**6;
* a dense path for arbitrary one- plus two-body collective generators,
  built by lifting the model to the (N+1)-dimensional symmetric sector;
* a brute-force full-Hilbert-space oracle (N <= 12) used for testing.

Marginal extraction for k = 1..3 qubits works on any symmetric state and
is carried out entirely in the log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse

from .states import (
    DensityMatrix,
    DickeState,
    ModelSpec,
    QubitState,
    _log_binomial_row,
    _log_sum_exp_arrays,
    product_state,
)

__all__ = [
    "CapacityError",
    "ZZEigenvalue",
    "CollectiveOperator",
    "zz_eigenvalue",
    "evolve_zz",
    "lift_model",
    "evolve_general",
    "marginal",
    "marginal_normalized",
    "bbgky_rhs",
    "brute_force_evolve",
]

#: largest N for which the dense lifted-operator path is allowed
DENSE_EVOLUTION_CAP = 4096

#: largest N for which the 2^N brute-force oracle is allowed
BRUTE_FORCE_CAP = 12


class CapacityError(ValueError):
    """A request exceeded the configured size cap of a dense code path."""


def zz_eigenvalue(n_particles: int, n: int) -> float:
    """Growth rate of the symmetric basis state n under the collective ZZ model.

    Equals ((N - 2n)^2 - N) / (2(N - 1)); symmetric under n <-> N - n.
    """
    if n_particles < 2:
        raise ValueError("need at least two particles")
    if not 0 <= n <= n_particles:
        raise ValueError(f"basis index out of range: 0 <= {n} <= {n_particles}")
    return ((n_particles - 2.0 * n) ** 2 - n_particles) / (2.0 * (n_particles - 1.0))


@dataclass(frozen=True)
class ZZEigenvalue:
    """A single (N, n) growth rate of the collective ZZ model."""

    n_particles: int
    n: int
    value: float

    @staticmethod
    def compute(n_particles: int, n: int) -> "ZZEigenvalue":
        return ZZEigenvalue(n_particles, n, zz_eigenvalue(n_particles, n))


def _zz_eigenvalues(n_particles: int) -> np.ndarray:
    n = np.arange(n_particles + 1, dtype=float)
    return ((n_particles - 2.0 * n) ** 2 - n_particles) / (2.0 * (n_particles - 1.0))


def evolve_zz(phi: QubitState, n_particles: int, t: float) -> DickeState:
    """Evolve |phi>^(x)N under the collective ZZ model for time t.

    The evolution is diagonal in the symmetric basis: each amplitude is
    multiplied by exp(lambda_n * t), applied additively in the log domain.
    The result is unnormalized; its norm grows like exp(N*t/2).
    """
    if n_particles < 2:
        raise ValueError("need at least two particles")
    if t < 0:
        raise ValueError("t must be nonnegative")
    base = product_state(phi, n_particles)
    return DickeState(
        n_particles=n_particles,
        log_mags=base.log_mags + _zz_eigenvalues(n_particles) * t,
        phases=base.phases,
    )


@dataclass(frozen=True)
class CollectiveOperator:
    """A one- plus two-body collective generator restricted to the symmetric sector."""

    n_particles: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dim = self.n_particles + 1
        if m.shape != (dim, dim):
            raise ValueError(f"matrix must be {dim}x{dim}")
        object.__setattr__(self, "matrix", m)


# 2x2 operator basis used for the collective lift: identity, raising
# (|0><1|, which increases the number of qubits in |0>), lowering, and Z.
_SIGMA = {
    "I": np.eye(2, dtype=complex),
    "+": np.array([[0, 1], [0, 0]], dtype=complex),
    "-": np.array([[0, 0], [1, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}
# Hilbert-Schmidt norms of the basis elements ({I/sqrt2, Z/sqrt2, +, -} is orthonormal)
_SIGMA_WEIGHT = {"I": 2.0, "+": 1.0, "-": 1.0, "Z": 2.0}


def _decompose_one_body(m: np.ndarray) -> dict[str, complex]:
    """Coefficients of a 2x2 matrix in the {I, +, -, Z} basis."""
    return {
        "I": (m[0, 0] + m[1, 1]) / 2.0,
        "Z": (m[0, 0] - m[1, 1]) / 2.0,
        "+": m[0, 1],
        "-": m[1, 0],
    }


def _collective_ops(n_particles: int) -> dict[str, scipy.sparse.spmatrix]:
    """Sparse collective sums of the one-qubit basis operators on the symmetric sector."""
    dim = n_particles + 1
    n = np.arange(dim, dtype=float)
    # raising: sum_i |0><1|_i maps basis state n to n+1 with sqrt((N-n)(n+1))
    ladder = np.sqrt((n_particles - n[:-1]) * (n[:-1] + 1.0))
    plus = scipy.sparse.diags(ladder, -1, format="csr", dtype=complex)
    minus = scipy.sparse.diags(ladder, 1, format="csr", dtype=complex)
    weight = scipy.sparse.diags(2.0 * n - n_particles, 0, format="csr", dtype=complex)
    ident = scipy.sparse.identity(dim, format="csr", dtype=complex) * n_particles
    return {"I": ident, "+": plus, "-": minus, "Z": weight}


def lift_model(model: ModelSpec, n_particles: int) -> CollectiveOperator:
    """Restrict sum_i a1_i + (N-1)^-1 sum_{i<j} a2_ij to the symmetric sector.

    Both operators are expanded over the one-qubit basis {I, +, -, Z};
    single sums map to collective ladder/weight operators, and pair sums
    use sum_{i != j} P_i Q_j = (sum_i P_i)(sum_j Q_j) - sum_i (PQ)_i.
    """
    if n_particles < 2:
        raise ValueError("need at least two particles")
    ops = _collective_ops(n_particles)
    dim = n_particles + 1
    total = scipy.sparse.csr_matrix((dim, dim), dtype=complex)

    for key, coeff in _decompose_one_body(model.a1).items():
        if coeff != 0:
            total = total + coeff * ops[key]

    for ka, sa in _SIGMA.items():
        for kb, sb in _SIGMA.items():
            coeff = np.trace(np.kron(sa, sb).conj().T @ model.a2)
            coeff /= _SIGMA_WEIGHT[ka] * _SIGMA_WEIGHT[kb]
            if abs(coeff) < 1e-15:
                continue
            # sum over ordered pairs i != j, then halve (a2 is swap-symmetric)
            onsite = scipy.sparse.csr_matrix((dim, dim), dtype=complex)
            for kk, cc in _decompose_one_body(sa @ sb).items():
                if cc != 0:
                    onsite = onsite + cc * ops[kk]
            pair = ops[ka] @ ops[kb] - onsite
            total = total + coeff * 0.5 * pair / (n_particles - 1.0)

    return CollectiveOperator(n_particles, np.asarray(total.todense()))


def evolve_general(
    model: ModelSpec, phi: QubitState, n_particles: int, t: float
) -> DickeState:
    """Evolve |phi>^(x)N under an arbitrary collective model for time t.

    Computes exp(-i t A) on the lifted (N+1)-dimensional generator with a
    scaling-and-squaring matrix exponential.  To avoid overflow, the
    generator is shifted by the largest growth rate of its Hermitian part;
    the shift is restored additively on the log magnitudes.
    """
    if n_particles > DENSE_EVOLUTION_CAP:
        raise CapacityError(
            f"dense evolution capped at N = {DENSE_EVOLUTION_CAP}; "
            "use the diagonal ZZ path for larger systems"
        )
    if n_particles < 2:
        raise ValueError("need at least two particles")
    if t < 0:
        raise ValueError("t must be nonnegative")

    gen = -1j * lift_model(model, n_particles).matrix
    # largest eigenvalue of the Hermitian part bounds the growth rate
    shift = float(np.linalg.eigvalsh(0.5 * (gen + gen.conj().T)).max())
    propagator = scipy.linalg.expm((gen - shift * np.eye(gen.shape[0])) * t)

    base = product_state(phi, n_particles)
    with np.errstate(divide="ignore"):
        amps0 = np.exp(base.log_mags) * np.exp(1j * base.phases)
        evolved = propagator @ amps0
        log_mags = np.log(np.abs(evolved)) + shift * t
    return DickeState(
        n_particles=n_particles,
        log_mags=log_mags,
        phases=np.angle(evolved),
    )


@lru_cache(maxsize=8)
def _symmetric_basis_vectors(k: int) -> np.ndarray:
    """Columns are the normalized symmetric basis states of k qubits.

    Column m is the equal superposition of all computational states with
    m qubits in |0>, m = 0..k.
    """
    dim = 2 ** k
    vecs = np.zeros((dim, k + 1))
    for idx in range(dim):
        zeros = k - bin(idx).count("1")
        vecs[idx, zeros] = 1.0
    vecs /= np.linalg.norm(vecs, axis=0, keepdims=True)
    return vecs


def marginal(state: DickeState, k: int) -> DensityMatrix:
    """Unnormalized k-particle marginal of a symmetric state, k in {1, 2, 3}.

    Splitting each symmetric basis state over the first k and last N-k
    qubits and tracing the latter reduces the partial trace to sums of
    amplitude products weighted by binomial ratios, all evaluated in the
    log domain.  The returned matrix has ``entries`` normalized to unit
    trace and carries the physical trace in ``log_scale``.
    """
    n_tot = state.n_particles
    if not 1 <= k <= 3:
        raise ValueError("marginals are supported for k in {1, 2, 3}")
    if k >= n_tot:
        raise ValueError(f"k = {k} must be smaller than N = {n_tot}")

    lb_n = _log_binomial_row(n_tot)
    lb_rest = _log_binomial_row(n_tot - k)
    lb_k = _log_binomial_row(k)
    s = np.arange(n_tot - k + 1)

    # block[m, mp] = sum_s c_{s+m} conj(c_{s+mp})
    #               * sqrt(C(k,m) C(k,mp)) * C(N-k,s) / sqrt(C(N,s+m) C(N,s+mp))
    block_log = np.empty((k + 1, k + 1))
    block_phase = np.empty((k + 1, k + 1))
    for m in range(k + 1):
        for mp in range(m, k + 1):
            log_terms = (
                state.log_mags[s + m]
                + state.log_mags[s + mp]
                + 0.5 * (lb_k[m] + lb_k[mp])
                + lb_rest
                - 0.5 * (lb_n[s + m] + lb_n[s + mp])
            )
            phase_terms = state.phases[s + m] - state.phases[s + mp]
            lm, ph = _log_sum_exp_arrays(log_terms, phase_terms)
            block_log[m, mp] = lm
            block_phase[m, mp] = ph
            block_log[mp, m] = lm
            block_phase[mp, m] = -ph

    diag = block_log.diagonal()
    m_max = float(np.max(diag))
    log_trace = m_max + math.log(float(np.sum(np.exp(diag - m_max))))

    block = np.exp(block_log - log_trace) * np.exp(1j * block_phase)
    basis = _symmetric_basis_vectors(k)
    entries = basis @ block @ basis.T
    return DensityMatrix(k=k, entries=entries, log_scale=log_trace)


def marginal_normalized(state: DickeState, k: int) -> DensityMatrix:
    """Trace-one k-particle marginal of a symmetric state."""
    unnorm = marginal(state, k)
    if not math.isfinite(unnorm.log_scale):
        raise ValueError("degenerate state: marginal has zero trace")
    return DensityMatrix(k=k, entries=unnorm.entries, log_scale=0.0)


def _ptrace_last(matrix: np.ndarray, k_total: int, n_drop: int) -> np.ndarray:
    """Partial trace of a 2^k x 2^k matrix over its last n_drop qubits."""
    keep = 2 ** (k_total - n_drop)
    drop = 2 ** n_drop
    t = matrix.reshape(keep, drop, keep, drop)
    return np.einsum("abcb->ac", t)


def bbgky_rhs(
    model: ModelSpec,
    rho1: DensityMatrix,
    rho2: DensityMatrix,
    rho3: DensityMatrix,
    n_particles: int,
) -> DensityMatrix:
    """Time derivative of the normalized one-particle marginal.

    Evaluates the exact hierarchy equation term by term: the Hartree-like
    one- and two-body terms with their norm-controlling traces, plus the
    O(N) corrections sensitive to the deviations rho2 - rho1 (x) rho1 and
    rho3 - rho1 (x) rho2 that vanish identically for Hermitian models.
    In the three-particle correction the two-body generator acts on the
    traced pair, so the product closure places rho1 on the kept slot.
    """
    if (rho1.k, rho2.k, rho3.k) != (1, 2, 3):
        raise ValueError("expected marginals with k = 1, 2, 3")
    r1, r2, r3 = rho1.entries, rho2.entries, rho3.entries
    a1, a2 = model.a1, model.a2
    b1 = a1 - a1.conj().T
    b2 = a2 - a2.conj().T
    eye = np.eye(2)

    one_body = a1 @ r1 - r1 @ a1.conj().T - np.trace(b1 @ r1) * r1
    two_body = (
        _ptrace_last(a2 @ r2 - r2 @ a2.conj().T, 2, 1)
        - np.trace(b2 @ r2) * r1
    )
    corr2 = (n_particles - 1) * _ptrace_last(
        np.kron(eye, b1) @ (r2 - np.kron(r1, r1)), 2, 1
    )
    corr3 = 0.5 * (n_particles - 2) * _ptrace_last(
        np.kron(eye, b2) @ (r3 - np.kron(r1, r2)), 3, 2
    )
    deriv = -1j * (one_body + two_body + corr2 + corr3)
    return DensityMatrix(k=1, entries=deriv)


# ---------------------------------------------------------------------------
# brute-force full-Hilbert-space oracle
# ---------------------------------------------------------------------------

_PROPAGATOR_CACHE: dict[tuple, np.ndarray] = {}
_GENERATOR_CACHE: dict[tuple, np.ndarray] = {}


def _full_operator(model: ModelSpec, n_particles: int) -> np.ndarray:
    """Dense 2^N x 2^N collective generator built site by site.

    Qubit q occupies bit N-1-q of the basis index (qubit 0 most
    significant); bit value b means state |b>.
    """
    dim = 2 ** n_particles
    idx = np.arange(dim)
    total = np.zeros((dim, dim), dtype=complex)

    def bit_of(site: int) -> int:
        return 1 << (n_particles - 1 - site)

    for i in range(n_particles):
        bi = bit_of(i)
        rest = np.unique(idx & ~bi)
        for u in range(2):
            for v in range(2):
                if model.a1[u, v] == 0:
                    continue
                total[rest | (u * bi), rest | (v * bi)] += model.a1[u, v]

    for i in range(n_particles):
        for j in range(i + 1, n_particles):
            bi, bj = bit_of(i), bit_of(j)
            rest = np.unique(idx & ~(bi | bj))
            for u0 in range(2):
                for u1 in range(2):
                    rows = rest | (u0 * bi) | (u1 * bj)
                    for v0 in range(2):
                        for v1 in range(2):
                            val = model.a2[2 * u0 + u1, 2 * v0 + v1]
                            if val == 0:
                                continue
                            cols = rest | (v0 * bi) | (v1 * bj)
                            total[rows, cols] += val / (n_particles - 1.0)
    return total


def _brute_propagator(model: ModelSpec, n_particles: int, t: float) -> np.ndarray:
    model_key = (model.a1.tobytes(), model.a2.tobytes(), n_particles)
    key = model_key + (t,)
    cached = _PROPAGATOR_CACHE.get(key)
    if cached is not None:
        return cached
    gen = _GENERATOR_CACHE.get(model_key)
    if gen is None:
        gen = -1j * _full_operator(model, n_particles)
        if len(_GENERATOR_CACHE) > 16:
            _GENERATOR_CACHE.clear()
        _GENERATOR_CACHE[model_key] = gen
    off_diag = gen - np.diag(np.diag(gen))
    if np.abs(off_diag).max() == 0.0:
        propagator = np.diag(np.exp(np.diag(gen) * t))
    else:
        propagator = scipy.linalg.expm(gen * t)
    if len(_PROPAGATOR_CACHE) > 64:
        _PROPAGATOR_CACHE.clear()
    _PROPAGATOR_CACHE[key] = propagator
    return propagator


def brute_force_evolve(
    model: ModelSpec, phi: QubitState, n_particles: int, t: float, k: int
) -> DensityMatrix:
    """Full 2^N evolution followed by a partial trace to k qubits.

    Test oracle, deliberately independent of the symmetric-subspace code:
    the generator is assembled site by site in the product basis and
    exponentiated densely.  Returns the marginal with trace-one entries
    and the physical trace in ``log_scale``, matching :func:`marginal`.
    """
    if n_particles > BRUTE_FORCE_CAP:
        raise CapacityError(f"brute force capped at N = {BRUTE_FORCE_CAP}")
    if not 1 <= k <= 3 or k >= n_particles:
        raise ValueError("need 1 <= k <= 3 and k < N")
    if t < 0:
        raise ValueError("t must be nonnegative")

    psi = phi.as_array()
    for _ in range(n_particles - 1):
        psi = np.kron(psi, phi.as_array())
    psi = _brute_propagator(model, n_particles, t) @ psi

    m = psi.reshape(2 ** k, 2 ** (n_particles - k))
    rho = m @ m.conj().T
    tr = float(np.trace(rho).real)
    if tr <= 0:
        raise ValueError("degenerate state: zero-trace marginal")
    return DensityMatrix(k=k, entries=rho / tr, log_scale=math.log(tr))
