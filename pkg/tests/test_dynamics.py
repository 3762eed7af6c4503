import math

import numpy as np
import pytest
import scipy.linalg

from hartreelab.dynamics import (
    BRUTE_FORCE_CAP,
    CapacityError,
    DENSE_EVOLUTION_CAP,
    ZZEigenvalue,
    bbgky_rhs,
    brute_force_evolve,
    evolve_general,
    evolve_zz,
    lift_model,
    marginal,
    marginal_normalized,
    zz_eigenvalue,
)
from hartreelab.hartree import hartree_matrix_rhs
from hartreelab.states import (
    DensityMatrix,
    ModelSpec,
    QubitState,
    dicke_log_binomial,
    product_state,
)

ZZ = ModelSpec.zz()
PHI = QubitState(0.8, 0.6)


def random_state(rng) -> QubitState:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return QubitState.from_unnormalized(v[0], v[1])


def random_hermitian_model(rng) -> ModelSpec:
    one = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    one = one + one.conj().T
    two = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    two = two + two.conj().T
    swap = np.zeros((4, 4))
    swap[0, 0] = swap[3, 3] = swap[1, 2] = swap[2, 1] = 1.0
    two = two + swap @ two @ swap
    return ModelSpec(one, two)


def dicke_vector(n_tot: int, n: int) -> np.ndarray:
    """Symmetric basis state with n zeros, in the 2^N product basis."""
    v = np.zeros(2**n_tot)
    for idx in range(2**n_tot):
        if n_tot - bin(idx).count("1") == n:
            v[idx] = 1.0
    return v / np.linalg.norm(v)


class TestZZEigenvalue:
    def test_small_cases(self):
        assert zz_eigenvalue(2, 1) == -1.0
        assert zz_eigenvalue(4, 1) == 0.0
        assert zz_eigenvalue(4, 0) == 2.0
        assert zz_eigenvalue(4, 0) == zz_eigenvalue(4, 4)

    def test_reflection_symmetry(self):
        for n_tot in (3, 7, 100):
            for n in range(n_tot + 1):
                assert zz_eigenvalue(n_tot, n) == zz_eigenvalue(n_tot, n_tot - n)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            zz_eigenvalue(1, 0)
        with pytest.raises(ValueError):
            zz_eigenvalue(4, 5)

    def test_dataclass_wrapper(self):
        ev = ZZEigenvalue.compute(6, 2)
        assert ev.value == zz_eigenvalue(6, 2)


class TestEvolveZZ:
    def test_pole_state_grows_at_half_n_rate(self):
        n_tot, t = 9, 1.3
        state = evolve_zz(QubitState(1.0, 0.0), n_tot, t)
        assert state.log_mags[n_tot] == pytest.approx(0.5 * n_tot * t, abs=1e-12)
        assert np.all(np.isneginf(state.log_mags[:n_tot]))

    def test_time_zero_is_the_product_state(self):
        state = evolve_zz(PHI, 12, 0.0)
        base = product_state(PHI, 12)
        np.testing.assert_array_equal(state.log_mags, base.log_mags)
        np.testing.assert_array_equal(state.phases, base.phases)

    def test_against_full_space_matrix_exponential(self):
        # independent oracle: assemble the 16-dim generator, exponentiate,
        # project onto the symmetric basis
        n_tot, t = 4, 0.7
        z = np.diag([1.0, -1.0])
        gen = np.zeros((16, 16), dtype=complex)
        for i in range(n_tot):
            for j in range(i + 1, n_tot):
                ops = [np.eye(2)] * n_tot
                ops[i] = z
                ops[j] = z
                term = ops[0]
                for op in ops[1:]:
                    term = np.kron(term, op)
                gen += term / (n_tot - 1)
        psi = PHI.as_array()
        for _ in range(n_tot - 1):
            psi = np.kron(psi, PHI.as_array())
        psi_t = scipy.linalg.expm(gen * t) @ psi

        state = evolve_zz(PHI, n_tot, t)
        for n in range(n_tot + 1):
            want = dicke_vector(n_tot, n) @ psi_t
            got = state.amplitude(n).to_complex()
            assert abs(got - want) <= 1e-10 * abs(want)

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            evolve_zz(PHI, 4, -0.1)

    def test_large_n_smoke(self):
        state = evolve_zz(PHI, 10**6, 1.0)
        assert math.isfinite(state.squared_norm_log())
        assert state.squared_norm_log() > 0


class TestLiftModel:
    def test_zz_lift_is_diagonal_with_known_rates(self):
        lifted = lift_model(ZZ, 6).matrix
        off = lifted - np.diag(np.diag(lifted))
        assert np.abs(off).max() == 0.0
        rates = np.diag(-1j * lifted).real
        for n in range(7):
            assert rates[n] == pytest.approx(zz_eigenvalue(6, n), abs=1e-12)

    def test_collective_weight_operator(self):
        model = ModelSpec(np.diag([1.0, -1.0]), np.zeros((4, 4)))
        lifted = lift_model(model, 3).matrix
        np.testing.assert_allclose(np.diag(lifted).real, [-3, -1, 1, 3], atol=1e-12)
        assert np.abs(lifted - np.diag(np.diag(lifted))).max() == 0.0

    def test_against_symmetrizer_projection(self):
        rng = np.random.default_rng(41)
        model = random_hermitian_model(rng)
        n_tot = 5
        basis = np.stack([dicke_vector(n_tot, n) for n in range(n_tot + 1)], axis=1)
        full = _full_model_operator(model, n_tot)
        projected = basis.conj().T @ full @ basis
        lifted = lift_model(model, n_tot).matrix
        assert np.abs(projected - lifted).max() < 1e-10

    def test_hermitian_lift_is_hermitian(self):
        rng = np.random.default_rng(2)
        lifted = lift_model(random_hermitian_model(rng), 7).matrix
        assert np.abs(lifted - lifted.conj().T).max() < 1e-10


def _full_model_operator(model: ModelSpec, n_tot: int) -> np.ndarray:
    """Direct product-space assembly, independent of the package routines."""
    dim = 2**n_tot
    eye = np.eye(2, dtype=complex)

    def place(op, sites):
        mats = [eye] * n_tot
        if len(sites) == 1:
            mats[sites[0]] = op
            out = mats[0]
            for m in mats[1:]:
                out = np.kron(out, m)
            return out
        out = np.zeros((dim, dim), dtype=complex)
        t = op.reshape(2, 2, 2, 2)
        for a in range(2):
            for b in range(2):
                for c in range(2):
                    for d in range(2):
                        if t[a, b, c, d] == 0:
                            continue
                        unit_i = np.zeros((2, 2), dtype=complex)
                        unit_i[a, c] = 1.0
                        unit_j = np.zeros((2, 2), dtype=complex)
                        unit_j[b, d] = 1.0
                        mats = [eye] * n_tot
                        mats[sites[0]] = unit_i
                        mats[sites[1]] = unit_j
                        term = mats[0]
                        for m in mats[1:]:
                            term = np.kron(term, m)
                        out += t[a, b, c, d] * term
        return out

    total = np.zeros((dim, dim), dtype=complex)
    for i in range(n_tot):
        total += place(model.a1, [i])
    for i in range(n_tot):
        for j in range(i + 1, n_tot):
            total += place(model.a2, [i, j]) / (n_tot - 1)
    return total


class TestEvolveGeneral:
    def test_time_zero_is_the_product_state(self):
        state = evolve_general(ZZ, PHI, 8, 0.0)
        base = product_state(PHI, 8)
        np.testing.assert_allclose(state.log_mags, base.log_mags, atol=1e-12)

    def test_matches_diagonal_path_on_zz(self):
        state_gen = evolve_general(ZZ, PHI, 50, 0.3)
        state_zz = evolve_zz(PHI, 50, 0.3)
        got = marginal_normalized(state_gen, 1).entries
        want = marginal_normalized(state_zz, 1).entries
        assert np.linalg.norm(got - want) < 1e-9
        assert state_gen.squared_norm_log() == pytest.approx(
            state_zz.squared_norm_log(), rel=1e-9, abs=1e-9
        )

    def test_hermitian_evolution_preserves_norm(self):
        x = np.array([[0.0, 1.0], [1.0, 0.0]])
        model = ModelSpec(x, np.zeros((4, 4)))
        for t in (0.3, 1.1, 2.7):
            state = evolve_general(model, PHI, 20, t)
            assert abs(state.squared_norm_log()) < 1e-9

    def test_capacity_cap(self):
        with pytest.raises(CapacityError):
            evolve_general(ZZ, PHI, DENSE_EVOLUTION_CAP + 1, 0.1)


class TestMarginal:
    def test_product_state_marginal_is_the_projector(self):
        rho = marginal(product_state(PHI, 9), 1)
        assert np.abs(rho.entries - PHI.projector()).max() < 1e-12
        assert rho.log_scale == pytest.approx(0.0, abs=1e-10)

    def test_single_particle_entries_match_direct_sums(self):
        # direct evaluation of the four matrix-element sums at small N
        n_tot, t = 4, 0.9
        phi0, phi1 = PHI.c0, PHI.c1
        lam = [zz_eigenvalue(n_tot, n) for n in range(n_tot + 1)]
        r00 = abs(phi0) ** 2 * sum(
            abs(phi1) ** (2 * s)
            * abs(phi0) ** (2 * (n_tot - 1 - s))
            * math.comb(n_tot - 1, s)
            * math.exp(2 * lam[s] * t)
            for s in range(n_tot)
        )
        r11 = abs(phi1) ** 2 * sum(
            abs(phi0) ** (2 * s)
            * abs(phi1) ** (2 * (n_tot - 1 - s))
            * math.comb(n_tot - 1, s)
            * math.exp(2 * lam[s] * t)
            for s in range(n_tot)
        )
        r01 = (
            phi0
            * np.conj(phi1)
            * sum(
                abs(phi0) ** (2 * s)
                * abs(phi1) ** (2 * (n_tot - 1 - s))
                * math.comb(n_tot - 1, s)
                * math.exp((lam[s + 1] + lam[s]) * t)
                for s in range(n_tot)
            )
        )
        direct = np.array([[r00, r01], [np.conj(r01), r11]])

        rho = marginal(evolve_zz(PHI, n_tot, t), 1)
        physical = rho.entries * math.exp(rho.log_scale)
        assert np.abs(physical - direct).max() < 1e-10 * np.abs(direct).max()

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_against_brute_force_partial_trace(self, k):
        rng = np.random.default_rng(7)
        phi = random_state(rng)
        n_tot, t = 8, 1.1
        fast = marginal(evolve_zz(phi, n_tot, t), k)
        slow = brute_force_evolve(ZZ, phi, n_tot, t, k)
        assert np.abs(fast.entries - slow.entries).max() < 1e-10
        assert fast.log_scale == pytest.approx(slow.log_scale, abs=1e-10)

    def test_marginal_consistency_under_nested_traces(self):
        state = evolve_zz(PHI, 11, 0.8)
        for k in (3, 2):
            outer = marginal(state, k).trace_last_qubit()
            inner = marginal(state, k - 1)
            assert np.abs(outer.entries - inner.entries).max() < 1e-11

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_unnormalized_trace_equals_state_norm(self, k):
        state = evolve_zz(PHI, 30, 1.7)
        assert marginal(state, k).log_trace() == pytest.approx(
            state.squared_norm_log(), abs=1e-10
        )

    def test_vandermonde_normalization_in_log_domain(self):
        n_tot, k = 40, 3
        for n in (0, 5, 17, 40):
            terms = [
                dicke_log_binomial(k, m) + dicke_log_binomial(n_tot - k, n - m)
                for m in range(k + 1)
                if 0 <= n - m <= n_tot - k
            ]
            top = max(terms)
            total = top + math.log(sum(math.exp(v - top) for v in terms))
            assert total == pytest.approx(dicke_log_binomial(n_tot, n), abs=1e-12)

    def test_domain_errors(self):
        state = product_state(PHI, 3)
        with pytest.raises(ValueError):
            marginal(state, 3)  # k must stay below N
        with pytest.raises(ValueError):
            marginal(state, 0)

    def test_normalized_variant_has_unit_trace(self):
        for n_tot, t in [(5, 0.2), (60, 1.0), (500, 2.0)]:
            rho = marginal_normalized(evolve_zz(PHI, n_tot, t), 1)
            assert rho.trace() == pytest.approx(1.0, abs=1e-12)
            assert rho.log_scale == 0.0

    def test_balanced_state_turns_mixed_past_critical_time(self):
        from hartreelab.asymptotics import limit_marginal

        phi = QubitState.from_probability(0.5)
        rho = marginal_normalized(evolve_zz(phi, 200, 1.0), 1)
        assert abs(rho.entries[0, 1]) < rho.entries[0, 0].real
        limit = limit_marginal(phi, 1.0).rho.entries
        assert np.linalg.norm(rho.entries - limit) < 1e-2


class TestBBGKY:
    def _marginals(self, phi, n_tot, t):
        state = evolve_zz(phi, n_tot, t)
        return tuple(marginal_normalized(state, k) for k in (1, 2, 3))

    def test_matches_finite_difference_derivative(self):
        n_tot, t, delta = 6, 0.4, 1e-5
        r1, r2, r3 = self._marginals(PHI, n_tot, t)
        rhs = bbgky_rhs(ZZ, r1, r2, r3, n_tot).entries
        plus = self._marginals(PHI, n_tot, t + delta)[0].entries
        minus = self._marginals(PHI, n_tot, t - delta)[0].entries
        fd = (plus - minus) / (2 * delta)
        assert np.abs(rhs - fd).max() < 1e-6

    def test_hermitian_model_has_vanishing_corrections(self):
        rng = np.random.default_rng(19)
        model = random_hermitian_model(rng)
        phi = random_state(rng)
        state = evolve_general(model, phi, 6, 0.5)
        r1, r2, r3 = (marginal_normalized(state, k) for k in (1, 2, 3))

        from hartreelab.dynamics import _ptrace_last

        b1 = model.a1 - model.a1.conj().T
        b2 = model.a2 - model.a2.conj().T
        eye = np.eye(2)
        corr2 = 5 * _ptrace_last(
            np.kron(eye, b1) @ (r2.entries - np.kron(r1.entries, r1.entries)), 2, 1
        )
        corr3 = 2 * _ptrace_last(
            np.kron(eye, b2) @ (r3.entries - np.kron(r1.entries, r2.entries)), 3, 2
        )
        assert np.abs(corr2).max() <= 1e-12
        assert np.abs(corr3).max() <= 1e-12

    def test_product_closure_collapses_to_mean_field(self):
        gamma = PHI.projector()
        r1 = DensityMatrix(1, gamma)
        r2 = DensityMatrix(2, np.kron(gamma, gamma))
        r3 = DensityMatrix(3, np.kron(gamma, np.kron(gamma, gamma)))
        full = bbgky_rhs(ZZ, r1, r2, r3, 9).entries
        mean_field = hartree_matrix_rhs(ZZ, gamma)
        assert np.abs(full - mean_field).max() < 1e-12

    def test_dimension_mismatch_rejected(self):
        gamma = PHI.projector()
        r1 = DensityMatrix(1, gamma)
        with pytest.raises(ValueError):
            bbgky_rhs(ZZ, r1, r1, r1, 5)


class TestBruteForce:
    def test_time_zero_marginal_is_the_projector(self):
        rho = brute_force_evolve(ZZ, PHI, 5, 0.0, 1)
        assert np.abs(rho.entries - PHI.projector()).max() < 1e-12

    def test_matches_symmetric_subspace_path(self):
        fast = marginal(evolve_zz(PHI, 6, 0.5), 1)
        slow = brute_force_evolve(ZZ, PHI, 6, 0.5, 1)
        assert np.abs(fast.entries - slow.entries).max() < 1e-10
        assert fast.log_scale == pytest.approx(slow.log_scale, abs=1e-10)

    def test_hermitian_model_preserves_total_trace(self):
        rng = np.random.default_rng(3)
        model = random_hermitian_model(rng)
        for t in (0.4, 1.6):
            rho = brute_force_evolve(model, PHI, 5, t, 1)
            assert rho.log_trace() == pytest.approx(0.0, abs=1e-10)

    def test_capacity_cap(self):
        with pytest.raises(CapacityError):
            brute_force_evolve(ZZ, PHI, BRUTE_FORCE_CAP + 1, 0.1, 1)


class TestCrossPathEquivalence:
    def test_all_three_routes_agree_on_zz(self):
        rng = np.random.default_rng(101)
        for n_tot in (3, 6, 9):
            for t in (0.1, 1.0):
                for _ in range(5):
                    phi = random_state(rng)
                    diag = marginal_normalized(evolve_zz(phi, n_tot, t), 1).entries
                    dense = marginal_normalized(
                        evolve_general(ZZ, phi, n_tot, t), 1
                    ).entries
                    brute = brute_force_evolve(ZZ, phi, n_tot, t, 1).entries
                    assert np.linalg.norm(diag - dense) < 1e-9
                    assert np.linalg.norm(diag - brute) < 1e-9
