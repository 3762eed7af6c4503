import math

import mpmath
import numpy as np
import pytest

from hartreelab.states import (
    DensityMatrix,
    DickeState,
    LogComplex,
    ModelSpec,
    QubitState,
    dicke_log_binomial,
    log_sum_exp_complex,
    product_state,
)


def _lse_oracle(terms, dps=80):
    """Extended-precision reference sum, independent of the log-domain path."""
    with mpmath.workdps(dps):
        total = mpmath.mpc(0)
        for t in terms:
            if t.is_zero:
                continue
            total += mpmath.exp(mpmath.mpc(t.log_mag, t.phase))
        if total == 0:
            return LogComplex.zero()
        return LogComplex(float(mpmath.log(abs(total))), float(mpmath.arg(total)))


class TestLogComplex:
    def test_round_trip_moderate_magnitudes(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            z = complex(rng.normal(), rng.normal()) * 10.0 ** rng.integers(-16, 16)
            back = LogComplex.from_complex(z).to_complex()
            assert abs(back - z) <= 1e-14 * abs(z)

    def test_round_trip_extreme_magnitudes(self):
        # storing ln|z| as a double costs up to ~ulp(log_mag) in relative
        # accuracy, which passes 1e-14 only below |log_mag| ~ 45
        rng = np.random.default_rng(11)
        for _ in range(300):
            z = complex(rng.normal(), rng.normal()) * 10.0 ** rng.integers(-290, 290)
            lc = LogComplex.from_complex(z)
            tol = max(1e-14, abs(lc.log_mag) * 2.0**-52)
            assert abs(lc.to_complex() - z) <= tol * abs(z)

    def test_zero_round_trip(self):
        assert LogComplex.from_complex(0).to_complex() == 0

    def test_multiplication_adds_logs(self):
        a = LogComplex(2.0, 0.5)
        b = LogComplex(3.0, 1.0)
        prod = a * b
        assert prod.log_mag == 5.0
        assert prod.phase == pytest.approx(1.5)

    def test_zero_is_absorbing(self):
        a = LogComplex(700.0, 2.0)
        assert (a * LogComplex.zero()).is_zero
        assert (LogComplex.zero() * a).is_zero

    def test_phase_wrapped_into_half_open_interval(self):
        a = LogComplex(0.0, 3.0)
        prod = a * a
        assert -math.pi < prod.phase <= math.pi
        assert prod.phase == pytest.approx(6.0 - 2 * math.pi)


class TestLogSumExpComplex:
    def test_exact_cancellation_gives_zero(self):
        result = log_sum_exp_complex(
            [LogComplex(math.log(1.0), 0.0), LogComplex(math.log(1.0), math.pi)]
        )
        assert result.is_zero

    def test_equal_terms_double(self):
        result = log_sum_exp_complex(
            [LogComplex(math.log(2.0), 0.0), LogComplex(math.log(2.0), 0.0)]
        )
        assert result.log_mag == pytest.approx(math.log(4.0), abs=1e-14)
        assert result.phase == 0.0

    def test_all_zero_input(self):
        assert log_sum_exp_complex([LogComplex.zero()] * 3).is_zero

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            log_sum_exp_complex([])

    def test_thousand_random_terms_match_extended_precision(self):
        rng = np.random.default_rng(5)
        terms = [
            LogComplex(float(rng.uniform(0.0, 500.0)), float(rng.uniform(-math.pi, math.pi)))
            for _ in range(1000)
        ]
        got = log_sum_exp_complex(terms)
        want = _lse_oracle(terms)
        assert got.log_mag == pytest.approx(want.log_mag, rel=1e-12, abs=1e-12)
        assert got.phase == pytest.approx(want.phase, abs=1e-12)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(17)
        terms = [
            LogComplex(float(rng.uniform(-5, 40)), float(rng.uniform(-math.pi, math.pi)))
            for _ in range(64)
        ]
        base = log_sum_exp_complex(terms)
        for seed in range(5):
            perm = np.random.default_rng(seed).permutation(len(terms))
            other = log_sum_exp_complex([terms[i] for i in perm])
            assert other.log_mag == pytest.approx(base.log_mag, rel=1e-12)
            assert other.phase == pytest.approx(base.phase, abs=1e-12)


def _stirling_log_factorial(m: int) -> float:
    """Independent series oracle: ln m! up to O(m^-7)."""
    return (
        m * math.log(m)
        - m
        + 0.5 * math.log(2 * math.pi * m)
        + 1.0 / (12.0 * m)
        - 1.0 / (360.0 * m**3)
        + 1.0 / (1260.0 * m**5)
    )


class TestDickeLogBinomial:
    def test_small_values(self):
        assert dicke_log_binomial(4, 2) == pytest.approx(math.log(6.0), abs=1e-14)
        assert dicke_log_binomial(10, 0) == 0.0

    def test_exact_integers_up_to_sixty(self):
        for n_total in range(1, 61):
            for n in range(n_total + 1):
                exact = math.comb(n_total, n)
                got = math.exp(dicke_log_binomial(n_total, n))
                assert got == pytest.approx(exact, rel=1e-12)

    def test_huge_binomial_matches_stirling_series(self):
        want = (
            _stirling_log_factorial(100000)
            - 2.0 * _stirling_log_factorial(50000)
        )
        assert dicke_log_binomial(100000, 50000) == pytest.approx(want, rel=1e-12)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            dicke_log_binomial(4, 5)
        with pytest.raises(ValueError):
            dicke_log_binomial(4, -1)


class TestQubitState:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            QubitState(1.0, 1.0)

    def test_from_probability(self):
        phi = QubitState.from_probability(0.64, 0.3, -0.2)
        assert phi.prob0 == pytest.approx(0.64, abs=1e-15)
        assert np.angle(phi.c0) == pytest.approx(0.3)
        assert np.angle(phi.c1) == pytest.approx(-0.2)

    def test_projector_is_rank_one(self):
        phi = QubitState.from_probability(0.3, 0.1, 0.7)
        proj = phi.projector()
        assert np.trace(proj).real == pytest.approx(1.0)
        assert np.linalg.norm(proj @ proj - proj) < 1e-14


class TestProductState:
    def test_pole_state_is_a_single_amplitude(self):
        state = product_state(QubitState(1.0, 0.0), 5)
        assert state.log_mags[5] == 0.0
        assert np.all(np.isneginf(state.log_mags[:5]))

    def test_balanced_two_qubit_expansion(self):
        phi = QubitState(1 / math.sqrt(2), 1 / math.sqrt(2))
        state = product_state(phi, 2)
        amplitudes = [a.to_complex() for a in state.amplitudes]
        assert amplitudes == pytest.approx([0.5, 1 / math.sqrt(2), 0.5], abs=1e-15)

    def test_norm_against_binomial_theorem(self):
        # direct-sum oracle: sum_n C(N,n) p0^n p1^(N-n) = 1
        phi = QubitState(0.8, 0.6)
        n_tot = 8
        direct = sum(
            math.comb(n_tot, n) * 0.64**n * 0.36 ** (n_tot - n)
            for n in range(n_tot + 1)
        )
        assert direct == pytest.approx(1.0, abs=1e-15)
        state = product_state(phi, n_tot)
        assert state.squared_norm_log() == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("n_particles", [2, 10, 100, 10000])
    def test_random_states_stay_normalized(self, n_particles):
        rng = np.random.default_rng(23)
        for _ in range(100):
            raw = rng.normal(size=2) + 1j * rng.normal(size=2)
            phi = QubitState.from_unnormalized(raw[0], raw[1])
            state = product_state(phi, n_particles)
            assert abs(state.squared_norm_log()) < 1e-10

    def test_amplitude_accessor_matches_arrays(self):
        state = product_state(QubitState(0.6, 0.8j), 4)
        amp = state.amplitude(2)
        assert amp.log_mag == state.log_mags[2]
        assert amp.phase == state.phases[2]


class TestDickeState:
    def test_length_validation(self):
        with pytest.raises(ValueError):
            DickeState(3, np.zeros(3), np.zeros(3))

    def test_from_amplitudes_round_trip(self):
        amps = [LogComplex(0.0, 0.1), LogComplex(-1.0, -0.2), LogComplex.zero()]
        state = DickeState.from_amplitudes(amps)
        assert state.n_particles == 2
        assert state.amplitudes[:2] == tuple(amps[:2])
        assert state.amplitudes[2].is_zero


class TestDensityMatrix:
    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            DensityMatrix(1, np.array([[0.5, 0.1], [0.3, 0.5]]))

    def test_normalized_and_trace(self):
        dm = DensityMatrix(1, np.diag([2.0, 2.0]), log_scale=3.0)
        assert dm.trace() == pytest.approx(4.0)
        assert dm.log_trace() == pytest.approx(3.0 + math.log(4.0))
        norm = dm.normalized()
        assert norm.trace() == pytest.approx(1.0)
        assert norm.log_scale == 0.0

    def test_trace_last_qubit(self):
        rng = np.random.default_rng(3)
        raw = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = raw @ raw.conj().T
        rho /= np.trace(rho).real
        dm = DensityMatrix(2, rho)
        reduced = dm.trace_last_qubit()
        expect = rho.reshape(2, 2, 2, 2)
        expect = np.einsum("abcb->ac", expect)
        assert np.allclose(reduced.entries, expect, atol=1e-14)


class TestModelSpec:
    def test_zz_model_is_anti_hermitian_and_swap_symmetric(self):
        model = ModelSpec.zz()
        assert not model.is_hermitian
        assert np.abs(model.a2 + model.a2.conj().T).max() < 1e-15

    def test_rejects_swap_asymmetric_interaction(self):
        bad = np.zeros((4, 4), dtype=complex)
        bad[0, 1] = 1.0
        with pytest.raises(ValueError):
            ModelSpec(np.zeros((2, 2)), bad)

    def test_arrays_are_frozen(self):
        model = ModelSpec.zz()
        with pytest.raises(ValueError):
            model.a1[0, 0] = 5.0
