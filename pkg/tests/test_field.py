"""Phase sampling and field evaluation against direct-sum oracles."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

import zetalab as z
from zetalab.errors import DomainError, NonAscendingGrid
from zetalab.field import FieldEvaluator, derivative_sign

BAND_11 = z.DyadicBand(-1, 1)
BAND_13 = z.DyadicBand(-1, 3)


def all_ones_phases(band=BAND_11) -> z.PhaseAssignment:
    plist = z.sieve_band(band)
    return z.PhaseAssignment(model=z.PhaseModel.CIRCLE, primes=plist,
                             weights=np.ones(len(plist), dtype=np.complex128), seed=0)


def direct_oracle(phases: z.PhaseAssignment, j: int, h: float) -> float:
    """Independent slow oracle: plain Python loop over primes."""
    total = []
    for p, lg, w in zip(phases.primes.primes, phases.primes.logs, phases.weights):
        term = w * complex(math.cos(h * lg), -math.sin(h * lg))
        part = term.real if j % 2 == 0 else term.imag
        total.append(lg ** j / math.sqrt(p) * part)
    return derivative_sign(j) * math.fsum(total)


class TestSamplePhases:
    def test_circle_unit_modulus(self):
        plist = z.sieve_band(BAND_13)
        phases = z.sample_phases(z.PhaseModel.CIRCLE, plist, 7)
        assert np.all(np.abs(np.abs(phases.weights) - 1.0) <= 1e-12)

    def test_deterministic_bit_for_bit(self):
        plist = z.sieve_band(BAND_13)
        for model in z.PhaseModel:
            a = z.sample_phases(model, plist, 123456789)
            b = z.sample_phases(model, plist, 123456789)
            assert a.weights.tobytes() == b.weights.tobytes()

    def test_different_seeds_differ(self):
        plist = z.sieve_band(BAND_13)
        a = z.sample_phases(z.PhaseModel.CIRCLE, plist, 1)
        b = z.sample_phases(z.PhaseModel.CIRCLE, plist, 2)
        assert not np.array_equal(a.weights, b.weights)

    def test_gaussian_second_moment(self):
        # E|Z|^2 = 1/2 + 1/2 = 1; check on 1e5 primes within 5 sigma
        plist4 = z.sieve_band(z.DyadicBand(-1, 4))
        n = 100_000
        sub = z.PrimeBandList(band=plist4.band, primes=plist4.primes[:n],
                              logs=plist4.logs[:n])
        phases = z.sample_phases(z.PhaseModel.GAUSSIAN, sub, 31337)
        mean_sq = float(np.mean(np.abs(phases.weights) ** 2))
        assert abs(mean_sq - 1.0) <= 5.0 / math.sqrt(n)

    def test_record_roundtrip(self):
        plist = z.sieve_band(BAND_13)
        for model in z.PhaseModel:
            phases = z.sample_phases(model, plist, 99)
            clone = z.PhaseAssignment.from_record(phases.to_record())
            assert clone.weights.tobytes() == phases.weights.tobytes()
            assert clone.seed == phases.seed and clone.model is model

    def test_record_rejects_noncanonical_list(self):
        plist = z.sieve_band(BAND_13)
        sub = z.PrimeBandList(band=plist.band, primes=plist.primes[:3], logs=plist.logs[:3])
        phases = z.sample_phases(z.PhaseModel.CIRCLE, sub, 1)
        with pytest.raises(ValueError):
            phases.to_record()


class TestEvalDerivative:
    def test_all_ones_j0_h0(self):
        # sum of 1/sqrt(p) over {2, 3, 5, 7}
        expected = math.fsum(1.0 / math.sqrt(p) for p in (2, 3, 5, 7))
        assert z.eval_derivative(all_ones_phases(), 0, 0.0) == pytest.approx(expected, rel=1e-15)

    @pytest.mark.parametrize("j", [1, 3])
    def test_all_ones_odd_j_h0_is_zero(self, j):
        assert z.eval_derivative(all_ones_phases(), j, 0.0) == 0.0

    def test_all_ones_j2_h0_sign(self):
        expected = -math.fsum(math.log(p) ** 2 / math.sqrt(p) for p in (2, 3, 5, 7))
        assert z.eval_derivative(all_ones_phases(), 2, 0.0) == pytest.approx(expected, rel=1e-15)

    def test_matches_slow_oracle(self):
        plist = z.sieve_band(BAND_11)
        phases = z.sample_phases(z.PhaseModel.CIRCLE, plist, 5)
        for j in range(4):
            for h in (0.0, 0.25, 0.9, 1.0):
                assert z.eval_derivative(phases, j, h) == pytest.approx(
                    direct_oracle(phases, j, h), rel=1e-13, abs=1e-13)

    def test_h_domain_errors(self):
        phases = all_ones_phases()
        with pytest.raises(DomainError):
            z.eval_derivative(phases, 0, -0.1)
        with pytest.raises(DomainError):
            z.eval_derivative(phases, 0, 1.0001)
        with pytest.raises(DomainError):
            z.eval_derivative(phases, -1, 0.5)

    def test_parity_of_zero_phase_field(self):
        # with theta_p = 0 the field is a cosine sum; flipping the frequency
        # sign via weights e^{+2ih ln p} leaves the value unchanged
        plist = z.sieve_band(BAND_11)
        base = all_ones_phases()
        for h in (0.1, 0.37, 0.8):
            adjusted = z.PhaseAssignment(
                model=z.PhaseModel.CIRCLE, primes=plist,
                weights=np.exp(2j * h * plist.logs), seed=0)
            assert z.eval_derivative(adjusted, 0, h) == pytest.approx(
                z.eval_derivative(base, 0, h), rel=1e-12)

    def test_derivative_sign_convention(self):
        assert [derivative_sign(j) for j in range(6)] == [1, 1, -1, -1, 1, 1]


class TestEvalGrid:
    def test_single_point_equals_pointwise_exactly(self):
        phases = z.sample_phases(z.PhaseModel.CIRCLE, z.sieve_band(BAND_13), 3)
        grid = np.array([0.37])
        assert z.eval_derivative_grid(phases, 0, grid)[0] == z.eval_derivative(phases, 0, 0.37)

    def test_non_equispaced_falls_back_to_pointwise(self):
        phases = z.sample_phases(z.PhaseModel.CIRCLE, z.sieve_band(BAND_13), 3)
        grid = np.array([0.0, 0.1, 0.25, 0.7, 1.0])
        vals = z.eval_derivative_grid(phases, 1, grid)
        for hv, val in zip(grid, vals):
            assert val == z.eval_derivative(phases, 1, float(hv))

    @pytest.mark.parametrize("path", [None, "recurrence"])
    @pytest.mark.parametrize("seed", [0, 1])
    @pytest.mark.parametrize("j", [0, 2])
    def test_fast_path_equivalence_4097(self, seed, j, path):
        phases = z.sample_phases(z.PhaseModel.CIRCLE, z.sieve_band(BAND_13), seed)
        grid = np.linspace(0.0, 1.0, 4097)
        fast = z.eval_derivative_grid(phases, j, grid, _force_path=path)
        idx = np.arange(0, 4097, 256)
        direct = np.array([z.eval_derivative(phases, j, float(grid[i])) for i in idx])
        rel = np.max(np.abs(fast[idx] - direct)) / np.max(np.abs(direct))
        assert rel <= 1e-9

    def test_fast_paths_agree_with_each_other(self):
        phases = z.sample_phases(z.PhaseModel.GAUSSIAN, z.sieve_band(BAND_13), 8)
        grid = np.linspace(0.0, 1.0, 2049)
        banded = z.eval_derivative_grid(phases, 1, grid)
        recur = z.eval_derivative_grid(phases, 1, grid, _force_path="recurrence")
        assert np.max(np.abs(banded - recur)) / np.max(np.abs(banded)) <= 1e-10

    def test_grid_errors(self):
        phases = all_ones_phases()
        with pytest.raises(NonAscendingGrid):
            z.eval_derivative_grid(phases, 0, np.array([0.3, 0.2]))
        with pytest.raises(NonAscendingGrid):
            z.eval_derivative_grid(phases, 0, np.array([0.3, 0.3]))
        with pytest.raises(NonAscendingGrid):
            z.eval_derivative_grid(phases, 0, np.array([]))
        with pytest.raises(DomainError):
            z.eval_derivative_grid(phases, 0, np.array([0.5, 1.5]))


class TestFieldEvaluator:
    @pytest.mark.parametrize("band", [z.DyadicBand(-1, 2), z.DyadicBand(0, 3), BAND_13])
    def test_matches_direct_all_orders(self, band):
        plist = z.sieve_band(band)
        phases = z.sample_phases(z.PhaseModel.GAUSSIAN, plist, 11)
        ev = phases.evaluator()
        for q in range(7):
            for h in (0.0, 0.123, 0.5, 1.0):
                direct = z.eval_derivative(phases, q, h)
                scale = max(1.0, abs(direct))
                assert abs(ev.derivative(q, h) - direct) <= 1e-11 * scale

    def test_matches_direct_large_band(self):
        plist = z.sieve_band(z.DyadicBand(-1, 4))
        phases = z.sample_phases(z.PhaseModel.CIRCLE, plist, 17)
        ev = phases.evaluator()
        for q in (0, 1, 3):
            direct = z.eval_derivative(phases, q, 0.61)
            assert abs(ev.derivative(q, 0.61) - direct) <= 1e-10 * max(1.0, abs(direct))

    def test_vectorized_matches_scalar(self):
        phases = z.sample_phases(z.PhaseModel.CIRCLE, z.sieve_band(BAND_13), 2)
        ev = phases.evaluator()
        hs = np.linspace(0.0, 1.0, 17)
        vals = ev.derivative(1, hs)
        for hv, val in zip(hs, vals):
            assert val == pytest.approx(ev.derivative(1, float(hv)), abs=1e-14)


class TestVariance:
    def test_exact_variance_band_minus1_1(self):
        plist = z.sieve_band(BAND_11)
        expected = float(Fraction(1, 2) * (Fraction(1, 2) + Fraction(1, 3)
                                           + Fraction(1, 5) + Fraction(1, 7)))
        assert z.exact_variance(plist, 0) == pytest.approx(expected, rel=1e-15)

    def test_exact_variance_empty(self):
        empty = z.PrimeBandList(band=BAND_11, primes=np.empty(0, dtype=np.int64),
                                logs=np.empty(0))
        assert z.exact_variance(empty, 0) == 0.0

    @pytest.mark.parametrize("j", range(5))
    def test_variance_is_half_moment(self, j):
        plist = z.sieve_band(z.DyadicBand(-1, 2))
        assert z.exact_variance(plist, j) == pytest.approx(
            z.prime_log_moment(plist, 2 * j) / 2.0, rel=1e-14)

    def test_bound_rhs_zero_alpha(self):
        assert z.variance_bound_rhs(BAND_11, 0, 0.0) == 0.0

    def test_bound_rhs_alpha_scaling(self):
        base = z.variance_bound_rhs(BAND_13, 1, 0.25)
        assert z.variance_bound_rhs(BAND_13, 1, 0.5) == pytest.approx(4.0 * base, rel=1e-15)

    def test_bound_rhs_band_minus1_2(self):
        primes_16 = [p for p in range(2, 55) if z.is_prime(p)]
        assert len(primes_16) == 16
        oracle = 2.0 ** -4 * math.fsum(math.log(p) ** 4 / (2.0 * p) for p in primes_16)
        assert z.variance_bound_rhs(z.DyadicBand(-1, 2), 0, 1.0) == pytest.approx(
            oracle, rel=1e-14)


class TestFiniteDifferences:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("j", [0, 1, 2])
    def test_central_difference_matches_next_order(self, seed, j):
        plist = z.sieve_band(BAND_13)
        phases = z.sample_phases(z.PhaseModel.CIRCLE, plist, seed)
        delta = 1e-5
        for h in (0.37, 0.61):
            fd = (z.eval_derivative(phases, j, h + delta)
                  - z.eval_derivative(phases, j, h - delta)) / (2.0 * delta)
            target = z.eval_derivative(phases, j + 1, h)
            scale = max(abs(target), math.sqrt(z.exact_variance(plist, j + 1)))
            assert abs(fd - target) <= 1e-3 * scale


def test_field_spec_validation():
    z.FieldSpec(BAND_13, 3, z.PhaseModel.CIRCLE)
    with pytest.raises(DomainError):
        z.FieldSpec(BAND_13, 4, z.PhaseModel.CIRCLE)
    with pytest.raises(DomainError):
        z.FieldSpec(BAND_13, -1, z.PhaseModel.CIRCLE)


@given(st.integers(min_value=0, max_value=2 ** 64 - 1))
@settings(max_examples=15, deadline=None)
def test_seed_determinism_property(seed):
    plist = z.sieve_band(BAND_11)
    a = z.sample_phases(z.PhaseModel.CIRCLE, plist, seed)
    b = z.sample_phases(z.PhaseModel.CIRCLE, plist, seed)
    assert a.weights.tobytes() == b.weights.tobytes()
