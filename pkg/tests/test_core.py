import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polya_lattice.core import (
    ModelParams,
    as_composition,
    log_dirichlet_density,
    log_multinomial,
    log_polya_pmf,
    log_rising_factorial,
    log_sequence_prob,
    polya_pmf,
)
from polya_lattice.simplex import iter_compositions

from oracles import polya_pmf_by_sequences, sequence_prob_by_steps


class TestModelParams:
    def test_theta_is_derived(self):
        p = ModelParams(alpha=5, m=20)
        assert p.theta == 100
        assert isinstance(p.alpha, float)

    @pytest.mark.parametrize("alpha", [0, -1, float("nan"), float("inf")])
    def test_rejects_bad_alpha(self, alpha):
        with pytest.raises(ValueError):
            ModelParams(alpha, 2)

    @pytest.mark.parametrize("m", [0, -3, 2.5, True])
    def test_rejects_bad_m(self, m):
        with pytest.raises(ValueError):
            ModelParams(1.0, m)

    def test_theta_cannot_be_passed(self):
        with pytest.raises(TypeError):
            ModelParams(1.0, 2, theta=3.0)


class TestComposition:
    def test_accepts_numpy_ints(self):
        assert as_composition(np.array([3, 0, 1])) == (3, 0, 1)

    @pytest.mark.parametrize("bad", [(1, -1), (1.5, 0), ()])
    def test_rejects_invalid(self, bad):
        with pytest.raises(ValueError):
            as_composition(bad)

    def test_length_must_match_params(self):
        with pytest.raises(ValueError):
            as_composition((1, 2), ModelParams(1, 3))


class TestRisingFactorial:
    @pytest.mark.parametrize(
        "a, k, expected",
        [(1, 3, math.log(6)), (0.5, 2, math.log(0.75)), (7.3, 0, 0.0)],
    )
    def test_examples(self, a, k, expected):
        assert log_rising_factorial(a, k) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("a", [0, -0.5])
    def test_rejects_non_positive_base(self, a):
        with pytest.raises(ValueError):
            log_rising_factorial(a, 3)

    def test_rejects_negative_k(self):
        with pytest.raises(ValueError):
            log_rising_factorial(1.0, -1)

    @pytest.mark.parametrize("a", [0.1, 0.5, 1.0, 2.0, 7.3, 100.0])
    def test_direct_sum_matches_log_gamma(self, a):
        for k in range(1, 65):
            direct = log_rising_factorial(a, k)
            via_gamma = math.lgamma(a + k) - math.lgamma(a)
            assert direct == pytest.approx(via_gamma, rel=1e-12, abs=1e-13)

    def test_large_k_matches_exact_integer_product(self):
        # 1^[k] = k!
        for k in (65, 100, 170, 1000):
            assert log_rising_factorial(1.0, k) == pytest.approx(math.log(math.factorial(k)), rel=1e-13)


class TestPolyaPmf:
    def test_uniform_case_example(self):
        # alpha = 1 is uniform over the C(8,2) = 28 compositions of 6 into 3 parts
        comps = list(iter_compositions(3, 6))
        assert len(comps) == 28
        assert log_polya_pmf(ModelParams(1, 3), (3, 2, 1)) == pytest.approx(math.log(1 / 28), abs=1e-12)

    def test_single_color(self):
        assert log_polya_pmf(ModelParams(2.5, 1), (17,)) == 0.0

    @pytest.mark.parametrize("alpha, m", [(1, 3), (0.3, 4), (5, 2)])
    def test_empty_configuration(self, alpha, m):
        assert log_polya_pmf(ModelParams(alpha, m), (0,) * m) == 0.0

    @pytest.mark.parametrize("alpha, m, n", [(1, 3, 6), (Fraction(1, 2), 3, 5), (2, 2, 7), (3, 4, 4)])
    def test_matches_sequence_enumeration(self, alpha, m, n):
        exact = polya_pmf_by_sequences(alpha, m, n)
        params = ModelParams(float(alpha), m)
        for comp, p in exact.items():
            assert log_polya_pmf(params, comp) == pytest.approx(math.log(p), abs=1e-12)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 5.0])
    @pytest.mark.parametrize("m, n", [(1, 30), (2, 30), (3, 30), (4, 30), (4, 7), (3, 0)])
    def test_normalization(self, alpha, m, n):
        params = ModelParams(alpha, m)
        total = math.fsum(polya_pmf(params, x) for x in iter_compositions(m, n))
        assert total == pytest.approx(1.0, abs=1e-10)

    @given(
        alpha=st.floats(0.05, 20),
        counts=st.lists(st.integers(0, 40), min_size=1, max_size=6),
        data=st.data(),
    )
    def test_exchangeable(self, alpha, counts, data):
        params = ModelParams(alpha, len(counts))
        perm = data.draw(st.permutations(counts))
        assert abs(log_polya_pmf(params, counts) - log_polya_pmf(params, perm)) <= 1e-13

    @given(m=st.integers(1, 5), n=st.integers(0, 12), data=st.data())
    def test_uniform_when_alpha_is_one(self, m, n, data):
        size = math.comb(n + m - 1, m - 1)
        x = data.draw(st.sampled_from(list(iter_compositions(m, n))))
        assert polya_pmf(ModelParams(1.0, m), x) == pytest.approx(1 / size, rel=1e-12)

    @given(alpha=st.floats(0.05, 20), counts=st.lists(st.integers(0, 30), min_size=1, max_size=5))
    def test_pmf_is_multinomial_times_sequence_probability(self, alpha, counts):
        params = ModelParams(alpha, len(counts))
        seq = [c for c, k in enumerate(counts) for _ in range(k)]
        lhs = log_polya_pmf(params, counts)
        rhs = log_multinomial(counts) + log_sequence_prob(params, seq)
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_large_level_stays_finite(self):
        logp = log_polya_pmf(ModelParams(1.0, 20), [150] * 20)
        assert math.isfinite(logp) and logp < 0


class TestSequenceProb:
    def test_rrrggb(self):
        colors = (0, 0, 0, 1, 1, 2)
        oracle = sequence_prob_by_steps(1, 3, colors)
        assert oracle == Fraction(1, 1680)
        assert log_sequence_prob(ModelParams(1, 3), colors) == pytest.approx(math.log(1 / 1680), abs=1e-12)

    def test_every_permutation_agrees(self):
        params = ModelParams(1, 3)
        ref = log_sequence_prob(params, (0, 0, 0, 1, 1, 2))
        for perm in set(itertools.permutations((0, 0, 0, 1, 1, 2))):
            assert log_sequence_prob(params, perm) == ref

    def test_empty_sequence(self):
        assert log_sequence_prob(ModelParams(0.7, 4), []) == 0.0

    @pytest.mark.parametrize("bad", [(0, 3), (-1,), (0.5,)])
    def test_color_out_of_range(self, bad):
        with pytest.raises(ValueError):
            log_sequence_prob(ModelParams(1, 3), bad)

    @given(
        alpha=st.sampled_from([Fraction(1, 3), Fraction(1), Fraction(5, 2)]),
        colors=st.lists(st.integers(0, 3), max_size=12),
    )
    @settings(max_examples=50)
    def test_matches_step_by_step_product(self, alpha, colors):
        exact = sequence_prob_by_steps(alpha, 4, colors)
        assert log_sequence_prob(ModelParams(float(alpha), 4), colors) == pytest.approx(
            math.log(exact), abs=1e-12
        )


class TestDirichletDensity:
    def test_uniform_on_two_simplex(self):
        assert log_dirichlet_density(ModelParams(1, 2), (0.3, 0.7)) == pytest.approx(0.0, abs=1e-15)

    def test_alpha_two(self):
        oracle = math.gamma(4) / math.gamma(2) ** 2 * 0.5 * 0.5
        assert oracle == 1.5
        assert log_dirichlet_density(ModelParams(2, 2), (0.5, 0.5)) == pytest.approx(math.log(1.5), abs=1e-12)

    @pytest.mark.parametrize("w", [(0.2, 0.3, 0.5), (0.01, 0.98, 0.01), (1 / 3, 1 / 3, 1 / 3)])
    def test_uniform_on_three_simplex(self, w):
        assert log_dirichlet_density(ModelParams(1, 3), w) == pytest.approx(math.log(2), abs=1e-12)

    def test_boundary_singular_for_small_alpha(self):
        with pytest.raises(ValueError):
            log_dirichlet_density(ModelParams(0.5, 2), (0.0, 1.0))

    def test_boundary_zero_for_large_alpha(self):
        assert log_dirichlet_density(ModelParams(2.0, 2), (0.0, 1.0)) == -math.inf

    @pytest.mark.parametrize("w", [(0.3, 0.6), (0.5, 0.5, 0.1), (-0.1, 1.1)])
    def test_rejects_off_simplex(self, w):
        with pytest.raises(ValueError):
            log_dirichlet_density(ModelParams(1.5, 2), w)

    def test_pmf_approaches_density(self):
        # n * p(floor(wn), n - floor(wn)) -> Dirichlet density at w
        params = ModelParams(2, 2)
        density = math.exp(log_dirichlet_density(params, (0.5, 0.5)))
        errors = []
        for n in (50, 200, 800):
            k = math.floor(0.5 * n)
            scaled = n * polya_pmf(params, (k, n - k))
            errors.append(abs(scaled - density) / density)
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] < 1e-2
