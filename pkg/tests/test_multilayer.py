import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import constants

from cavityforce.dielectric import load_material
from cavityforce.multilayer import (Interface, Layer, PolarizabilityCatastrophe, ReflectionError, SlabStack,
                                    cavity_transmission, cavity_transmission_series, clausius_mossotti,
                                    fresnel_r, fresnel_t, generalized_reflection_closed,
                                    generalized_reflection_closed_alt, generalized_reflection_iterative,
                                    symmetric_cavity_stack)

from oracles import transfer_matrix_reflection

EPS = st.floats(1.0, 100.0)


def bounce_series(r_left, r_right, t_exit, kappa, d, terms=50):
    """Explicit partial sum of the multiple-reflection series."""
    p = math.exp(-kappa * d)
    total = 0.0
    for n in range(terms):
        total += (r_left * r_right * p * p) ** n * (1 + r_left * p)
    return total * t_exit


class TestFresnel:
    def test_equal(self):
        assert fresnel_r(Interface(2.3, 2.3)) == 0.0
        assert fresnel_t(Interface(2.3, 2.3)) == 1.0

    def test_values(self):
        assert fresnel_r(Interface(2.0, 1.0)) == pytest.approx(1.0 / 3.0)
        assert fresnel_t(Interface(1.0, 3.0)) == pytest.approx(0.5)

    @given(EPS, EPS)
    def test_antisymmetry_and_t_equals_one_plus_r(self, a, b):
        assert fresnel_r(Interface(a, b)) == pytest.approx(-fresnel_r(Interface(b, a)))
        assert fresnel_t(Interface(a, b)) == pytest.approx(1.0 + fresnel_r(Interface(a, b)))
        assert fresnel_t(Interface(a, b)) == pytest.approx(2.0 - fresnel_t(Interface(b, a)))

    def test_positive_permittivity(self):
        with pytest.raises(ValueError):
            Interface(0.0, 1.0)


class TestCavityTransmission:
    @given(st.floats(1.0, 80.0))
    def test_zero_width_gives_eps(self, eps):
        r = (eps - 1) / (eps + 1)
        assert cavity_transmission(r, 1e9, 0.0) == pytest.approx(eps, rel=1e-12)

    def test_trivial_limits(self):
        assert cavity_transmission(0.0, 1e9, 1e-9) == 1.0
        assert cavity_transmission(0.4, 1e9, 1.0) == pytest.approx(1.4)

    def test_denominator_guard(self):
        with pytest.raises(ReflectionError):
            cavity_transmission(1.0 - 1e-14, 1.0, 0.0)

    def test_negative_width(self):
        with pytest.raises(ValueError):
            cavity_transmission(0.3, 1.0, -1.0)

    @settings(max_examples=50)
    @given(st.floats(-0.95, 0.95), st.floats(-0.95, 0.95), st.floats(0.1, 2.0), st.floats(0.0, 5.0))
    def test_series_matches_bounce_sum(self, rl, rr, t, kd):
        got = cavity_transmission_series(rl, rr, t, kd, 1.0)
        terms = 50
        if abs(rl * rr) * math.exp(-2 * kd) > 0.55:
            terms = 2000
        assert got == pytest.approx(bounce_series(rl, rr, t, kd, 1.0, terms), rel=1e-12, abs=1e-14)

    def test_series_limits(self):
        assert cavity_transmission_series(0.0, 0.0, 1.3, 1.0, 1.0) == 1.3
        assert cavity_transmission_series(0.5, 0.4, 1.3, 1.0, 1e6) == pytest.approx(1.3)

    @given(st.floats(-0.95, 0.95), st.floats(0.0, 20.0))
    def test_series_sums_to_closed_form(self, r, kd):
        # equal walls: (1 + r p) / (1 - r^2 p^2) = 1 / (1 - r p)
        series = cavity_transmission_series(r, r, 1 + r, kd, 1.0)
        assert series == pytest.approx(cavity_transmission(r, kd, 1.0), rel=1e-12)

    def test_series_divergence(self):
        with pytest.raises(ReflectionError):
            cavity_transmission_series(1.0, 1.0, 1.0, 1.0, 0.0)


def _random_case(rng):
    eps = rng.uniform(1.0, 100.0)
    eps_s = rng.uniform(1.0, 100.0)
    return eps, eps_s, rng.uniform(0.0, 5e-10), rng.uniform(0.0, 5e-10), rng.uniform(0.0, 2e10)


class TestGeneralizedReflection:
    def test_all_equal(self):
        st_ = SlabStack(tuple(Layer(2.0, t) for t in (math.inf, 1e-10, 2e-10, 1e-10, math.inf)), 1e9)
        assert generalized_reflection_iterative(st_) == 0.0
        assert generalized_reflection_closed(0.0, 0.0, 1e9, 1e-10, 1e9, 2e-10) == 0.0

    def test_two_layers(self):
        st_ = SlabStack((Layer(3.0), Layer(1.0)), 1.0)
        assert generalized_reflection_iterative(st_) == pytest.approx(0.5)

    @pytest.mark.parametrize("seed", range(5))
    def test_iterative_against_transfer_matrix(self, seed):
        rng = np.random.default_rng(seed)
        n = rng.integers(3, 8)
        eps = rng.uniform(1.0, 20.0, n)
        th = rng.uniform(0.0, 3e-10, n)
        k = rng.uniform(1e8, 1e10)
        stack = SlabStack(tuple(Layer(e, t if 0 < i < n - 1 else math.inf) for i, (e, t) in
                                enumerate(zip(eps, th))), k)
        assert generalized_reflection_iterative(stack) == pytest.approx(
            transfer_matrix_reflection(list(eps), list(th), k), abs=1e-12)

    def test_single_slab(self):
        # medium | slab | medium with zero-width cavities
        eps, eps_s, d, k = 1.8, 4.0, 3e-10, 2e9
        r1 = (eps_s - eps) / (eps_s + eps)
        D = math.exp(-2 * k * d)
        expected = r1 * (1 - D) / (1 - r1 * r1 * D)
        stack = SlabStack((Layer(eps), Layer(eps_s, d), Layer(eps)), k)
        assert generalized_reflection_iterative(stack) == pytest.approx(expected, rel=1e-13)

    def test_cavity_stack_against_transfer_matrix(self):
        eps, eps_s, R_C, d, k = 1.7, 1.15, 1.71e-10, 1.43e-10, 3e9
        stack = symmetric_cavity_stack(eps, eps_s, R_C, d, k)
        oracle = transfer_matrix_reflection([eps, 1.0, eps_s, 1.0, eps], [0, R_C, d, R_C, 0], k)
        assert generalized_reflection_iterative(stack) == pytest.approx(oracle, abs=1e-13)

    def test_closed_matches_iterative_random(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(2000):
            eps, eps_s, R_C, d, k = _random_case(rng)
            f = rng.uniform(0.0, 1.0)
            r = (eps - 1) / (eps + 1) * f
            r1 = (eps_s - 1) / (eps_s + 1)
            it = generalized_reflection_iterative(symmetric_cavity_stack(eps, eps_s, R_C, d, k, f))
            worst = max(worst, abs(it - generalized_reflection_closed(r, r1, k, R_C, k, d)))
        assert worst < 1e-10

    def test_closed_is_vectorised(self):
        rng = np.random.default_rng(5)
        r, r1 = rng.uniform(0, 0.9, 20), rng.uniform(0, 0.9, 20)
        k = rng.uniform(1e8, 1e10, 20)
        vec = generalized_reflection_closed(r, r1, k, 1e-10, k, 2e-10)
        scal = [generalized_reflection_closed(float(a), float(b), float(c), 1e-10, float(c), 2e-10)
                for a, b, c in zip(r, r1, k)]
        np.testing.assert_allclose(vec, scal, rtol=1e-14)

    def test_empty_cavity_limit(self):
        # r_1 = 0: one vacuum gap of width 2 R_C + d_1 between solvent half-spaces
        r, k, R_C, d = 0.3, 2e9, 1.5e-10, 2e-10
        P = math.exp(-2 * k * (2 * R_C + d))
        expected = -r * (1 - P) / (1 - r * r * P)
        assert generalized_reflection_closed(r, 0.0, k, R_C, k, d) == pytest.approx(expected, rel=1e-13)

    def test_continuity_at_zero_cavity(self):
        eps, eps_s, d, k = 1.7, 1.2, 1.43e-10, 3e9
        r, r1 = (eps - 1) / (eps + 1), (eps_s - 1) / (eps_s + 1)
        three = generalized_reflection_iterative(SlabStack((Layer(eps), Layer(eps_s, d), Layer(eps)), k))
        assert generalized_reflection_closed(r, r1, k, 1e-22, k, d) == pytest.approx(three, abs=1e-8)

    @settings(max_examples=200)
    @given(EPS, EPS, st.floats(0.0, 50.0), st.floats(0.0, 50.0), st.floats(0.0, 1.0))
    def test_bounded(self, eps, eps_s, kR, kd, f):
        r, r1 = (eps - 1) / (eps + 1) * f, (eps_s - 1) / (eps_s + 1)
        assert abs(generalized_reflection_closed(r, r1, 1.0, kR, 1.0, kd)) <= 1.0 + 1e-12

    def test_alternative_form_fails_limits(self):
        # kept only for comparison; it does not reduce to the bare slab at r = 0
        r1, k, R_C, d = 0.4, 1.0, 0.2, 0.5
        D, E2 = math.exp(-2 * k * d), math.exp(-2 * k * R_C)
        bare = r1 * E2 * (1 - D) / (1 - r1 * r1 * D)
        assert generalized_reflection_closed(0.0, r1, k, R_C, k, d) == pytest.approx(bare)
        assert generalized_reflection_closed_alt(0.0, r1, k, R_C, k, d) != pytest.approx(bare, rel=1e-3)

    def test_stack_validation(self):
        with pytest.raises(ValueError):
            SlabStack((Layer(1.0),), 1.0)
        with pytest.raises(ValueError):
            SlabStack((Layer(1.0), Layer(2.0, math.inf), Layer(1.0)), 1.0)
        with pytest.raises(ValueError):
            SlabStack((Layer(1.0), Layer(2.0)), 1.0, factors=(1.0, 1.0))


class TestClausiusMossotti:
    def test_zero(self):
        assert clausius_mossotti(0.0, 1e-10) == 1.0

    def test_tenth(self):
        d = 2e-10
        alpha = 0.1 * 4 * math.pi * constants.epsilon_0 * d**3
        assert clausius_mossotti(alpha, d) == pytest.approx(1.2 / 0.9, rel=1e-13)

    def test_helium_slab(self):
        eps = clausius_mossotti(load_material("helium").alpha0, 1.43e-10)
        assert 1.0 < eps < 2.0

    def test_catastrophe(self):
        d = 1e-10
        with pytest.raises(PolarizabilityCatastrophe):
            clausius_mossotti(4 * math.pi * constants.epsilon_0 * d**3, d)
