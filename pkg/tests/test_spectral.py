import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coyote.core import ChainConfig, NondimSystem, effective_masses, nondimensionalize
from coyote.spectral import (
    brute_force_det,
    char_poly,
    cofactor_det,
    cramer_matrix,
    laplace_matrix,
    numerator_constant,
    poly_coefficient_checks,
    tail_poly,
    trace_at_rest,
)

from conftest import random_config


def two_mass(alpha):
    return NondimSystem(alphas=np.array([alpha]), betas=np.array([]), T=1.0, L=1.0)


def test_two_mass_unit_alpha():
    np.testing.assert_allclose(char_poly(two_mass(1.0)).coeffs, [0.0, 2.0, 1.0], atol=1e-15)


@pytest.mark.parametrize("alpha", [0.01, 0.3, 1.0, 4.5])
def test_two_mass_general_alpha(alpha):
    p = char_poly(two_mass(alpha))
    assert p.coefficient(4) == 1.0
    assert p.coefficient(2) == pytest.approx(1 + alpha)
    assert p.coefficient(0) == pytest.approx(0.0, abs=1e-15)
    assert p.coefficient(3) == 0.0


def test_numerator_constants(trial1):
    sys = nondimensionalize(trial1)
    assert numerator_constant(sys, 1).value == -1.0
    assert numerator_constant(two_mass(1.0), 2).value == -1.0
    a = sys.alphas
    assert numerator_constant(sys, 4).value == pytest.approx(-a[0] * a[1] * a[2], rel=1e-15)
    with pytest.raises(IndexError):
        numerator_constant(sys, 5)
    with pytest.raises(IndexError):
        numerator_constant(sys, 0)


def test_brute_force_small_cases():
    assert brute_force_det(two_mass(1.0), 0.0) == 0.0
    assert brute_force_det(two_mass(1.0), 1.0) == pytest.approx(3.0)
    sys = nondimensionalize(ChainConfig((1.0,) * 9, (1.0,) * 8))
    with pytest.raises(ValueError, match="n <= 8"):
        brute_force_det(sys, 1.0)


def test_cofactor_det_matches_lu():
    rng = np.random.default_rng(0)
    for size in range(1, 7):
        M = rng.normal(size=(size, size))
        assert cofactor_det(M) == pytest.approx(np.linalg.det(M), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("seed", range(12))
def test_char_poly_matches_cofactor_expansion(seed):
    rng = np.random.default_rng(seed)
    sys = nondimensionalize(random_config(rng, int(rng.integers(2, 7))))
    p = char_poly(sys)
    for s in rng.uniform(0.1, 10, 20):
        ref = brute_force_det(sys, s)
        assert abs(p(s) - ref) / abs(ref) < 1e-9
    s = complex(rng.uniform(0.1, 3), rng.uniform(0.1, 3))
    ref = brute_force_det(sys, s)
    assert abs(p(s) - ref) / abs(ref) < 1e-9


@pytest.mark.parametrize("seed", range(12))
def test_coefficient_identities(seed):
    rng = np.random.default_rng(100 + seed)
    config = random_config(rng, int(rng.integers(2, 9)))
    sys = nondimensionalize(config)
    checks = poly_coefficient_checks(sys)
    m = effective_masses(config)
    a2_from_masses = np.prod(sys.alphas) * m.sum() / m[0]
    coeffs = char_poly(sys).coeffs
    assert coeffs[-1] == 1.0
    assert abs(checks.a0) < 1e-10 * np.abs(coeffs).max()
    assert checks.a2 == pytest.approx(a2_from_masses, rel=1e-10)
    assert checks.a2 == pytest.approx(checks.a2_ref, rel=1e-10)
    assert checks.a_top == pytest.approx(np.trace(laplace_matrix(sys, 0.0)), rel=1e-12)
    assert checks.a_top == pytest.approx(checks.a_top_ref, rel=1e-12)


def test_equal_three_chain_trace():
    sys = nondimensionalize(ChainConfig((1.0,) * 3, (1.0,) * 2))
    assert poly_coefficient_checks(sys).a_top == pytest.approx(4.0)


def test_two_mass_a2_against_masses():
    config = ChainConfig((3.0, 7.0), (11.0,))
    sys = nondimensionalize(config)
    assert poly_coefficient_checks(sys).a2 == pytest.approx((3.0 + 7.0) / 7.0, rel=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_cramer_numerator_sign_for_bottom_mass(n):
    rng = np.random.default_rng(n)
    sys = nondimensionalize(random_config(rng, n))
    for s in (0.7, 2.0, 5.0):
        det_b = cofactor_det(cramer_matrix(sys, s, n))
        assert det_b == pytest.approx(-np.prod(sys.alphas) / s, rel=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_cramer_numerator_for_interior_masses(n):
    rng = np.random.default_rng(10 + n)
    sys = nondimensionalize(random_config(rng, n))
    for j in range(1, n + 1):
        for s in (0.5, 3.0):
            det_b = cofactor_det(cramer_matrix(sys, s, j))
            expected = numerator_constant(sys, j).value * tail_poly(sys, j)(s) / s
            assert det_b == pytest.approx(expected, rel=1e-10)


def test_tail_trace(trial1):
    sys = nondimensionalize(trial1)
    assert trace_at_rest(sys, start=sys.n) == 0.0
    assert tail_poly(sys, sys.n).coeffs.tolist() == [1.0]
    assert trace_at_rest(sys) - trace_at_rest(sys, 1) == pytest.approx(1.0, rel=1e-14)


@given(st.integers(2, 6).flatmap(lambda n: st.lists(st.floats(0.01, 50), min_size=2 * n - 3, max_size=2 * n - 3)))
@settings(max_examples=50, deadline=None)
def test_char_poly_vanishes_at_rest_and_is_monic(params):
    n = (len(params) + 3) // 2
    sys = NondimSystem(alphas=np.array(params[: n - 1]), betas=np.array(params[n - 1 :]), T=1.0, L=1.0)
    p = char_poly(sys)
    assert p.degree == n
    assert p.coeffs[-1] == 1.0
    assert abs(p.coeffs[0]) < 1e-10 * np.abs(p.coeffs).max()
    assert math.isclose(p(0.5), brute_force_det(sys, 0.5), rel_tol=1e-9)
