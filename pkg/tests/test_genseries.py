import cmath
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ckdyn.genseries import GenSeries, TruncationUnderflow, add, from_terms, map_s_variables, \
    mul, norm, pow_, substitute_u_power, valuation


# -- strategies ------------------------------------------------------------------------

exponents = st.builds(Fraction, st.integers(-8, 8), st.sampled_from([1, 2, 3]))
coeffs = st.builds(cmath.rect, st.floats(0.5, 2.0), st.floats(-math.pi, math.pi))


@st.composite
def series(draw, nvars=None, truncated=None, nonzero=True):
    n = draw(st.integers(0, 2)) if nvars is None else nvars
    monos = st.tuples(*[st.integers(0, 2) for _ in range(n)]) if n else st.just(())
    raw = draw(st.lists(st.tuples(exponents, coeffs, monos), min_size=1 if nonzero else 0,
                        max_size=6))
    # one coefficient per (exponent, monomial) so that no accidental cancellation occurs
    flat = {}
    for p, c, m in raw:
        flat[(p, m)] = c
    f = from_terms([(p, c, m) for (p, m), c in flat.items()], nvars=n)
    if truncated if truncated is not None else draw(st.booleans()):
        f = f.truncate(draw(st.integers(-2, 12)))
    return f


@st.composite
def pairs(draw, truncated=None):
    n = draw(st.integers(0, 2))
    return draw(series(n, truncated)), draw(series(n, truncated))


@st.composite
def triples(draw):
    n = draw(st.integers(0, 2))
    return tuple(draw(series(n)) for _ in range(3))


def oracle_product(f, g):
    """Brute-force term expansion."""
    out = {}
    for pa, ma, ca in f.items():
        for pb, mb, cb in g.items():
            key = (pa + pb, tuple(x + y for x, y in zip(ma, mb)))
            out[key] = out.get(key, 0) + ca * cb
    return out


def assert_matches(series_, expected: dict, tol=1e-9):
    got = {(p, m): c for p, m, c in series_.items()}
    order = series_.order
    for key, c in expected.items():
        if order is not None and key[0] >= order:
            continue
        if abs(c) <= 1e-12:
            continue
        assert abs(got.get(key, 0) - c) <= tol * max(1, abs(c)), key
    for key, c in got.items():
        assert abs(expected.get(key, 0) - c) <= tol * max(1, abs(c)), key


# -- property suite ------------------------------------------------------------------

@settings(max_examples=300, deadline=None)
@given(pairs(truncated=False))
def test_valuation_is_additive(fg):
    f, g = fg
    assert valuation(f * g) == valuation(f) + valuation(g)


@settings(max_examples=300, deadline=None)
@given(pairs(truncated=False))
def test_norm_is_multiplicative(fg):
    f, g = fg
    assert math.isclose(norm(f * g), norm(f) * norm(g), rel_tol=1e-12)


@settings(max_examples=300, deadline=None)
@given(pairs())
def test_ultrametric_inequality(fg):
    f, g = fg
    h = add(f, g)
    assert valuation(h) >= min(valuation(f), valuation(g))
    if valuation(f) != valuation(g) and not h.is_zero():
        assert valuation(h) == min(valuation(f), valuation(g))


@settings(max_examples=300, deadline=None)
@given(pairs())
def test_product_matches_term_expansion(fg):
    f, g = fg
    assert_matches(mul(f, g), oracle_product(f, g))


@settings(max_examples=200, deadline=None)
@given(triples())
def test_ring_axioms_up_to_truncation(fgh):
    f, g, h = fgh
    assert (f * g).close_to(g * f)
    assert ((f * g) * h).close_to(f * (g * h))
    assert (f * (g + h)).close_to(f * g + f * h)
    assert (f + (g + h)).close_to((f + g) + h)
    assert (f - f).is_zero()


# -- examples ------------------------------------------------------------------------

def test_valuation_of_zero_is_infinite():
    assert valuation(GenSeries()) == math.inf
    assert norm(GenSeries()) == 0.0


def test_valuation_takes_least_stored_exponent():
    # 3 x^2 + x^(-1/2): stored exponents -2 and 1/2
    f = from_terms([(-2, 3), (Fraction(1, 2), 1)])
    assert valuation(f) == -2
    assert math.isclose(norm(f), math.exp(2))


def test_truncated_product_order():
    # (x + O(x^-3)) * (x^2 + 1): the unknown tail x^-3 * x^2 limits the order to 1
    f = from_terms([(-1, 1)]).truncate(3)
    g = from_terms([(-2, 1), (0, 1)])
    h = f * g
    assert h.order == 1
    assert h.coeff(-3) == 1 and h.coeff(-1) == 1


def test_pow_binomial():
    # (x + 1)^3 = x^3 + 3x^2 + 3x + 1
    f = from_terms([(-1, 1), (0, 1)])
    cube = pow_(f, 3)
    assert [cube.coeff(p) for p in (-3, -2, -1, 0)] == [1, 3, 3, 1]


def test_pow_order_with_negative_valuation():
    # (x^4 + O(x^-2))^3: the tail meets (x^4)^2, so only terms above x^6 are known
    f = from_terms([(-4, 1)]).truncate(2)
    cube = pow_(f, 3, order=8)
    assert cube.order == -6
    assert cube.coeff(-12) == 1 and len(cube) == 1


def test_pow_does_not_truncate_partial_products_too_early():
    # (x^2 + 1 + O(x^-10))^3 to order 0 must still contain 3 x^2 from x^2 * 1 * 1
    f = from_terms([(-2, 1), (0, 1)]).truncate(10)
    cube = pow_(f, 3, order=0)
    assert [cube.coeff(p) for p in (-6, -4, -2)] == [1, 3, 3]


def test_substitute_u_power_scales_exponents():
    f = from_terms([(-1, 2), (Fraction(1, 3), 1)]).truncate(2)
    g = substitute_u_power(f, 2, 3)
    assert g.coeff(-9) == 2 and g.coeff(3) == 1
    assert g.order == 18


def test_map_s_variables_affine_substitution():
    # f = x^-2 s, with s -> 2 (s + x): result 2 x^-2 s + 2 x^-1
    f = from_terms([(2, 1, (1,))], nvars=1, s_weight=1)
    shift = GenSeries({-1: 1}, nvars=1, s_weight=1)
    g = map_s_variables(f, [2], [shift])
    assert g.coeff(2, (1,)) == 2 and g.coeff(1) == 2


def test_map_s_variables_rejects_oversized_shift():
    f = from_terms([(2, 1, (1,))], nvars=1, s_weight=1).truncate(5)
    shift = GenSeries({-3: 1}, nvars=1, s_weight=1)
    with pytest.raises(TruncationUnderflow):
        map_s_variables(f, [1], [shift])


def test_evaluate_and_json_round_trip():
    f = from_terms([(-2, 1), (1, 0.5 - 1j, (1,))], nvars=1, s_weight=1).truncate(4)
    assert f.evaluate(2.0, (3.0,)) == pytest.approx(4 + (0.5 - 1j) * 3 / 2)
    assert GenSeries.from_json(f.to_json()) == f


def test_string_form_shows_powers():
    f = from_terms([(-12, 1)]).truncate(4)
    assert "u^(12)" in str(f) and "O(" in str(f)
