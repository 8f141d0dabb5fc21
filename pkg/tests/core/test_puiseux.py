from contextlib import nullcontext
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import superholder.core.puiseux as ps
from superholder.core.arith import GammaElement, PadicInt
from superholder.core.errors import (
    ContextMismatch,
    DivisionByZero,
    InsufficientPrecision,
    NotAUnit,
    PreconditionViolation,
    SubstitutionDiverges,
)
from superholder.core.tate_colmez import agree
from tests.conftest import GAMMA_4_P3, GAMMA_5_P2, ONE_PLUS_X_P3, SQRT_X_P2, X_P2, X_P3, series


@st.composite
def level_zero_series(draw, p: int = 3, prec: int = 12):
    coeffs = draw(
        st.dictionaries(
            st.integers(min_value=0, max_value=prec - 1),
            st.integers(min_value=1, max_value=p - 1),
            max_size=6,
        )
    )
    return ps.PuiseuxSeries.from_numerators(p, 0, coeffs, prec)


def test_serialized_form_of_sqrt_x():
    assert (SQRT_X_P2.p, SQRT_X_P2.level, SQRT_X_P2.prec_num, SQRT_X_P2.terms) == (2, 1, 6, ((1, 1),))


def test_level_is_minimized():
    f = ps.PuiseuxSeries.from_numerators(2, 2, {4: 1, 8: 1}, 16)
    assert (f.level, f.prec_num, f.terms) == (0, 4, ((1, 1), (2, 1)))


def test_negative_exponents_rejected():
    with pytest.raises(ValueError):
        ps.PuiseuxSeries.from_numerators(3, 0, {-1: 1}, 4)


@pytest.mark.parametrize(
    ("f", "g", "expected"),
    [
        pytest.param(
            series(2, {0: 1, 1: 1}, 8),
            series(2, {0: 1, 1: 1}, 8),
            series(2, {0: 1, 2: 1}, 8),
            id="(1+X)^2 = 1+X^2 in char 2",
        ),
        pytest.param(
            series(3, {Fraction(1, 3): 1}, 2),
            series(3, {Fraction(2, 3): 2}, 2),
            series(3, {1: 2}, Fraction(7, 3)),
            id="fractional exponents add, known to the smaller bound",
        ),
    ],
)
def test_mul(f, g, expected):
    assert f * g == expected


def test_val_of_mixed_exponents():
    assert series(2, {Fraction(1, 2): 1, 3: 1}, 8).val().value == Fraction(1, 2)


def test_zero_val_is_censored():
    v = ps.PuiseuxSeries.zero(3, 7).val()
    assert (v.value, v.censored) == (7, True)


def test_inverse_of_one_plus_x():
    assert ONE_PLUS_X_P3.truncate(4).inverse() == series(3, {0: 1, 1: 2, 2: 1, 3: 2}, 4)


def test_inverse_of_non_unit_raises():
    with pytest.raises(DivisionByZero):
        X_P3.inverse()


@settings(max_examples=40)
@given(level_zero_series())
def test_inverse_law(f):
    unit = f + ps.PuiseuxSeries.constant(3, 1, f.prec) if f.coefficient(0) == 0 else f
    product = unit * unit.inverse()
    assert product == ps.PuiseuxSeries.constant(3, 1, product.prec)


@settings(max_examples=40)
@given(level_zero_series(), level_zero_series(), level_zero_series())
def test_ring_laws(f, g, h):
    assert agree((f + g) * h, f * h + g * h)
    assert f * g == g * f
    assert (f - f).is_zero()


def test_mixed_primes_raise():
    with pytest.raises(ContextMismatch):
        _ = X_P2 + X_P3


@pytest.mark.parametrize(
    ("f", "expected"),
    [
        pytest.param(SQRT_X_P2, series(2, {1: 1}, 6), id="φ(X^(1/2)) = X"),
        pytest.param(series(3, {1: 1, 2: 1}, 5), series(3, {3: 1, 6: 1}, 15), id="exponents scale"),
    ],
)
def test_frobenius(f, expected):
    assert f.frobenius() == expected


def test_inv_frobenius_of_x():
    f = X_P2.inv_frobenius()
    assert (f.level, f.coefficients()) == (1, {Fraction(1, 2): 1})


@settings(max_examples=40)
@given(level_zero_series())
def test_frobenius_round_trip(f):
    assert f.frobenius().inv_frobenius() == f
    assert f.inv_frobenius().frobenius() == f


def test_frobenius_scales_valuation():
    assert series(3, {1: 1, 2: 1}, 8).frobenius().val().value == 3


@pytest.mark.parametrize(
    ("f", "u", "expected"),
    [
        pytest.param(
            series(2, {2: 1}, 8), series(2, {1: 1, 2: 1}, 8), series(2, {2: 1, 4: 1}, 8), id="X^2∘(X+X^2)"
        ),
        pytest.param(
            series(2, {1: 1, 3: 1}, 5),
            series(2, {1: 1, 2: 1, 3: 1}, 5),
            series(2, {1: 1, 2: 1, 4: 1}, 5),
            id="cube term cancels",
        ),
        pytest.param(GAMMA_4_P3, series(3, {1: 1}, 9), GAMMA_4_P3, id="identity substitution"),
    ],
)
def test_substitute(f, u, expected):
    assert ps.substitute(f, u) == expected


def test_substitute_unit_diverges():
    with pytest.raises(SubstitutionDiverges):
        ps.substitute(X_P3, ONE_PLUS_X_P3)


def test_substitute_level_one_outer():
    # X^(1/2) ∘ X^2 = X, known modulo X^4 since u is only known modulo X^8
    assert ps.substitute(SQRT_X_P2, series(2, {2: 1}, 8)) == series(2, {1: 1}, 4)


@pytest.mark.parametrize(
    ("a", "prec", "expected_context"),
    [
        pytest.param(
            PadicInt.from_int(3, 2, 4), 4, nullcontext(series(2, {0: 1, 1: 1, 2: 1, 3: 1}, 4)), id="(1+X)^3"
        ),
        pytest.param(
            PadicInt.from_int(-1, 3, 4),
            4,
            nullcontext(series(3, {0: 1, 1: 2, 2: 1, 3: 2}, 4)),
            id="(1+X)^-1",
        ),
        pytest.param(
            PadicInt.from_int(1, 2, 2), 16, pytest.raises(InsufficientPrecision), id="digits run out"
        ),
    ],
)
def test_one_plus_x_pow(a, prec, expected_context):
    with expected_context as expected:
        assert ps.one_plus_x_pow(a, 0, prec) == expected


def test_one_plus_root_x():
    f = ps.one_plus_x_pow(PadicInt.from_int(1, 2, 4), 1, 2)
    assert f.coefficients() == {Fraction(0): 1, Fraction(1, 2): 1}


@pytest.mark.parametrize(
    ("a", "f", "expected"),
    [
        pytest.param(4, X_P3.truncate(5), GAMMA_4_P3.truncate(5), id="γ_4(X) over F_3"),
        pytest.param(5, X_P2.truncate(6), GAMMA_5_P2.truncate(6), id="γ_5(X) over F_2"),
        pytest.param(1, GAMMA_4_P3, GAMMA_4_P3, id="a = 1 is the identity"),
        pytest.param(
            GammaElement.from_coordinate(1, 2, 2), X_P2.truncate(6), GAMMA_5_P2.truncate(6), id="coordinate 1"
        ),
    ],
)
def test_gamma_act(a, f, expected):
    assert ps.gamma_act(a, f) == expected


def test_gamma_act_needs_unit():
    with pytest.raises(NotAUnit):
        ps.gamma_act(3, X_P3)


def test_gamma_act_on_root():
    # γ_{1+4}(X^(1/2)) − X^(1/2) starts at X^(4/2)
    moved = ps.gamma_act(GammaElement.from_coordinate(1, 2, 2), SQRT_X_P2)
    assert (moved - SQRT_X_P2).val().value == 2


@settings(max_examples=20)
@given(
    level_zero_series(),
    st.integers(min_value=1, max_value=40),
    st.integers(min_value=1, max_value=40),
)
def test_gamma_act_is_a_group_action(f, a, b):
    a, b = 3 * a + 1, 3 * b + 1
    assert ps.gamma_act(a, ps.gamma_act(b, f)) == ps.gamma_act(a * b, f)


def test_gamma_act_is_multiplicative():
    f, g = series(3, {1: 1, 2: 2}, 10), series(3, {0: 1, 4: 1}, 10)
    assert ps.gamma_act(4, f * g) == ps.gamma_act(4, f) * ps.gamma_act(4, g)


@pytest.mark.parametrize(
    ("u", "m", "expected"),
    [
        pytest.param(series(2, {1: 1, 2: 1}, 5), 2, series(2, {1: 1, 4: 1}, 5), id="u∘u"),
        pytest.param(series(2, {1: 1, 2: 1}, 5), 1, series(2, {1: 1, 2: 1}, 5), id="single"),
        pytest.param(series(2, {1: 1, 2: 1}, 5), 0, series(2, {1: 1}, 5), id="zero iterations"),
    ],
)
def test_iterate_compose(u, m, expected):
    assert ps.iterate_compose(u, m) == expected


def test_iterate_compose_needs_tangent_identity():
    with pytest.raises(PreconditionViolation):
        ps.iterate_compose(series(3, {1: 2}, 5), 2)


def test_pow_matches_repeated_product():
    f = series(3, {0: 1, 1: 1, 2: 2}, 12)
    assert f**4 == f * f * f * f


def test_divide_by_monomial():
    f = series(2, {Fraction(3, 2): 1, 3: 1}, 6)
    assert f.divide_by_monomial(1) == series(2, {Fraction(1, 2): 1, 2: 1}, 5)
    with pytest.raises(DivisionByZero):
        f.divide_by_monomial(2)


def test_derivative():
    assert series(3, {1: 1, 2: 1, 3: 1}, 6).derivative() == series(3, {0: 1, 1: 2}, 5)
    with pytest.raises(PreconditionViolation):
        SQRT_X_P2.derivative()


def test_monomial_scaled_round_trip():
    scaled = ps.MonomialScaled(Fraction(1, 2), series(2, {1: 1}, 4))
    assert scaled.val().value == Fraction(1, 2)
    assert scaled.to_series() == series(2, {Fraction(1, 2): 1}, Fraction(7, 2))


def test_text_rendering():
    assert str(series(3, {0: 2, Fraction(1, 3): 1}, 2)) == "2 + X^(1/3) + O(X^2)"


@settings(max_examples=20)
@given(level_zero_series(), st.integers(min_value=1, max_value=40))
def test_gamma_act_commutes_with_frobenius(f, a):
    a = 3 * a + 2
    assert ps.gamma_act(a, f.frobenius()) == ps.gamma_act(a, f).frobenius()


@pytest.mark.parametrize(
    ("f", "term_level"),
    [
        pytest.param(series(2, {1: 1}, Fraction(7, 2)), 0, id="X + O(X^(7/2))"),
        pytest.param(SQRT_X_P2, 1, id="X^(1/2)"),
        pytest.param(series(3, {Fraction(1, 3): 1}, Fraction(10, 9)), 1, id="precision at level 2"),
        pytest.param(ps.PuiseuxSeries.zero(3, Fraction(1, 9)), 0, id="zero"),
    ],
)
def test_term_level_ignores_precision(f, term_level):
    assert f.term_level == term_level
    assert f.term_level <= f.level
