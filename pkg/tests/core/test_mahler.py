import math
from contextlib import nullcontext
from fractions import Fraction

import pytest

import superholder.core.mahler as mh
from superholder.core.errors import TableTooShort, TooFewPoints
from superholder.core.puiseux import PuiseuxSeries
from superholder.core.valuation import Valuation, Verdict
from tests.conftest import series


def constant(p: int, c: int, prec: int = 8) -> PuiseuxSeries:
    return PuiseuxSeries.constant(p, c, prec)


def test_identity_function_is_a_basis_element():
    f = mh.ContinuousFn(3, 2, tuple(constant(3, z) for z in range(9)), locally_constant=False)
    e = mh.mahler_coeffs(f)
    assert [m.is_zero() for m in e.coeffs] == [True, False, *[True] * 7]
    assert e.coeffs[1] == constant(3, 1)


def test_two_point_table_by_hand():
    c0, c1 = series(2, {1: 1}, 8), series(2, {0: 1, 1: 1}, 8)
    e = mh.mahler_coeffs(mh.ContinuousFn(2, 1, (c0, c1)), n_max=4)
    assert e.coeffs[0] == c0
    assert e.coeffs[1] == c1 - c0
    assert all(m.is_zero() for m in e.coeffs[2:])
    assert e.complete


def test_binomial_orbit_has_monomial_coefficients():
    prec = 11
    one_plus_x = series(3, {0: 1, 1: 1}, prec)
    f = mh.ContinuousFn(3, 2, tuple(one_plus_x**a for a in range(9)), locally_constant=False)
    e = mh.mahler_coeffs(f)
    assert all(m.truncate(prec) == series(3, {n: 1}, prec) for n, m in enumerate(e.coeffs))
    assert mh.sh_test_mahler(e, 0, 0).verdict == Verdict.CERTIFIED


@pytest.mark.parametrize(
    ("table_len", "locally_constant", "n_max", "expected_context"),
    [
        pytest.param(4, True, 10, nullcontext(), id="periodic tables extend"),
        pytest.param(4, False, 3, nullcontext(), id="sampled range suffices"),
        pytest.param(4, False, 4, pytest.raises(TableTooShort), id="sampled range too short"),
        pytest.param(3, True, 2, pytest.raises(TableTooShort), id="level-2 table needs 4 values"),
    ],
)
def test_table_length_contract(table_len, locally_constant, n_max, expected_context):
    with expected_context:
        f = mh.ContinuousFn(2, 2, tuple(constant(2, z) for z in range(table_len)), locally_constant)
        mh.mahler_coeffs(f, n_max)


def test_mahler_eval():
    e = mh.MahlerExpansion(3, (constant(3, 1), series(3, {1: 1}, 8)))
    assert mh.mahler_eval(e, 2) == series(3, {0: 1, 1: 2}, 8)
    assert mh.mahler_eval(e, 0) == constant(3, 1)


def test_round_trip_on_locally_constant_function():
    table = (series(3, {0: 1}, 6), series(3, {2: 1}, 6), series(3, {Fraction(1, 3): 2}, 6))
    f = mh.ContinuousFn(3, 1, table)
    e = mh.mahler_coeffs(f)
    assert all(mh.mahler_eval(e, z) == f(z) for z in range(3))
    assert f(4) == table[1]


@pytest.mark.parametrize(
    ("coeffs", "expected"),
    [
        pytest.param((series(3, {2: 1}, 8), series(3, {1: 1}, 8)), Valuation.exact(1), id="min is 1"),
        pytest.param(
            (PuiseuxSeries.zero(3, 8), PuiseuxSeries.zero(3, 8)),
            Valuation.at_least_bound(8),
            id="zero expansion is censored",
        ),
    ],
)
def test_sup_val(coeffs, expected):
    assert mh.sup_val(mh.MahlerExpansion(3, coeffs)) == expected


def test_sh_test_refutes_with_witness():
    e = mh.MahlerExpansion(2, (constant(2, 0), constant(2, 0), constant(2, 1)))
    result = mh.sh_test_mahler(e, 0, 0)
    assert (result.verdict, result.witness) == (Verdict.REFUTED, (2, 1))


def test_sh_test_unresolved_on_censored_zero():
    e = mh.MahlerExpansion(2, tuple(PuiseuxSeries.zero(2, 4) for _ in range(4)))
    assert mh.sh_test_mahler(e, 5, 0).verdict == Verdict.UNRESOLVED


def test_w_test_is_the_stronger_bound():
    # m_3 = X^2 meets p^i = 2 for n = 3 but not 3·p^0 = 3
    e = mh.MahlerExpansion(
        2, (constant(2, 1), series(2, {1: 1}, 9), series(2, {2: 1}, 9), series(2, {2: 1}, 9))
    )
    assert mh.sh_test_mahler(e, 0, 0).verdict == Verdict.CERTIFIED
    assert mh.w_test_mahler(e, 0, 0).witness == (3, 1)


@pytest.mark.parametrize(
    ("p", "w", "lam", "mu", "stable"),
    [
        pytest.param(3, {0: 3, 1: 9, 2: 27}, 1, 0, True, id="p^(1+i)"),
        pytest.param(2, {0: 1, 1: 2, 2: 4}, 0, 0, True, id="p^i"),
        pytest.param(2, {0: 5, 1: 7, 2: 11}, 1, 3, True, id="shifted by mu"),
        pytest.param(2, {0: 1, 1: 1}, -math.inf, 1, False, id="flat floors are degenerate"),
    ],
)
def test_sh_profile_fit(p, w, lam, mu, stable):
    fit = mh.sh_profile_fit(w, p)
    assert (fit.lam, fit.mu, fit.stable) == (lam, mu, stable)


def test_sh_profile_fit_needs_two_points():
    with pytest.raises(TooFewPoints):
        mh.sh_profile_fit({0: Valuation.exact(3), 1: Valuation.at_least_bound(9)}, 3)


def test_profile_frame_columns():
    fit = mh.sh_profile_fit({0: 3, 1: 9, 2: 27}, 3)
    frame = fit.to_frame()
    assert frame.columns == ["depth", "floor", "censored", "bound"]
    assert frame["bound"].to_list() == [3.0, 9.0, 27.0]
    assert fit.passes(1, 0) == Verdict.CERTIFIED
    assert fit.passes(2, 0) == Verdict.REFUTED


@pytest.mark.parametrize(
    ("p", "k", "level"),
    [
        pytest.param(3, 1, 0, id="X over F_3"),
        pytest.param(2, 2, 1, id="X^(1/2) over F_2"),
        pytest.param(2, 3, 2, id="X^(1/4) over F_2"),
    ],
)
def test_orbit_floors_of_roots(p, k, level):
    m = series(p, {Fraction(1, p**level): 1}, Fraction(p) ** (k - level + 3) + 1)
    floors = mh.orbit_floors(m, k, i_max=2, digits=8)
    assert floors == {i: Valuation.exact(Fraction(p) ** (k - level + i)) for i in range(3)}
    fit = mh.sh_profile_fit(floors, p)
    assert (fit.lam, fit.mu) == (k - level, 0)


def test_orbit_fn_tabulates_gamma_action():
    m = series(3, {1: 1}, 30)
    orbit = mh.orbit_fn(m, 1, 1, i_max=1, digits=8)
    assert not orbit.fn.locally_constant
    assert orbit.fn(0) == m
    assert (orbit.fn(1) - m).val() == Valuation.exact(3)


def test_fit_asymptotic_skips_window_depths():
    floors = {0: Valuation.exact(1), 1: Valuation.exact(9), 2: Valuation.exact(17)}
    fit = mh.fit_asymptotic(floors, 2, 2, Fraction(3))
    # depth 0 sits inside the window: gap 8 over 2^2 − 2^1
    assert (fit.lam, fit.mu) == (2, 1)
    assert fit.floors == floors


def test_product_parameters():
    assert mh.product_parameters(1, 2, 5, Fraction(1), Fraction(3)) == (1, 5)


def test_pointwise_product():
    f = mh.ContinuousFn(2, 1, (constant(2, 1), series(2, {1: 1}, 8)))
    g = mh.ContinuousFn(2, 2, tuple(series(2, {z: 1}, 8) for z in range(4)))
    h = f * g
    assert h.t == 2
    assert h(3).coefficients() == {Fraction(4): 1}
