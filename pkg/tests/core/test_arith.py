import math
from contextlib import nullcontext

import pytest
from hypothesis import given
from hypothesis import strategies as st

import superholder.core.arith as ar
from superholder.core.errors import ContextMismatch, InsufficientPrecision, NotAUnit


@pytest.mark.parametrize(
    ("primes", "expected_context"),
    [
        pytest.param((3, 3, 3), nullcontext(3), id="all equal"),
        pytest.param((2, 3), pytest.raises(ContextMismatch), id="mixed primes"),
    ],
)
def test_same_prime(primes, expected_context):
    with expected_context as expected:
        assert ar.same_prime(*primes) == expected


@pytest.mark.parametrize(
    ("p", "a", "b", "expected"),
    [
        pytest.param(5, 3, 4, 2, id="3 + 4 = 2 mod 5"),
        pytest.param(2, 1, 1, 0, id="1 + 1 = 0 mod 2"),
    ],
)
def test_fp_add(p, a, b, expected):
    field = ar.PrimeField(p)
    assert int(field(a) + field(b)) == expected


@given(st.sampled_from([2, 3, 5, 7]), st.integers(min_value=1, max_value=1000))
def test_fp_inverse_law(p, a):
    x = ar.FpElem(p, a % p or 1)
    assert int(x * x.inverse()) == 1


@pytest.mark.parametrize(
    ("z", "p", "precision", "digits"),
    [
        pytest.param(4, 3, 2, (1, 1), id="4 = 1 + 1·3"),
        pytest.param(-1, 2, 4, (1, 1, 1, 1), id="-1 has all digits p - 1"),
        pytest.param(5, 2, 3, (1, 0, 1), id="5 = 101 in base 2"),
    ],
)
def test_padic_digits(z, p, precision, digits):
    assert ar.PadicInt.from_int(z, p, precision).digits == digits


@given(
    st.sampled_from([2, 3, 5]),
    st.integers(min_value=0, max_value=10**6),
    st.integers(min_value=0, max_value=10**6),
)
def test_padic_ring_laws(p, a, b):
    x, y = ar.PadicInt.from_int(a, p, 8), ar.PadicInt.from_int(b, p, 8)
    assert x + y == y + x
    assert x * y == y * x
    assert (x - y) + y == x


@given(st.sampled_from([2, 3, 5]), st.integers(min_value=0, max_value=10**6))
def test_padic_unit_inverse(p, a):
    z = ar.PadicInt.from_int(a * p + 1, p, 10)
    assert z * z.inverse() == ar.PadicInt.from_int(1, p, 10)


def test_non_unit_inverse_raises():
    with pytest.raises(NotAUnit):
        ar.PadicInt.from_int(3, 3, 4).inverse()


@pytest.mark.parametrize(
    ("z", "expected_value", "censored"),
    [
        pytest.param(ar.PadicInt.from_int(12, 2, 6), 2, False, id="12 = 4·3"),
        pytest.param(ar.PadicInt.from_int(0, 3, 5), 5, True, id="zero is censored at N"),
    ],
)
def test_padic_val(z, expected_value, censored):
    v = ar.padic_val(z)
    assert (v.value, v.censored) == (expected_value, censored)


@pytest.mark.parametrize(
    ("z", "n", "expected_context"),
    [
        pytest.param(ar.PadicInt.from_int(5, 3, 4), 2, nullcontext(10 % 3), id="C(5,2) = 10"),
        pytest.param(ar.PadicInt.from_int(4, 2, 4), 1, nullcontext(0), id="C(4,1) even"),
        pytest.param(ar.PadicInt.from_int(-1, 2, 4), 5, nullcontext(1), id="C(-1,5) odd"),
        pytest.param(
            ar.PadicInt.from_int(1, 2, 2), 8, pytest.raises(InsufficientPrecision), id="too few digits"
        ),
    ],
)
def test_lucas_binom(z, n, expected_context):
    with expected_context as expected:
        assert int(ar.lucas_binom(z, n)) == expected


def test_gamma_coordinate_five():
    # 1 + 2^2·5 = 21
    g = ar.GammaElement.from_coordinate(5, 2, 2, 6)
    assert g.as_scalar() == ar.PadicInt.from_int(21, 2, 8)
    assert g.depth().value == 0


@given(
    st.integers(min_value=0, max_value=10**5),
    st.integers(min_value=0, max_value=10**5),
)
def test_gamma_compose_matches_scalar_product(a, b):
    g = ar.GammaElement.from_coordinate(a, 3, 1, 8)
    h = ar.GammaElement.from_coordinate(b, 3, 1, 8)
    assert (g.compose(h)).as_scalar() == g.as_scalar() * h.as_scalar()


@given(st.integers(min_value=0, max_value=10**5))
def test_gamma_inverse(a):
    g = ar.GammaElement.from_coordinate(a, 2, 2, 8)
    assert g.compose(g.inverse()) == ar.GammaElement.identity(2, 2, 8)


def test_gamma_p_power_deepens():
    g = ar.GammaElement.from_coordinate(1, 3, 1, 8)
    assert g.p_power().depth().value == 1


def test_gamma_mixed_groups_raise():
    with pytest.raises(ContextMismatch):
        ar.GammaElement.from_coordinate(1, 3, 1).compose(ar.GammaElement.from_coordinate(1, 3, 2))


def test_gamma_k_one_rejected_for_p_two():
    with pytest.raises(ValueError):
        ar.GammaElement.from_coordinate(1, 2, 1)


@pytest.mark.parametrize(
    ("p", "i", "coordinates"),
    [
        pytest.param(2, 0, [1, 3], id="p = 2 depth 0"),
        pytest.param(3, 1, [3, 6, 12], id="p = 3 depth 1"),
    ],
)
def test_gamma_samples(p, i, coordinates):
    samples = ar.gamma_samples(p, 2, i, 8)
    assert [g.a.residue for g in samples] == coordinates
    assert all(g.depth().value == i for g in samples)


@given(
    st.sampled_from([2, 3, 5]),
    st.integers(min_value=0, max_value=200),
    st.integers(min_value=0, max_value=200),
)
def test_lucas_binom_matches_integer_binomial(p, x, n):
    assert int(ar.lucas_binom(ar.PadicInt.from_int(x, p, 8), n)) == math.comb(x, n) % p


@given(
    st.sampled_from([2, 3, 5]),
    st.integers(min_value=-500, max_value=500),
    st.integers(min_value=-500, max_value=500),
    st.integers(min_value=0, max_value=60),
)
def test_lucas_binom_vandermonde(p, x, y, n):
    def binom(z: int, j: int) -> int:
        return int(ar.lucas_binom(ar.PadicInt.from_int(z, p, 8), j))

    total = sum(binom(x, j) * binom(y, n - j) for j in range(n + 1))
    assert total % p == binom(x + y, n)


@given(
    st.integers(min_value=0, max_value=10**5),
    st.integers(min_value=0, max_value=10**5),
    st.integers(min_value=0, max_value=10**5),
)
def test_gamma_compose_is_associative(a, b, c):
    g, h, j = (ar.GammaElement.from_coordinate(x, 3, 1, 8) for x in (a, b, c))
    assert g.compose(h).compose(j) == g.compose(h.compose(j))
    assert g.inverse().compose(g) == ar.GammaElement.identity(3, 1, 8)
