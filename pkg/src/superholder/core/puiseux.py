"""Truncated Puiseux series over F_p: the ring Ẽ⁺ at finite precision.

A series at level n has exponents in (1/p^n)·Z_{≥0} and is known modulo X^T.
Exponents are stored as integer numerators over p^level and the level is
kept minimal, so structurally equal series are mathematically equal at the
same precision.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from fractions import Fraction
import sys

if sys.version_info >= (3, 11):
    from typing import Self
else:  # pragma: no cover
    from typing_extensions import Self

import attrs
import numpy as np

from superholder.core.arith import FpElem, GammaElement, PadicInt, digit_length, same_prime
from superholder.core.errors import (
    DivisionByZero,
    InsufficientPrecision,
    NotAUnit,
    PreconditionViolation,
    SubstitutionDiverges,
)
from superholder.core.logger import logger
from superholder.core.valuation import Valuation

# Dense numpy convolution wins once the pairwise work of the sparse loop
# exceeds the span product by roughly this factor.
_DENSE_FACTOR = 40
_SPARSE_LIMIT = 256


def _p_level(q: Fraction, p: int) -> int:
    """Smallest n with q·p^n integral; the denominator must be a power of p."""
    den, n = q.denominator, 0
    while den % p == 0:
        den //= p
        n += 1
    if den != 1:
        msg = f"{q} does not have a power-of-{p} denominator"
        logger.error(msg)
        raise ValueError(msg)
    return n


def _mul_terms(a: Mapping[int, int], b: Mapping[int, int], bound: int, p: int) -> dict[int, int]:
    """Product of two numerator→coefficient maps, truncated below `bound`."""
    if not a or not b or bound <= 0:
        return {}
    a_min, b_min = min(a), min(b)
    a_keys = [e for e in a if e + b_min < bound]
    b_keys = [e for e in b if e + a_min < bound]
    if not a_keys or not b_keys:
        return {}
    a_span = max(a_keys) - a_min + 1
    b_span = max(b_keys) - b_min + 1
    pairs = len(a_keys) * len(b_keys)
    if pairs <= _SPARSE_LIMIT or a_span * b_span > _DENSE_FACTOR * pairs:
        out: dict[int, int] = {}
        for ea in a_keys:
            ca = a[ea]
            for eb in b_keys:
                e = ea + eb
                if e < bound:
                    out[e] = (out.get(e, 0) + ca * b[eb]) % p
        return {e: c for e, c in out.items() if c}
    dense_a = np.zeros(a_span, dtype=np.int64)
    dense_b = np.zeros(b_span, dtype=np.int64)
    for e in a_keys:
        dense_a[e - a_min] = a[e]
    for e in b_keys:
        dense_b[e - b_min] = b[e]
    prod = np.mod(np.convolve(dense_a, dense_b), p)[: max(bound - a_min - b_min, 0)]
    offset = a_min + b_min
    return {int(i) + offset: int(prod[i]) for i in np.flatnonzero(prod)}


@attrs.define(frozen=True)
class PuiseuxSeries:
    """Σ c_j X^(j/p^level), known modulo X^(prec_num/p^level).

    `terms` holds (numerator, coefficient) pairs sorted by numerator, with
    coefficients in 1..p−1 and numerators below prec_num.
    """

    p: int
    level: int = attrs.field(validator=attrs.validators.ge(0))
    prec_num: int = attrs.field(validator=attrs.validators.ge(0))
    terms: tuple[tuple[int, int], ...] = attrs.field(converter=tuple)

    # ---- construction -------------------------------------------------

    @classmethod
    def from_numerators(
        cls, p: int, level: int, coeffs: Mapping[int, int], prec_num: int
    ) -> Self:
        """Normalizing constructor: reduces coefficients and minimizes the level."""
        if any(e < 0 for e, c in coeffs.items() if c % p):
            msg = "Negative exponents are not allowed in PuiseuxSeries; use MonomialScaled"
            logger.error(msg)
            raise ValueError(msg)
        kept = {e: c % p for e, c in coeffs.items() if e < prec_num and c % p}
        while level > 0 and prec_num % p == 0 and all(e % p == 0 for e in kept):
            kept = {e // p: c for e, c in kept.items()}
            prec_num //= p
            level -= 1
        return cls(p, level, prec_num, tuple(sorted(kept.items())))

    @classmethod
    def from_coeffs(
        cls, p: int, coeffs: Mapping[Fraction | int, int | FpElem], prec: Fraction | int
    ) -> Self:
        prec = Fraction(prec)
        exps = {Fraction(e): int(c) for e, c in coeffs.items()}
        level = max([_p_level(prec, p), *(_p_level(e, p) for e in exps)])
        scale = p**level
        return cls.from_numerators(
            p, level, {int(e * scale): c for e, c in exps.items()}, int(prec * scale)
        )

    @classmethod
    def zero(cls, p: int, prec: Fraction | int) -> Self:
        return cls.from_coeffs(p, {}, prec)

    @classmethod
    def constant(cls, p: int, c: int, prec: Fraction | int) -> Self:
        return cls.from_coeffs(p, {0: c}, prec)

    @classmethod
    def monomial(cls, p: int, exponent: Fraction | int, prec: Fraction | int, c: int = 1) -> Self:
        return cls.from_coeffs(p, {Fraction(exponent): c}, prec)

    # ---- views --------------------------------------------------------

    @property
    def denominator(self) -> int:
        return self.p**self.level

    @property
    def term_level(self) -> int:
        """Smallest n with every stored exponent in (1/p^n)·Z; the precision is not counted."""
        drop = 0
        while drop < self.level and all(e % self.p ** (drop + 1) == 0 for e, _ in self.terms):
            drop += 1
        return self.level - drop

    @property
    def prec(self) -> Fraction:
        return Fraction(self.prec_num, self.denominator)

    def coefficients(self) -> dict[Fraction, int]:
        return {Fraction(e, self.denominator): c for e, c in self.terms}

    def coefficient(self, exponent: Fraction | int) -> int:
        exponent = Fraction(exponent)
        num = exponent * self.denominator
        if num.denominator != 1:
            return 0
        return dict(self.terms).get(int(num), 0)

    def is_zero(self) -> bool:
        return not self.terms

    def at_level(self, level: int) -> tuple[dict[int, int], int]:
        """Numerator map and prec numerator re-expressed over p^level (level ≥ self.level)."""
        if level < self.level:
            msg = f"Cannot express a level-{self.level} series at level {level}"
            logger.error(msg)
            raise ValueError(msg)
        scale = self.p ** (level - self.level)
        return {e * scale: c for e, c in self.terms}, self.prec_num * scale

    def val(self) -> Valuation:
        if not self.terms:
            return Valuation.at_least_bound(self.prec)
        return Valuation.exact(Fraction(self.terms[0][0], self.denominator))

    def _context(self, other: PuiseuxSeries) -> int:
        same_prime(self.p, other.p)
        return max(self.level, other.level)

    # ---- ring structure -----------------------------------------------

    def __add__(self, other: PuiseuxSeries) -> PuiseuxSeries:
        level = self._context(other)
        a, ta = self.at_level(level)
        b, tb = other.at_level(level)
        for e, c in b.items():
            a[e] = a.get(e, 0) + c
        return PuiseuxSeries.from_numerators(self.p, level, a, min(ta, tb))

    def __neg__(self) -> PuiseuxSeries:
        return PuiseuxSeries(
            self.p, self.level, self.prec_num, tuple((e, self.p - c) for e, c in self.terms)
        )

    def __sub__(self, other: PuiseuxSeries) -> PuiseuxSeries:
        return self + (-other)

    def scale(self, c: int | FpElem) -> PuiseuxSeries:
        c = int(c) % self.p
        return PuiseuxSeries.from_numerators(
            self.p, self.level, {e: v * c for e, v in self.terms}, self.prec_num
        )

    def __mul__(self, other: PuiseuxSeries | int | FpElem) -> PuiseuxSeries:
        if not isinstance(other, PuiseuxSeries):
            return self.scale(other)
        level = self._context(other)
        a, ta = self.at_level(level)
        b, tb = other.at_level(level)
        va = min(a) if a else ta
        vb = min(b) if b else tb
        bound = min(ta + vb, tb + va)
        return PuiseuxSeries.from_numerators(self.p, level, _mul_terms(a, b, bound, self.p), bound)

    __rmul__ = __mul__

    def truncate(self, prec: Fraction | int) -> PuiseuxSeries:
        """The same series known only modulo X^min(prec, T)."""
        prec = Fraction(prec)
        if prec >= self.prec:
            return self
        level = max(self.level, _p_level(prec, self.p))
        a, _ = self.at_level(level)
        return PuiseuxSeries.from_numerators(self.p, level, a, int(prec * self.p**level))

    def shift(self, exponent: Fraction | int) -> PuiseuxSeries:
        """Multiply by the monomial X^exponent (exponent ≥ 0)."""
        exponent = Fraction(exponent)
        level = max(self.level, _p_level(exponent, self.p))
        a, t = self.at_level(level)
        s = int(exponent * self.p**level)
        return PuiseuxSeries.from_numerators(self.p, level, {e + s: c for e, c in a.items()}, t + s)

    def divide_by_monomial(self, exponent: Fraction | int) -> PuiseuxSeries:
        """Exact division by X^exponent; every known term must be divisible."""
        exponent = Fraction(exponent)
        level = max(self.level, _p_level(exponent, self.p))
        a, t = self.at_level(level)
        s = int(exponent * self.p**level)
        if (a and min(a) < s) or t < s:
            msg = f"Series with valuation {self.val()} is not divisible by X^{exponent}"
            logger.error(msg)
            raise DivisionByZero(msg)
        return PuiseuxSeries.from_numerators(self.p, level, {e - s: c for e, c in a.items()}, t - s)

    def inverse(self) -> PuiseuxSeries:
        """Multiplicative inverse of a unit (val_X = 0), by Newton iteration."""
        if not self.terms or self.terms[0][0] != 0:
            msg = f"Series with valuation {self.val()} is not a unit of Ẽ⁺"
            logger.error(msg)
            raise DivisionByZero(msg)
        p, target = self.p, self.prec_num
        f = dict(self.terms)
        g = {0: pow(self.terms[0][1], -1, p)}
        m = 1
        while m < target:
            m = min(2 * m, target)
            fg = _mul_terms({e: c for e, c in f.items() if e < m}, g, m, p)
            two_minus = {e: -c for e, c in fg.items()}
            two_minus[0] = two_minus.get(0, 0) + 2
            g = _mul_terms(g, {e: c % p for e, c in two_minus.items() if c % p}, m, p)
        return PuiseuxSeries.from_numerators(p, self.level, g, target)

    def __pow__(self, m: int) -> PuiseuxSeries:
        """f^m through the base-p digits of m, using f^p = φ(f) over F_p."""
        if m < 0:
            return self.inverse() ** (-m)
        result = PuiseuxSeries.constant(self.p, 1, self.prec * max(m, 1) + 1)
        base = self
        while m:
            m, digit = divmod(m, self.p)
            for _ in range(digit):
                result = result * base
            if m:
                base = base.frobenius()
        return result

    # ---- Frobenius ----------------------------------------------------

    def frobenius(self) -> PuiseuxSeries:
        """φ(f)(X) = f(X^p)."""
        if self.level > 0:
            return PuiseuxSeries(self.p, self.level - 1, self.prec_num, self.terms)
        return PuiseuxSeries(
            self.p, 0, self.prec_num * self.p, tuple((e * self.p, c) for e, c in self.terms)
        )

    def inv_frobenius(self) -> PuiseuxSeries:
        """φ⁻¹(f)(X) = f(X^(1/p)); the coefficientwise p-th root is the identity on F_p."""
        return PuiseuxSeries.from_numerators(
            self.p, self.level + 1, dict(self.terms), self.prec_num
        )

    def frobenius_power(self, j: int) -> PuiseuxSeries:
        out = self
        for _ in range(abs(j)):
            out = out.frobenius() if j > 0 else out.inv_frobenius()
        return out

    def in_frobenius_image(self, j: int) -> bool:
        """Whether the known part lies in φ^j(E⁺) = E[[X^(p^j)]] (level-0 exponents divisible by p^j)."""
        if self.level > 0:
            return False
        return all(e % self.p**j == 0 for e, _ in self.terms)

    def as_level_zero(self) -> PuiseuxSeries:
        """f(X^(p^level)): the same numerators read as integer exponents."""
        return PuiseuxSeries(self.p, 0, self.prec_num, self.terms)

    def derivative(self) -> PuiseuxSeries:
        if self.level > 0:
            msg = "Derivatives are only defined on level-0 series here"
            logger.error(msg)
            raise PreconditionViolation(msg)
        return PuiseuxSeries.from_numerators(
            self.p, 0, {e - 1: e * c for e, c in self.terms if e % self.p}, max(self.prec_num - 1, 0)
        )

    def __str__(self) -> str:
        if not self.terms:
            return f"O(X^{self.prec})"
        parts = []
        for e, c in self.terms:
            q = Fraction(e, self.denominator)
            mono = "1" if q == 0 else ("X" if q == 1 else f"X^({q})")
            parts.append(mono if c == 1 else f"{c}*{mono}" if q else str(c))
        return " + ".join(parts) + f" + O(X^{self.prec})"


@attrs.define(frozen=True)
class MonomialScaled:
    """X^(−pole)·body: the few elements of Ẽ that need negative valuation."""

    pole: Fraction = attrs.field(converter=Fraction, validator=attrs.validators.ge(0))
    body: PuiseuxSeries

    @classmethod
    def from_series(cls, f: PuiseuxSeries) -> Self:
        return cls(Fraction(0), f)

    def val(self) -> Valuation:
        return self.body.val().shift(-self.pole)

    def integral_pole(self) -> MonomialScaled:
        """Same element with an integer pole, so that E⁺_0-linear maps commute with the prefactor."""
        ceil = Fraction(math.ceil(self.pole))
        return MonomialScaled(ceil, self.body.shift(ceil - self.pole))

    def __mul__(self, other: MonomialScaled) -> MonomialScaled:
        return MonomialScaled(self.pole + other.pole, self.body * other.body)

    def __add__(self, other: MonomialScaled) -> MonomialScaled:
        pole = max(self.pole, other.pole)
        return MonomialScaled(
            pole, self.body.shift(pole - self.pole) + other.body.shift(pole - other.pole)
        )

    def to_series(self) -> PuiseuxSeries:
        return self.body.divide_by_monomial(self.pole)


def substitute(f: PuiseuxSeries, u: PuiseuxSeries) -> PuiseuxSeries:
    """f∘u modulo X^min(T_u, T_f·val_X(u)), by Horner evaluation over sorted exponents."""
    same_prime(f.p, u.p)
    v = u.val()
    if v.censored or v.value <= 0:
        msg = f"Substitution into a series of valuation {v} does not converge"
        logger.error(msg)
        raise SubstitutionDiverges(msg)
    if f.level > 0:
        return substitute(f.as_level_zero(), u.frobenius_power(-f.level))
    target = min(u.prec, f.prec * v.value)
    if not f.terms:
        return PuiseuxSeries.zero(f.p, target)
    powers: dict[int, PuiseuxSeries] = {}

    def u_pow(m: int) -> PuiseuxSeries:
        if m not in powers:
            powers[m] = (u**m).truncate(target)
        return powers[m]

    descending = list(reversed(f.terms))
    acc = PuiseuxSeries.constant(f.p, descending[0][1], target)
    for (e_hi, _), (e_lo, c_lo) in zip(descending, descending[1:], strict=False):
        acc = (acc * u_pow(e_hi - e_lo)).truncate(target)
        acc = acc + PuiseuxSeries.constant(f.p, c_lo, target)
    e_last = descending[-1][0]
    if e_last:
        acc = acc * u_pow(e_last)
    return acc.truncate(target)


compose = substitute


def _scalar(a: PadicInt | GammaElement | int, p: int) -> PadicInt:
    if isinstance(a, GammaElement):
        return a.as_scalar()
    if isinstance(a, int):
        return PadicInt.from_int(a, p)
    return a


def one_plus_x_pow(a: PadicInt, scale: int, prec: Fraction | int) -> PuiseuxSeries:
    """(1 + X^(1/p^scale))^a = Σ_j binom(a, j)·X^(j/p^scale) mod X^prec, enumerated by Lucas."""
    p, prec = a.p, Fraction(prec)
    level = max(scale, _p_level(prec, p))
    bound = math.ceil(prec * p**scale)
    needed = digit_length(max(bound - 1, 0), p)
    if needed > a.precision:
        msg = f"(1+X)^a mod X^{prec} needs {needed} digits of a, only {a.precision} known"
        logger.error(msg)
        raise InsufficientPrecision(msg)
    items = [(0, 1)]
    for i, a_i in enumerate(a.digits[:needed]):
        step = p**i
        items = [
            (j + d * step, c * math.comb(a_i, d) % p)
            for j, c in items
            for d in range(a_i + 1)
            if j + d * step < bound
        ]
    lift = p ** (level - scale)
    return PuiseuxSeries.from_numerators(
        p, level, {j * lift: c for j, c in items}, int(prec * p**level)
    )


def gamma_series(a: PadicInt | GammaElement | int, prec: Fraction | int, p: int) -> PuiseuxSeries:
    """γ_a(X) = (1+X)^a − 1 modulo X^prec."""
    a = _scalar(a, p)
    return one_plus_x_pow(a, 0, prec) - PuiseuxSeries.constant(a.p, 1, prec)


def gamma_act(a: PadicInt | GammaElement | int, f: PuiseuxSeries) -> PuiseuxSeries:
    """a·f: substitute X^(1/p^level) ↦ (1 + X^(1/p^level))^a − 1.

    The substituted series has valuation exactly 1/p^level, so the precision
    and valuation of f are preserved.
    """
    a = _scalar(a, f.p)
    same_prime(a.p, f.p)
    if not a.is_unit():
        msg = f"The action needs a ∈ Z_p^×, got {a.residue} mod {a.p}^{a.precision}"
        logger.error(msg)
        raise NotAUnit(msg)
    body = f.as_level_zero()
    image = substitute(body, gamma_series(a, body.prec, f.p))
    return image.frobenius_power(-f.level) if f.level else image


def iterate_compose(u: PuiseuxSeries, m: int) -> PuiseuxSeries:
    """u∘u∘…∘u (m times) by binary powering on composition."""
    if u.level != 0 or u.val() != Valuation.exact(1) or u.coefficient(1) != 1:
        msg = f"iterate_compose needs u ∈ X + X^2·F_p[[X]], got {u}"
        logger.error(msg)
        raise PreconditionViolation(msg)
    if m < 0:
        msg = f"Iteration count must be non-negative, got {m}"
        logger.error(msg)
        raise PreconditionViolation(msg)
    result = PuiseuxSeries.monomial(u.p, 1, u.prec)
    base = u
    while m:
        if m & 1:
            result = compose(base, result)
        m >>= 1
        if m:
            base = compose(base, base)
    return result


def orbit_difference_val(a: PadicInt | GammaElement, f: PuiseuxSeries) -> Valuation:
    return (gamma_act(a, f) - f).val()


def sum_series(items: Iterable[PuiseuxSeries], p: int, prec: Fraction | int) -> PuiseuxSeries:
    total = PuiseuxSeries.zero(p, prec)
    for item in items:
        total = total + item
    return total
