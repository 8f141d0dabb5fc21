"""Exact scalars: the prime field F_p, p-adic integers at fixed digit precision,
Lucas binomials and the groups Γ_k = 1 + p^k Z_p with the coordinate
1 + p^k a ↦ a.
"""

from __future__ import annotations

import math
import sys

if sys.version_info >= (3, 11):
    from typing import Self
else:  # pragma: no cover
    from typing_extensions import Self

import attrs
from sympy import isprime

from superholder.core.config import DEFAULT_DIGITS
from superholder.core.errors import ContextMismatch, DivisionByZero, InsufficientPrecision, NotAUnit
from superholder.core.logger import logger
from superholder.core.valuation import Valuation


def _check_prime(_instance: object, _attribute: attrs.Attribute, value: int) -> None:
    if not isprime(value):
        msg = f"p must be prime, got {value}"
        logger.error(msg)
        raise ValueError(msg)


def same_prime(*ps: int) -> int:
    if len(set(ps)) != 1:
        msg = f"Operands live over different primes: {ps = }"
        logger.error(msg)
        raise ContextMismatch(msg)
    return ps[0]


@attrs.define(frozen=True)
class PrimeField:
    """F_p; primality of p is checked once, here."""

    p: int = attrs.field(validator=[attrs.validators.instance_of(int), _check_prime])

    def __call__(self, value: int) -> FpElem:
        return FpElem(self.p, value % self.p)

    @property
    def zero(self) -> FpElem:
        return FpElem(self.p, 0)

    @property
    def one(self) -> FpElem:
        return FpElem(self.p, 1)


def _residue_below_p(instance: FpElem, _attribute: attrs.Attribute, value: int) -> None:
    if not 0 <= value < instance.p:
        msg = f"Residue {value} is not reduced modulo {instance.p}"
        raise ValueError(msg)


@attrs.define(frozen=True)
class FpElem:
    p: int
    value: int = attrs.field(validator=_residue_below_p)

    def _coerce(self, other: FpElem | int) -> int:
        if isinstance(other, FpElem):
            same_prime(self.p, other.p)
            return other.value
        return int(other) % self.p

    def __add__(self, other: FpElem | int) -> FpElem:
        return FpElem(self.p, (self.value + self._coerce(other)) % self.p)

    __radd__ = __add__

    def __sub__(self, other: FpElem | int) -> FpElem:
        return FpElem(self.p, (self.value - self._coerce(other)) % self.p)

    def __rsub__(self, other: int) -> FpElem:
        return FpElem(self.p, (self._coerce(other) - self.value) % self.p)

    def __mul__(self, other: FpElem | int) -> FpElem:
        return FpElem(self.p, (self.value * self._coerce(other)) % self.p)

    __rmul__ = __mul__

    def __neg__(self) -> FpElem:
        return FpElem(self.p, (-self.value) % self.p)

    def inverse(self) -> FpElem:
        if self.value == 0:
            msg = f"Cannot invert 0 in F_{self.p}"
            logger.error(msg)
            raise DivisionByZero(msg)
        return FpElem(self.p, pow(self.value, -1, self.p))

    def __truediv__(self, other: FpElem | int) -> FpElem:
        return self * FpElem(self.p, self._coerce(other)).inverse()

    def __pow__(self, exponent: int) -> FpElem:
        if exponent < 0:
            return self.inverse() ** (-exponent)
        return FpElem(self.p, pow(self.value, exponent, self.p))

    def __int__(self) -> int:
        return self.value

    def __bool__(self) -> bool:
        return self.value != 0

    def __str__(self) -> str:
        return str(self.value)


def _reduced_residue(instance: PadicInt, _attribute: attrs.Attribute, value: int) -> None:
    if not 0 <= value < instance.p**instance.precision:
        msg = f"Residue {value} is not reduced modulo {instance.p}^{instance.precision}"
        raise ValueError(msg)


@attrs.define(frozen=True)
class PadicInt:
    """z ∈ Z_p known modulo p^precision.

    Stored as the residue in [0, p^N); negative integers therefore carry their
    digit expansion (−1 has every digit equal to p − 1).
    """

    p: int
    precision: int = attrs.field(validator=attrs.validators.ge(1))
    residue: int = attrs.field(validator=_reduced_residue)

    @classmethod
    def from_int(cls, z: int, p: int, precision: int = DEFAULT_DIGITS) -> Self:
        return cls(p, precision, z % p**precision)

    @classmethod
    def from_digits(cls, digits: list[int] | tuple[int, ...], p: int) -> Self:
        if not digits or any(not 0 <= d < p for d in digits):
            msg = f"Invalid base-{p} digit list: {digits = }"
            logger.error(msg)
            raise ValueError(msg)
        return cls(p, len(digits), sum(d * p**i for i, d in enumerate(digits)))

    @property
    def modulus(self) -> int:
        return self.p**self.precision

    @property
    def digits(self) -> tuple[int, ...]:
        out, z = [], self.residue
        for _ in range(self.precision):
            z, d = divmod(z, self.p)
            out.append(d)
        return tuple(out)

    def is_unit(self) -> bool:
        return self.residue % self.p != 0

    def with_precision(self, precision: int) -> PadicInt:
        if precision > self.precision:
            msg = f"Cannot raise precision from {self.precision} to {precision}"
            logger.error(msg)
            raise InsufficientPrecision(msg)
        return PadicInt(self.p, precision, self.residue % self.p**precision)

    def _common(self, other: PadicInt | int) -> tuple[int, int]:
        if isinstance(other, PadicInt):
            same_prime(self.p, other.p)
            return min(self.precision, other.precision), other.residue
        return self.precision, int(other)

    def __add__(self, other: PadicInt | int) -> PadicInt:
        n, r = self._common(other)
        return PadicInt.from_int(self.residue + r, self.p, n)

    __radd__ = __add__

    def __sub__(self, other: PadicInt | int) -> PadicInt:
        n, r = self._common(other)
        return PadicInt.from_int(self.residue - r, self.p, n)

    def __mul__(self, other: PadicInt | int) -> PadicInt:
        n, r = self._common(other)
        return PadicInt.from_int(self.residue * r, self.p, n)

    __rmul__ = __mul__

    def __neg__(self) -> PadicInt:
        return PadicInt.from_int(-self.residue, self.p, self.precision)

    def inverse(self) -> PadicInt:
        if not self.is_unit():
            msg = f"{self.residue} is not a unit of Z_{self.p}"
            logger.error(msg)
            raise NotAUnit(msg)
        return PadicInt(self.p, self.precision, pow(self.residue, -1, self.modulus))

    def __int__(self) -> int:
        return self.residue

    def __str__(self) -> str:
        return f"{self.residue} + O({self.p}^{self.precision})"


def padic_val(z: PadicInt) -> Valuation:
    """Index of the first nonzero digit; "≥ N" when every stored digit is zero."""
    if z.residue == 0:
        return Valuation.at_least_bound(z.precision)
    v, r = 0, z.residue
    while r % z.p == 0:
        r //= z.p
        v += 1
    return Valuation.exact(v)


def digit_length(n: int, p: int) -> int:
    """Number of base-p digits of n (0 has none)."""
    length = 0
    while n:
        n //= p
        length += 1
    return length


def lucas_binom(z: PadicInt, n: int) -> FpElem:
    """binom(z, n) mod p as the digitwise product of small binomials."""
    if n < 0:
        return FpElem(z.p, 0)
    if digit_length(n, z.p) > z.precision:
        msg = f"binom(z, {n}) needs {digit_length(n, z.p)} digits of z, only {z.precision} known"
        logger.error(msg)
        raise InsufficientPrecision(msg)
    out, zr = 1, z.residue
    while n:
        zr, zd = divmod(zr, z.p)
        n, nd = divmod(n, z.p)
        if nd > zd:
            return FpElem(z.p, 0)
        out = out * math.comb(zd, nd) % z.p
    return FpElem(z.p, out)


def _check_depth(instance: GammaElement, _attribute: attrs.Attribute, value: int) -> None:
    if value < 1 or (instance.a.p == 2 and value < 2):  # noqa: PLR2004
        msg = f"Γ_k needs k ≥ 1 (k ≥ 2 when p = 2), got k = {value}"
        logger.error(msg)
        raise ValueError(msg)


@attrs.define(frozen=True)
class GammaElement:
    """g = 1 + p^k·a in Γ_k, addressed by its coordinate a."""

    a: PadicInt
    k: int = attrs.field(validator=_check_depth)

    @classmethod
    def from_coordinate(cls, a: int, p: int, k: int, precision: int = DEFAULT_DIGITS) -> Self:
        return cls(PadicInt.from_int(a, p, precision), k)

    @classmethod
    def identity(cls, p: int, k: int, precision: int = DEFAULT_DIGITS) -> Self:
        return cls.from_coordinate(0, p, k, precision)

    @property
    def p(self) -> int:
        return self.a.p

    def as_scalar(self) -> PadicInt:
        """The unit 1 + p^k a ∈ Z_p^×, known modulo p^(N+k)."""
        return PadicInt.from_int(1 + self.p**self.k * self.a.residue, self.p, self.a.precision + self.k)

    def _check_same_group(self, other: GammaElement) -> None:
        same_prime(self.p, other.p)
        if self.k != other.k:
            msg = f"Elements of different groups: {self.k = } {other.k = }"
            logger.error(msg)
            raise ContextMismatch(msg)

    def compose(self, other: GammaElement) -> GammaElement:
        """Coordinate of g·h is a + b + p^k·a·b."""
        self._check_same_group(other)
        n = min(self.a.precision, other.a.precision)
        a, b = self.a.residue, other.a.residue
        return GammaElement(PadicInt.from_int(a + b + self.p**self.k * a * b, self.p, n), self.k)

    def inverse(self) -> GammaElement:
        a = self.a.residue
        unit = pow(1 + self.p**self.k * a, -1, self.a.modulus)
        return GammaElement(PadicInt.from_int(-a * unit, self.p, self.a.precision), self.k)

    def power(self, m: int) -> GammaElement:
        if m < 0:
            return self.inverse().power(-m)
        scale = self.p**self.k
        modulus = self.a.modulus * scale
        unit = pow(1 + scale * self.a.residue, m, modulus)
        return GammaElement(PadicInt.from_int((unit - 1) // scale, self.p, self.a.precision), self.k)

    def p_power(self) -> GammaElement:
        return self.power(self.p)

    def depth(self) -> Valuation:
        """Largest i with g ∈ Γ_(k+i), censored at the coordinate precision."""
        return padic_val(self.a)

    def __str__(self) -> str:
        return f"1 + {self.p}^{self.k}·({self.a.residue})"


def gamma_samples(p: int, k: int, i: int, precision: int = DEFAULT_DIGITS) -> list[GammaElement]:
    """Sampled elements of Γ_(k+i) \\ Γ_(k+i+1): coordinates p^i·b for b ∈ {1..p−1} ∪ {1+p}."""
    units = [*range(1, p), 1 + p]
    return [GammaElement.from_coordinate(p**i * b, p, k, precision) for b in units]
