"""Censoring-aware valuations and three-valued verdicts.

A quantity known only modulo X^T (or p^N) that vanishes there has an unknown
valuation that is at least T. Such a value is *censored*: comparisons against
it can certify a lower bound but never refute one.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from enum import Enum
from fractions import Fraction

import attrs


class Verdict(Enum):
    CERTIFIED = "certified"
    REFUTED = "refuted"
    UNRESOLVED = "unresolved"

    @property
    def exit_code(self) -> int:
        return {Verdict.CERTIFIED: 0, Verdict.REFUTED: 2, Verdict.UNRESOLVED: 3}[self]

    @classmethod
    def combine(cls, verdicts: Iterable[Verdict]) -> Verdict:
        seen = set(verdicts)
        if cls.REFUTED in seen:
            return cls.REFUTED
        if cls.UNRESOLVED in seen:
            return cls.UNRESOLVED
        return cls.CERTIFIED


@attrs.define(frozen=True)
class Valuation:
    """An exact valuation, or the censored statement "≥ value"."""

    value: Fraction = attrs.field(converter=Fraction)
    censored: bool = attrs.field(default=False, validator=attrs.validators.instance_of(bool))

    @classmethod
    def exact(cls, value: Fraction | int) -> Valuation:
        return cls(value)

    @classmethod
    def at_least_bound(cls, bound: Fraction | int) -> Valuation:
        return cls(bound, censored=True)

    def at_least(self, bound: Fraction | float) -> Verdict:
        if self.value >= bound:
            return Verdict.CERTIFIED
        return Verdict.UNRESOLVED if self.censored else Verdict.REFUTED

    def shift(self, amount: Fraction | int) -> Valuation:
        return Valuation(self.value + amount, censored=self.censored)

    def scale(self, factor: Fraction | int) -> Valuation:
        return Valuation(self.value * factor, censored=self.censored)

    def to_json(self) -> str | int:
        text = str(self.value)
        if self.censored:
            return f">={text}"
        return int(self.value) if self.value.denominator == 1 else text

    def __str__(self) -> str:
        return f"≥ {self.value}" if self.censored else str(self.value)


def min_valuation(vals: Iterable[Valuation]) -> Valuation:
    """Minimum of valuations; exact as soon as one exact value is the smallest."""
    vals = list(vals)
    if not vals:
        msg = "min_valuation needs at least one value"
        raise ValueError(msg)
    low = min(v.value for v in vals)
    censored = all(v.censored for v in vals if v.value == low)
    return Valuation(low, censored=censored)


def holder_bound(p: int, lam: float, i: int, mu: float) -> Fraction | float:
    """p^λ·p^i + μ, kept exact whenever λ and μ are integral."""
    if math.isinf(lam):
        return mu if lam < 0 else math.inf
    if float(lam).is_integer() and float(mu).is_integer():
        return Fraction(p) ** (int(lam) + i) + int(mu)
    return p ** (lam + i) + mu
