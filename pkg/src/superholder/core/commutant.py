"""Series commuting with the Z_p^×-action, and the solver u = γ_b(X^(p^n))."""

from __future__ import annotations

import math
from collections.abc import Sequence
from fractions import Fraction

import attrs

from superholder.core.arith import PadicInt, digit_length
from superholder.core.config import DEFAULT_DIGITS
from superholder.core.errors import InsufficientPrecision, NotCommutant, SubstitutionDiverges
from superholder.core.logger import get_fn_name, logger
from superholder.core.puiseux import PuiseuxSeries, gamma_act, gamma_series, substitute
from superholder.core.valuation import Verdict


def default_unit_samples(p: int, digits: int = DEFAULT_DIGITS) -> list[PadicInt]:
    """r·s for r ∈ {1, …, p−1} and s ∈ {1, 1+p, 1+p²}."""
    return [
        PadicInt.from_int(r * s, p, digits) for r in range(1, p) for s in (1, 1 + p, 1 + p**2)
    ]


@attrs.define(frozen=True)
class CommuteReport:
    consistent: bool
    checked_to: Fraction
    a: PadicInt | None = None
    exponent: Fraction | None = None

    @property
    def verdict(self) -> Verdict:
        return Verdict.CERTIFIED if self.consistent else Verdict.REFUTED


def commutator_residual(u: PuiseuxSeries, a: PadicInt) -> PuiseuxSeries:
    """u∘γ_a − γ_a∘u, modulo the precision both sides are known to."""
    v = u.val()
    if v.censored or v.value <= 0:
        msg = f"check_commute needs val_X(u) > 0, got {v}"
        logger.error(msg)
        raise SubstitutionDiverges(msg)
    acted = gamma_act(a, u)
    gamma_prec = math.ceil(u.prec / v.value) + 1
    composed = substitute(gamma_series(a, gamma_prec, u.p), u)
    prec = min(acted.prec, composed.prec)
    return acted.truncate(prec) - composed.truncate(prec)


def check_commute(u: PuiseuxSeries, a_samples: Sequence[PadicInt] | None = None) -> CommuteReport:
    """Compare u∘γ_a with γ_a∘u for every sampled unit a; stop at the first disagreement."""
    samples = default_unit_samples(u.p) if a_samples is None else list(a_samples)
    logger.info(f"{get_fn_name()}. {len(samples) = }")
    checked_to = u.prec
    for a in samples:
        residual = commutator_residual(u, a)
        checked_to = min(checked_to, residual.prec)
        if not residual.is_zero():
            return CommuteReport(False, residual.prec, a, residual.val().value)
    return CommuteReport(True, checked_to)


@attrs.define(frozen=True)
class CommutantSolution:
    """u = γ_b(X^(p^n)), verified modulo X^residual_prec."""

    b: PadicInt
    n: int
    residual_prec: Fraction

    def __attrs_post_init__(self) -> None:
        if not self.b.is_unit():
            msg = "Commutant solutions have b ∈ Z_p^×"
            raise ValueError(msg)

    @property
    def b_digits(self) -> tuple[int, ...]:
        return self.b.digits


def _p_power_exponent(v: Fraction, p: int) -> int | None:
    """n with v = p^n, or None."""
    n = 0
    while v.denominator == 1 and v.numerator % p == 0:
        v /= p
        n += 1
    while v.numerator == 1 and v.denominator % p == 0:
        v *= p
        n -= 1
    return n if v == 1 else None


def digit_recover(f: PuiseuxSeries, digit_count: int) -> PadicInt:
    """b mod p^N from f = γ_b(X): digit_i(b) is the coefficient of X^(p^i)."""
    if f.prec <= f.p ** (digit_count - 1):
        msg = f"Recovering {digit_count} digits needs precision > {f.p}^{digit_count - 1}, got {f.prec}"
        logger.error(msg)
        raise InsufficientPrecision(msg)
    digits = [f.coefficient(f.p**i) for i in range(digit_count)]
    return PadicInt.from_digits(digits, f.p)


def _reject(msg: str, reason: str, witness: object | None = None) -> NotCommutant:
    logger.error(msg)
    return NotCommutant(msg, reason, witness)


def solve_commutant(u: PuiseuxSeries, digit_count: int = 6) -> CommutantSolution:
    logger.info(f"{get_fn_name()}. {digit_count = }")
    v = u.val()
    n = None if v.censored or v.value <= 0 else _p_power_exponent(v.value, u.p)
    if n is None:
        raise _reject(f"val_X(u) = {v} is not a power of {u.p}", "valuation")
    f = u.frobenius_power(-n)
    if f.term_level:
        raise _reject(
            f"u(X^(1/p^n)) still has exponents with denominator {f.p**f.term_level}",
            "level",
            f.term_level,
        )
    # γ_b(X) mod X^T depends on exactly the digits read off X^(p^i), p^i < T
    readable = digit_length(math.ceil(f.prec) - 1, f.p)
    if readable == 0:
        raise _reject(f"Precision {f.prec} leaves no digit of b to read", "precision")
    b = digit_recover(f, readable)
    if not b.is_unit():
        raise _reject("The X-coefficient of u(X^(1/p^n)) vanishes", "digit", 1)
    residual = f - gamma_series(b, f.prec, f.p)
    if not residual.is_zero():
        witness = residual.val().value * Fraction(f.p) ** n
        raise _reject(f"u differs from γ_b(X^(p^n)) at X^{witness}", "residual", witness)
    b = b.with_precision(min(digit_count, readable))
    return CommutantSolution(b, n, f.prec * Fraction(f.p) ** n)
