"""Mahler calculus for continuous functions Z_p → Ẽ⁺ and super-Hölder profiles.

Functions are tables: either of a locally constant function of level t
(f(z) = table[z mod p^t]) or of samples f(0), …, f(len − 1).
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from fractions import Fraction
import sys

if sys.version_info >= (3, 11):
    from typing import Self
else:  # pragma: no cover
    from typing_extensions import Self

import attrs
import numpy as np
import polars as pl

from superholder.core.arith import GammaElement, PadicInt, gamma_samples, lucas_binom
from superholder.core.config import DEFAULT_DIGITS, DEFAULT_I_MAX
from superholder.core.errors import TableTooShort, TooFewPoints
from superholder.core.logger import get_fn_name, logger
from superholder.core.puiseux import PuiseuxSeries, gamma_act
from superholder.core.valuation import Valuation, Verdict, holder_bound, min_valuation


@attrs.define(frozen=True)
class ContinuousFn:
    p: int
    t: int = attrs.field(validator=attrs.validators.ge(0))
    table: tuple[PuiseuxSeries, ...] = attrs.field(converter=tuple)
    locally_constant: bool = True

    def __attrs_post_init__(self) -> None:
        if not self.table:
            msg = "A continuous function needs at least one tabulated value"
            logger.error(msg)
            raise TableTooShort(msg)
        if self.locally_constant and len(self.table) != self.p**self.t:
            msg = f"A level-{self.t} table needs {self.p**self.t} values, got {len(self.table)}"
            logger.error(msg)
            raise TableTooShort(msg)
        if any(v.p != self.p for v in self.table):
            msg = f"Table values must all live over p = {self.p}"
            logger.error(msg)
            raise ValueError(msg)

    @classmethod
    def from_callable(
        cls, p: int, t: int, fn: Callable[[int], PuiseuxSeries], *, locally_constant: bool = True
    ) -> Self:
        """Tabulate `fn` on 0..p^t − 1; `t` is the caller's declared level of local constancy."""
        return cls(p, t, tuple(fn(z) for z in range(p**t)), locally_constant)

    def __call__(self, z: int | PadicInt) -> PuiseuxSeries:
        z = int(z)
        if self.locally_constant:
            return self.table[z % len(self.table)]
        if not 0 <= z < len(self.table):
            msg = f"f({z}) is outside the sampled range 0..{len(self.table) - 1}"
            logger.error(msg)
            raise TableTooShort(msg)
        return self.table[z]

    @property
    def prec(self) -> Fraction:
        return min(v.prec for v in self.table)

    def value_floor(self) -> Valuation:
        """inf_z val_X(f(z)) over the table."""
        return min_valuation(v.val() for v in self.table)

    def __mul__(self, other: ContinuousFn) -> ContinuousFn:
        """Pointwise product, on the common tabulated range."""
        size = min(len(self.table), len(other.table))
        both_lc = self.locally_constant and other.locally_constant
        if both_lc:
            t = max(self.t, other.t)
            return ContinuousFn(
                self.p, t, tuple(self(z) * other(z) for z in range(self.p**t)), locally_constant=True
            )
        return ContinuousFn(
            self.p,
            min(self.t, other.t),
            tuple(self(z) * other(z) for z in range(size)),
            locally_constant=False,
        )


@attrs.define(frozen=True)
class MahlerExpansion:
    """m_0, …, m_{n_max}; `complete` marks expansions known to vanish beyond n_max."""

    p: int
    coeffs: tuple[PuiseuxSeries, ...] = attrs.field(converter=tuple)
    complete: bool = False

    @property
    def n_max(self) -> int:
        return len(self.coeffs) - 1


def mahler_coeffs(f: ContinuousFn, n_max: int | None = None) -> MahlerExpansion:
    """m_n = (Δ^n f)(0) by iterated forward differences."""
    if n_max is None:
        n_max = len(f.table) - 1
    if not f.locally_constant and n_max >= len(f.table):
        msg = f"m_{n_max} needs f(0..{n_max}) but only {len(f.table)} samples are tabulated"
        logger.error(msg)
        raise TableTooShort(msg)
    row = [f(z) for z in range(n_max + 1)]
    coeffs = []
    while row:
        coeffs.append(row[0])
        row = [b - a for a, b in zip(row, row[1:], strict=False)]
    complete = f.locally_constant and n_max >= f.p**f.t - 1
    logger.debug(f"{get_fn_name()}. {n_max = } {complete = }")
    return MahlerExpansion(f.p, tuple(coeffs), complete)


def mahler_eval(e: MahlerExpansion, z: PadicInt | int) -> PuiseuxSeries:
    """Σ_n binom(z, n)·m_n over the stored coefficients."""
    if isinstance(z, int):
        z = PadicInt.from_int(z, e.p, DEFAULT_DIGITS)
    prec = min(c.prec for c in e.coeffs)
    total = PuiseuxSeries.zero(e.p, prec)
    for n, m_n in enumerate(e.coeffs):
        b = lucas_binom(z, n)
        if b:
            total = total + m_n.scale(b)
    return total


def sup_val(e: MahlerExpansion) -> Valuation:
    return min_valuation(c.val() for c in e.coeffs)


@attrs.define(frozen=True)
class MahlerVerdict:
    verdict: Verdict
    witness: tuple[int, int] | None = None
    n_max: int = 0


def _top_depth(n: int, p: int) -> int:
    """Largest i with p^i ≤ n (n ≥ 1)."""
    i = 0
    while p ** (i + 1) <= n:
        i += 1
    return i


def sh_test_mahler(e: MahlerExpansion, lam: float, mu: float) -> MahlerVerdict:
    """val(m_n) ≥ p^λ·p^i + μ whenever n ≥ p^i, over the stored coefficients.

    A certificate is relative to n_max and to the coefficient precision.
    """
    verdicts = []
    for n in range(1, e.n_max + 1):
        i = _top_depth(n, e.p)
        verdict = e.coeffs[n].val().at_least(holder_bound(e.p, lam, i, mu))
        if verdict is Verdict.REFUTED:
            return MahlerVerdict(Verdict.REFUTED, (n, i), e.n_max)
        verdicts.append(verdict)
    return MahlerVerdict(Verdict.combine(verdicts), None, e.n_max)


def w_test_mahler(e: MahlerExpansion, lam: float, mu: float) -> MahlerVerdict:
    """The Amice-type criterion val(m_n) ≥ p^λ·n + μ for n ≥ 1 (m_0 is unconstrained)."""
    verdicts = []
    scale = holder_bound(e.p, lam, 0, 0)
    for n in range(1, e.n_max + 1):
        verdict = e.coeffs[n].val().at_least(scale * n + mu)
        if verdict is Verdict.REFUTED:
            return MahlerVerdict(Verdict.REFUTED, (n, _top_depth(n, e.p)), e.n_max)
        verdicts.append(verdict)
    return MahlerVerdict(Verdict.combine(verdicts), None, e.n_max)


@attrs.define(frozen=True)
class ShProfile:
    p: int
    floors: dict[int, Valuation]
    lam: float
    mu: float
    stable: bool
    per_gap: tuple[float, ...] = ()
    certified_to: Fraction | None = None

    def to_frame(self) -> pl.DataFrame:
        depths = sorted(self.floors)
        return pl.DataFrame(
            {
                "depth": depths,
                "floor": [float(self.floors[i].value) for i in depths],
                "censored": [self.floors[i].censored for i in depths],
                "bound": [float(holder_bound(self.p, self.lam, i, self.mu)) for i in depths],
            }
        )

    def passes(self, lam: float, mu: float) -> Verdict:
        return check_floors(self.floors, self.p, lam, mu)


def _as_valuation(w: Valuation | Fraction | int) -> Valuation:
    return w if isinstance(w, Valuation) else Valuation.exact(w)


def _gap_exponent(gap: Fraction, span: int, p: int) -> float:
    """log_p(gap/span), exact when the ratio is a power of p; −inf for nonpositive gaps."""
    if gap <= 0:
        return -math.inf
    ratio = Fraction(gap) / span
    e = 0
    rest = ratio
    while rest.denominator == 1 and rest.numerator % p == 0:
        rest /= p
        e += 1
    while rest.numerator == 1 and rest.denominator % p == 0:
        rest *= p
        e -= 1
    if rest == 1:
        return float(e)
    return math.log(ratio.numerator, p) - math.log(ratio.denominator, p)


def sh_profile_fit(
    w: Mapping[int, Valuation | Fraction | int], p: int, certified_to: Fraction | None = None
) -> ShProfile:
    """Median fit of λ and μ to w(i) ≈ p^λ·p^i + μ over the uncensored floors."""
    floors = {i: _as_valuation(v) for i, v in w.items()}
    exact = sorted(i for i, v in floors.items() if not v.censored)
    if len(exact) < 2:  # noqa: PLR2004
        msg = f"Need at least 2 uncensored floors to fit a profile, got {len(exact)}"
        logger.error(msg)
        raise TooFewPoints(msg)
    per_gap = tuple(
        _gap_exponent(floors[j].value - floors[i].value, p**j - p**i, p)
        for i, j in zip(exact, exact[1:], strict=False)
    )
    lam = float(np.median(per_gap))
    if math.isfinite(lam) and abs(lam - round(lam)) < 1e-9:  # noqa: PLR2004
        lam = float(round(lam))
    mu = float(np.median([float(floors[i].value - holder_bound(p, lam, i, 0)) for i in exact]))
    if math.isfinite(mu) and abs(mu - round(mu)) < 1e-9:  # noqa: PLR2004
        mu = float(round(mu))
    finite = [g for g in per_gap if math.isfinite(g)]
    stable = len(finite) == len(per_gap) and max(finite) - min(finite) <= 1
    logger.debug(f"{get_fn_name()}. {lam = } {mu = } {stable = }")
    return ShProfile(p, floors, lam, mu, stable, per_gap, certified_to)


def fit_asymptotic(
    floors: Mapping[int, Valuation],
    p: int,
    k: int,
    window: Fraction,
    certified_to: Fraction | None = None,
) -> ShProfile:
    """Fit only the depths with p^(k+i) > 2·window, falling back to every uncensored floor."""
    usable = {i: v for i, v in floors.items() if p ** (k + i) > 2 * window and not v.censored}
    if len(usable) < 2:  # noqa: PLR2004
        usable = {i: v for i, v in floors.items() if not v.censored}
    return attrs.evolve(sh_profile_fit(usable, p, certified_to), floors=dict(floors))


def check_floors(floors: Mapping[int, Valuation], p: int, lam: float, mu: float) -> Verdict:
    """Whether every floor satisfies w(i) ≥ p^λ·p^i + μ."""
    return Verdict.combine(v.at_least(holder_bound(p, lam, i, mu)) for i, v in floors.items())


def depth_floors(
    p: int,
    k: int,
    i_max: int,
    displacement: Callable[[GammaElement], Valuation],
    digits: int = DEFAULT_DIGITS,
) -> dict[int, Valuation]:
    """w(i) = min over sampled g ∈ Γ_(k+i) of displacement(g), made nondecreasing by suffix minima."""
    raw = {
        i: min_valuation(displacement(g) for g in gamma_samples(p, k, i, digits))
        for i in range(i_max + 1)
    }
    return {i: min_valuation(raw[j] for j in range(i, i_max + 1)) for i in raw}


def table_floors(f: ContinuousFn, i_max: int) -> dict[int, Valuation]:
    """w(i) = min val(f(x) − f(y)) over tabulated x ≢ y with val_p(x − y) ≥ i."""
    size = len(f.table)
    out = {}
    for i in range(i_max + 1):
        step = f.p**i
        vals = [
            (f.table[x + d] - f.table[x]).val()
            for d in range(step, size, step)
            for x in range(size - d)
        ]
        out[i] = min_valuation(vals) if vals else Valuation.at_least_bound(f.prec)
    return out


def product_parameters(
    lam: float, mu: float, nu: float, c: Fraction | float, d: Fraction | float
) -> tuple[float, float]:
    """(λ, min(μ + d, ν + c)) for f ∈ H^{λ,μ} with values ≥ c and g ∈ H^{λ,ν} with values ≥ d."""
    return lam, min(mu + float(d), nu + float(c))


@attrs.define(frozen=True)
class OrbitFn:
    """The orbit a ↦ (1 + p^k a)·m, tabulated, with its Γ_k depth floors."""

    source: PuiseuxSeries
    k: int
    fn: ContinuousFn
    floors: dict[int, Valuation]


def orbit_floors(
    m: PuiseuxSeries, k: int, i_max: int = DEFAULT_I_MAX, digits: int = DEFAULT_DIGITS
) -> dict[int, Valuation]:
    return depth_floors(m.p, k, i_max, lambda g: (gamma_act(g, m) - m).val(), digits)


def orbit_fn(
    m: PuiseuxSeries, k: int, t: int, i_max: int = DEFAULT_I_MAX, digits: int = DEFAULT_DIGITS
) -> OrbitFn:
    logger.info(f"{get_fn_name()}. {k = } {t = } {i_max = }")
    table = tuple(
        gamma_act(GammaElement.from_coordinate(a, m.p, k, digits), m) for a in range(m.p**t)
    )
    fn = ContinuousFn(m.p, t, table, locally_constant=False)
    return OrbitFn(m, k, fn, orbit_floors(m, k, i_max, digits))
