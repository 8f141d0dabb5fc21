"""(φ,Γ)-modules over E given by a Frobenius matrix P and a cocycle g ↦ G_g."""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from fractions import Fraction
from itertools import pairwise
import sys

if sys.version_info >= (3, 11):
    from typing import Self
else:  # pragma: no cover
    from typing_extensions import Self

import attrs

from superholder.core.arith import GammaElement, gamma_samples, same_prime
from superholder.core.config import DEFAULT_DIGITS, DEFAULT_I_MAX
from superholder.core.errors import (
    ContextMismatch,
    NotInvertible,
    PreconditionViolation,
    RPreconditionFailed,
    TooFewPoints,
)
from superholder.core.logger import get_fn_name, logger
from superholder.core.mahler import ShProfile, depth_floors, fit_asymptotic
from superholder.core.puiseux import PuiseuxSeries, gamma_act
from superholder.core.tate_colmez import agree, derivative_window
from superholder.core.valuation import Valuation, Verdict, min_valuation


def _rectangular(_instance: object, _attribute: attrs.Attribute, rows: tuple) -> None:
    if not rows or any(len(row) != len(rows) for row in rows):
        msg = "MatrixSeries must be a non-empty square array"
        logger.error(msg)
        raise ContextMismatch(msg)


@attrs.define(frozen=True)
class MatrixSeries:
    rows: tuple[tuple[PuiseuxSeries, ...], ...] = attrs.field(
        converter=lambda rows: tuple(tuple(row) for row in rows), validator=_rectangular
    )

    @classmethod
    def identity(cls, p: int, d: int, prec: Fraction | int) -> Self:
        return cls(
            tuple(
                tuple(PuiseuxSeries.constant(p, int(i == j), prec) for j in range(d))
                for i in range(d)
            )
        )

    @classmethod
    def scalar(cls, f: PuiseuxSeries) -> Self:
        return cls(((f,),))

    @property
    def d(self) -> int:
        return len(self.rows)

    @property
    def p(self) -> int:
        return self.rows[0][0].p

    @property
    def prec(self) -> Fraction:
        return min(e.prec for row in self.rows for e in row)

    def entries(self) -> Iterable[PuiseuxSeries]:
        return (e for row in self.rows for e in row)

    def val(self) -> Valuation:
        return min_valuation(e.val() for e in self.entries())

    def map(self, fn: Callable[[PuiseuxSeries], PuiseuxSeries]) -> MatrixSeries:
        return MatrixSeries(tuple(tuple(fn(e) for e in row) for row in self.rows))

    def frobenius(self) -> MatrixSeries:
        return self.map(PuiseuxSeries.frobenius)

    def act(self, g: GammaElement) -> MatrixSeries:
        return self.map(lambda e: gamma_act(g, e))

    def shift(self, exponent: Fraction | int) -> MatrixSeries:
        return self.map(lambda e: e.shift(exponent))

    def divide_by_monomial(self, exponent: Fraction | int) -> MatrixSeries:
        return self.map(lambda e: e.divide_by_monomial(exponent))

    def truncate(self, prec: Fraction | int) -> MatrixSeries:
        return self.map(lambda e: e.truncate(prec))

    def _check(self, other: MatrixSeries) -> None:
        same_prime(self.p, other.p)
        if self.d != other.d:
            msg = f"Rank mismatch: {self.d} vs {other.d}"
            logger.error(msg)
            raise ContextMismatch(msg)

    def __add__(self, other: MatrixSeries) -> MatrixSeries:
        self._check(other)
        return MatrixSeries(
            tuple(tuple(a + b for a, b in zip(r, s, strict=True)) for r, s in zip(self.rows, other.rows, strict=True))
        )

    def __sub__(self, other: MatrixSeries) -> MatrixSeries:
        return self + other.map(lambda e: -e)

    def __mul__(self, other: MatrixSeries | PuiseuxSeries) -> MatrixSeries:
        if isinstance(other, PuiseuxSeries):
            return self.map(lambda e: e * other)
        self._check(other)
        n = self.d
        return MatrixSeries(
            tuple(
                tuple(
                    _sum(self.rows[i][m] * other.rows[m][j] for m in range(n)) for j in range(n)
                )
                for i in range(n)
            )
        )

    def apply(self, x: Sequence[PuiseuxSeries]) -> tuple[PuiseuxSeries, ...]:
        """Matrix–vector product."""
        if len(x) != self.d:
            msg = f"Vector of length {len(x)} against a rank-{self.d} matrix"
            logger.error(msg)
            raise ContextMismatch(msg)
        return tuple(_sum(a * b for a, b in zip(row, x, strict=True)) for row in self.rows)

    def minor(self, i: int, j: int) -> MatrixSeries:
        return MatrixSeries(
            tuple(
                tuple(e for c, e in enumerate(row) if c != j)
                for r, row in enumerate(self.rows)
                if r != i
            )
        )

    def det(self) -> PuiseuxSeries:
        """Cofactor expansion along the first row."""
        if self.d == 1:
            return self.rows[0][0]
        terms = []
        for j, e in enumerate(self.rows[0]):
            cofactor = e * self.minor(0, j).det()
            terms.append(cofactor if j % 2 == 0 else -cofactor)
        return _sum(terms)

    def adjugate(self) -> MatrixSeries:
        """ᵗco(Q), so that Q·adj(Q) = det(Q)·Id."""
        if self.d == 1:
            return MatrixSeries.identity(self.p, 1, self.prec)
        return MatrixSeries(
            tuple(
                tuple(
                    self.minor(j, i).det() if (i + j) % 2 == 0 else -self.minor(j, i).det()
                    for j in range(self.d)
                )
                for i in range(self.d)
            )
        )

    def inverse_scaled(self) -> tuple[Fraction, MatrixSeries]:
        """(e, W) with Q^(−1) = X^(−e)·W and W integral; det(Q) must be X^e times a unit."""
        det = self.det()
        v = det.val()
        if v.censored:
            msg = f"Determinant vanishes to precision {det.prec}"
            logger.error(msg)
            raise NotInvertible(msg)
        unit = det.divide_by_monomial(v.value)
        return v.value, self.adjugate() * unit.inverse()

    def inverse(self) -> MatrixSeries:
        e, w = self.inverse_scaled()
        if e:
            msg = f"det has valuation {e}; the inverse is not integral"
            logger.error(msg)
            raise NotInvertible(msg)
        return w

    def is_identity(self) -> bool:
        return (self - MatrixSeries.identity(self.p, self.d, self.prec)).val().censored


def _sum(items: Iterable[PuiseuxSeries]) -> PuiseuxSeries:
    items = list(items)
    total = items[0]
    for item in items[1:]:
        total = total + item
    return total


CocycleRule = Callable[[GammaElement], MatrixSeries]


@attrs.define(frozen=True)
class PhiGammaModule:
    """P = Mat φ and G_g = Mat g on a basis; the cocycle is a rule or a table keyed by coordinate."""

    P: MatrixSeries
    k: int = attrs.field(validator=attrs.validators.ge(1))
    rule: CocycleRule | None = attrs.field(default=None, eq=False)
    table: Mapping[int, MatrixSeries] = attrs.field(factory=dict)
    digits: int = DEFAULT_DIGITS

    @property
    def p(self) -> int:
        return self.P.p

    @property
    def d(self) -> int:
        return self.P.d

    def G(self, g: GammaElement) -> MatrixSeries:  # noqa: N802
        if g.k != self.k or g.p != self.p:
            msg = f"g = {g} is not addressed in Γ_{self.k} over p = {self.p}"
            logger.error(msg)
            raise ContextMismatch(msg)
        if self.rule is not None:
            return self.rule(g)
        key = g.a.with_precision(min(self.digits, g.a.precision)).residue
        if key not in self.table:
            msg = f"g = {g} is not in the cocycle table"
            logger.error(msg)
            raise PreconditionViolation(msg)
        return self.table[key]

    def tabulate(self, samples: Iterable[GammaElement]) -> PhiGammaModule:
        """The same module with its cocycle materialized on `samples`."""
        table = {g.a.with_precision(min(self.digits, g.a.precision)).residue: self.G(g) for g in samples}
        return PhiGammaModule(self.P, self.k, None, table, self.digits)


def trivial_module(p: int, d: int, k: int, prec: Fraction | int) -> PhiGammaModule:
    ident = MatrixSeries.identity(p, d, prec)
    return PhiGammaModule(ident, k, lambda _g: ident)


def _conjugate(u_inv: tuple[Fraction, MatrixSeries], image: MatrixSeries) -> MatrixSeries:
    e, w = u_inv
    product = w * image
    if e == 0:
        return product
    try:
        return product.divide_by_monomial(e)
    except ZeroDivisionError as err:
        msg = f"U^(-1)·σ(U) is not integral (det(U) has valuation {e})"
        logger.error(msg)
        raise NotInvertible(msg) from err


def gauge_module(U: MatrixSeries, k: int) -> PhiGammaModule:  # noqa: N803
    """P = U^(−1)φ(U) and G_g = U^(−1)g(U): the trivial module in the basis U."""
    logger.info(f"{get_fn_name()}. {U.d = } {k = }")
    u_inv = U.inverse_scaled()
    P = _conjugate(u_inv, U.frobenius())  # noqa: N806

    def rule(g: GammaElement) -> MatrixSeries:
        return _conjugate(u_inv, U.act(g))

    return PhiGammaModule(P, k, rule)


@attrs.define(frozen=True)
class ModuleReport:
    """Residual valuations per sample; a residual vanishes when it is censored at ≥ min_prec."""

    cocycle: tuple[tuple[int, int, Valuation], ...]
    commutation: tuple[tuple[int, Valuation], ...]
    determinants: tuple[tuple[int, Valuation], ...] = ()
    min_prec: Fraction = attrs.field(default=Fraction(1), converter=Fraction)

    def _residual_verdict(self, v: Valuation) -> Verdict:
        if not v.censored:
            return Verdict.REFUTED
        return v.at_least(self.min_prec)

    @staticmethod
    def _unit_verdict(v: Valuation) -> Verdict:
        if v == Valuation.exact(0):
            return Verdict.CERTIFIED
        # a censored "≥ 0" says nothing about the constant term
        if v.censored and v.value == 0:
            return Verdict.UNRESOLVED
        return Verdict.REFUTED

    @property
    def verdict(self) -> Verdict:
        vals = [v for *_, v in self.cocycle] + [v for _, v in self.commutation]
        return Verdict.combine(
            [self._residual_verdict(v) for v in vals]
            + [self._unit_verdict(v) for _, v in self.determinants]
        )


def validate_module(
    D: PhiGammaModule,  # noqa: N803
    g_samples: Sequence[GammaElement],
    min_prec: Fraction | int = 1,
) -> ModuleReport:
    """Residuals of G_(gh) = G_g·g(G_h) and P·φ(G_g) = G_g·g(P), and val_X det(G_g) = 0.

    Residuals must vanish modulo X^min_prec at least; vanishing below that is unresolved.
    """
    logger.info(f"{get_fn_name()}. {len(g_samples) = } {min_prec = }")
    commutation, determinants = [], []
    for g in g_samples:
        G = D.G(g)  # noqa: N806
        determinants.append((g.a.residue, G.det().val()))
        residual = D.P * G.frobenius() - G * D.P.act(g)
        commutation.append((g.a.residue, residual.val()))
    cocycle = []
    for g, h in pairwise(g_samples):
        try:
            lhs = D.G(g.compose(h))
        except PreconditionViolation:
            continue
        rhs = D.G(g) * D.G(h).act(g)
        cocycle.append((g.a.residue, h.a.residue, (lhs - rhs).val()))
    return ModuleReport(tuple(cocycle), tuple(commutation), tuple(determinants), Fraction(min_prec))


def matrix_floors(
    D: PhiGammaModule,  # noqa: N803
    i_max: int = DEFAULT_I_MAX,
    *,
    inverse: bool = False,
) -> dict[int, Valuation]:
    """w(i) = min over sampled g ∈ Γ_(k+i) of val_X(G_g − Id) (or of G_g^(−1) − Id)."""

    def displacement(g: GammaElement) -> Valuation:
        G = D.G(g)  # noqa: N806
        if inverse:
            G = G.inverse()  # noqa: N806
        return (G - MatrixSeries.identity(D.p, D.d, G.prec)).val()

    return depth_floors(D.p, D.k, i_max, displacement, D.digits)


def matrix_sh_profile(
    D: PhiGammaModule,  # noqa: N803
    i_max: int = DEFAULT_I_MAX,
    *,
    inverse: bool = False,
) -> ShProfile:
    floors = matrix_floors(D, i_max, inverse=inverse)
    return fit_asymptotic(floors, D.p, D.k, Fraction(0), D.P.prec)


@attrs.define(frozen=True)
class VectorProfile:
    floors: dict[int, Valuation]
    profile: ShProfile | None
    m_hat: int | None


def vector_act(D: PhiGammaModule, g: GammaElement, x: Sequence[PuiseuxSeries]) -> tuple[PuiseuxSeries, ...]:  # noqa: N803
    """g·x = G_g·g(x)."""
    return D.G(g).apply(tuple(gamma_act(g, e) for e in x))


def vector_sh_profile(
    D: PhiGammaModule,  # noqa: N803
    x: Sequence[PuiseuxSeries],
    i_max: int = DEFAULT_I_MAX,
) -> VectorProfile:
    logger.info(f"{get_fn_name()}. {len(x) = } {i_max = }")

    def displacement(g: GammaElement) -> Valuation:
        moved = vector_act(D, g, x)
        return min_valuation((a - b).val() for a, b in zip(moved, x, strict=True))

    floors = depth_floors(D.p, D.k, i_max, displacement, D.digits)
    window = max(derivative_window(e) for e in x)
    try:
        profile = fit_asymptotic(floors, D.p, D.k, window, min(e.prec for e in x))
    except TooFewPoints:
        return VectorProfile(floors, None, None)
    m_hat = round(D.k - profile.lam) if math.isfinite(profile.lam) else None
    return VectorProfile(floors, profile, m_hat)


def minimal_r(D: PhiGammaModule) -> int:  # noqa: N803
    """Smallest r ≥ 1 with X^r·P^(−1) ∈ X·M_d(E⁺)."""
    e, w = D.P.inverse_scaled()
    return max(1, math.ceil(1 + e - w.val().value))


@attrs.define(frozen=True)
class FixedPointResult:
    partial_sum: MatrixSeries
    target: MatrixSeries
    term_vals: tuple[Valuation, ...]
    attained: Fraction

    @property
    def agrees(self) -> bool:
        return all(
            agree(a.truncate(self.attained), b.truncate(self.attained))
            for a, b in zip(self.partial_sum.entries(), self.target.entries(), strict=True)
        )


def _frobenius_power(m: MatrixSeries, i: int) -> MatrixSeries:
    for _ in range(i):
        m = m.frobenius()
    return m


def fixed_point_series(
    D: PhiGammaModule,  # noqa: N803
    g: GammaElement,
    r: int,
    i_max: int = DEFAULT_I_MAX,
) -> FixedPointResult:
    """Σ_(i ≤ i_max) Pφ(P)⋯φ^(i−1)(P)·φ^i(f(g))·φ^(i−1)(Q_g)⋯Q_g against H_g = X^(−r)(G_g − Id).

    Here f(g) = X^(−r)(P·g(P)^(−1) − Id) and Q_g = X^(r(p−1))·g(P)^(−1).
    """
    logger.info(f"{get_fn_name()}. {r = } {i_max = }")
    p, d = D.p, D.d
    e_p, w_p = D.P.inverse_scaled()
    if r - e_p + w_p.val().value < 1:
        msg = f"X^{r}·P^(-1) is not in X·M_{d}(E+)"
        logger.error(msg)
        raise RPreconditionFailed(msg)
    G = D.G(g)  # noqa: N806
    ident = MatrixSeries.identity(p, d, G.prec)
    displacement = (G - ident).val()
    if displacement.value < r:
        msg = f"val_X(G_g - Id) = {displacement} < r = {r}"
        logger.error(msg)
        raise RPreconditionFailed(msg)
    target = (G - ident).divide_by_monomial(r)

    e_g, w_g = D.P.act(g).inverse_scaled()
    q_shift = r * (p - 1) - e_g
    Q = w_g.shift(q_shift) if q_shift >= 0 else w_g.divide_by_monomial(-q_shift)  # noqa: N806
    pw = D.P * w_g
    f = (pw - MatrixSeries.identity(p, d, pw.prec).shift(e_g)).divide_by_monomial(e_g + r)

    total = f
    term_vals = [f.val()]
    left = MatrixSeries.identity(p, d, f.prec * p ** (i_max + 1))
    right = MatrixSeries.identity(p, d, f.prec * p ** (i_max + 1))
    for i in range(1, i_max + 1):
        left = left * _frobenius_power(D.P, i - 1)
        right = _frobenius_power(Q, i - 1) * right
        term = left * _frobenius_power(f, i) * right
        term_vals.append(term.val())
        total = total + term
    tail = Fraction(p ** (i_max + 1) - 1, p - 1)
    attained = min(total.prec, target.prec, tail)
    return FixedPointResult(total, target, tuple(term_vals), attained)


def frobenius_power_bound(D: PhiGammaModule, g: GammaElement) -> tuple[int, Verdict]:  # noqa: N803
    """With val(G_g − Id) ≥ p^ℓ, check val(G_(g^p) − Id) ≥ min(p^(ℓ+1), p^(depth of g))."""
    ident = MatrixSeries.identity(D.p, D.d, D.P.prec)
    v = (D.G(g) - ident).val()
    if v.censored or v.value < 1:
        msg = f"g must move the basis by val ≥ 1 to start the induction, got {v}"
        logger.error(msg)
        raise PreconditionViolation(msg)
    ell = 0
    while D.p ** (ell + 1) <= v.value:
        ell += 1
    depth = g.k + (g.depth().value if not g.depth().censored else g.a.precision)
    bound = min(D.p ** (ell + 1), D.p**depth)
    return ell, (D.G(g.p_power()) - ident).val().at_least(bound)


def module_samples(D: PhiGammaModule, i_max: int = DEFAULT_I_MAX) -> list[GammaElement]:  # noqa: N803
    return [g for i in range(i_max + 1) for g in gamma_samples(D.p, D.k, i, D.digits)]
