"""ψ, the (1+X)^i decomposition of Ẽ⁺ over E⁺_0, Tate traces and decompletion.

Everything here works on numerator maps: a series at level L is read as a
power series in Y = X^(1/p^L), and one ψ-split of it is a split in Y.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from fractions import Fraction

import attrs

from superholder.core.arith import PadicInt, digit_length
from superholder.core.config import DEFAULT_DIGITS, DEFAULT_I_MAX, DEFAULT_TOWER_DEPTH
from superholder.core.errors import NotPsiCompatible, PreconditionViolation, TooFewPoints
from superholder.core.logger import get_fn_name, logger
from superholder.core.mahler import ShProfile, fit_asymptotic, orbit_floors
from superholder.core.puiseux import MonomialScaled, PuiseuxSeries, gamma_act, one_plus_x_pow
from superholder.core.valuation import Valuation, Verdict, min_valuation

Terms = dict[int, int]


def _psi_split(coeffs: Terms, prec_num: int, p: int) -> tuple[list[Terms], int]:
    """g(Y) = Σ_i φ(f_i)(1+Y)^i: interleave into Y^t·φ(h_t), then invert the Pascal matrix."""
    h: list[Terms] = [{} for _ in range(p)]
    for e, c in coeffs.items():
        j, t = divmod(e, p)
        h[t][j] = c
    out_prec = prec_num // p
    parts: list[Terms] = []
    for i in range(p):
        acc: Terms = {}
        for t in range(i, p):
            weight = (-1) ** (t - i) * math.comb(t, i) % p
            if not weight:
                continue
            for j, c in h[t].items():
                if j < out_prec:
                    acc[j] = (acc.get(j, 0) + weight * c) % p
        parts.append({j: c for j, c in acc.items() if c})
    return parts, out_prec


def _require_level_zero(f: PuiseuxSeries, what: str) -> None:
    if f.level != 0:
        msg = f"{what} needs a level-0 series, got level {f.level}"
        logger.error(msg)
        raise PreconditionViolation(msg)


def psi_decompose(g: PuiseuxSeries) -> tuple[PuiseuxSeries, ...]:
    """(f_0, …, f_{p−1}) with g = Σ φ(f_i)(1+X)^i modulo X^(p·⌊T/p⌋)."""
    _require_level_zero(g, "psi_decompose")
    parts, prec = _psi_split(dict(g.terms), g.prec_num, g.p)
    return tuple(PuiseuxSeries.from_numerators(g.p, 0, f, prec) for f in parts)


def psi(f: PuiseuxSeries) -> PuiseuxSeries:
    return psi_decompose(f)[0]


@attrs.define(frozen=True)
class ColmezDecomposition:
    """a_(j/p^m) for 0 ≤ j < p^m, stored by numerator j; zero entries are kept."""

    p: int
    level: int
    entries: tuple[PuiseuxSeries, ...] = attrs.field(converter=tuple)

    @property
    def prec(self) -> Fraction:
        return min(a.prec for a in self.entries)

    def entry(self, index: Fraction | int) -> PuiseuxSeries:
        num = Fraction(index) * self.p**self.level
        if num.denominator != 1 or not 0 <= num < len(self.entries):
            msg = f"{index} is not in I_{self.level}"
            logger.error(msg)
            raise ValueError(msg)
        return self.entries[int(num)]

    def indexed(self) -> list[tuple[Fraction, PuiseuxSeries]]:
        return [(Fraction(j, self.p**self.level), a) for j, a in enumerate(self.entries)]

    def inf_val(self) -> Valuation:
        return min_valuation(a.val() for a in self.entries)


def colmez_decompose(f: PuiseuxSeries) -> ColmezDecomposition:
    """f = Σ_(i ∈ I_m) (1+X)^i·a_i with a_i ∈ E⁺_0, by m successive ψ-splits."""
    p, m = f.p, f.level
    layer: list[tuple[int, Terms, int]] = [(0, dict(f.terms), f.prec_num)]
    for s in range(m):
        nxt = []
        for idx, coeffs, prec in layer:
            parts, out_prec = _psi_split(coeffs, prec, p)
            nxt.extend((idx + i * p**s, part, out_prec) for i, part in enumerate(parts))
        layer = nxt
    entries = [PuiseuxSeries.zero(p, 0)] * p**m
    for idx, coeffs, prec in layer:
        entries[idx] = PuiseuxSeries.from_numerators(p, 0, coeffs, prec)
    logger.debug(f"{get_fn_name()}. {m = } {len(entries) = }")
    return ColmezDecomposition(p, m, tuple(entries))


def reconstruct(d: ColmezDecomposition, prec: Fraction | None = None) -> PuiseuxSeries:
    """Σ_j (1+X^(1/p^m))^j·a_j, the inverse of colmez_decompose."""
    p, m = d.p, d.level
    prec = d.prec if prec is None else Fraction(prec)
    digits = max(DEFAULT_DIGITS, digit_length(math.ceil(prec * p**m), p) + 1)
    total = PuiseuxSeries.zero(p, prec)
    for j, a in enumerate(d.entries):
        if a.is_zero():
            continue
        total = total + one_plus_x_pow(PadicInt.from_int(j, p, digits), m, prec) * a
    return total.truncate(prec)


def tate_trace(
    f: PuiseuxSeries | MonomialScaled, n: int, level: int | None = None
) -> PuiseuxSeries | MonomialScaled:
    """T_n(f) = Σ_(i ∈ I_n) (1+X)^i·a_i(f), computed as (φψ)^(m−n) on the Y-variable.

    `level` reads f in E⁺_level (≥ its own level) before splitting; the result
    does not depend on it.
    """
    if n < 0:
        msg = f"Tate traces are indexed by n ≥ 0, got {n}"
        logger.error(msg)
        raise PreconditionViolation(msg)
    if isinstance(f, MonomialScaled):
        scaled = f.integral_pole()
        return MonomialScaled(scaled.pole, tate_trace(scaled.body, n, level))
    level = f.level if level is None else max(level, f.level)
    if n >= level:
        return f
    coeffs, prec = f.at_level(level)
    for _ in range(level - n):
        parts, prec = _psi_split(coeffs, prec, f.p)
        coeffs = parts[0]
    return PuiseuxSeries.from_numerators(f.p, n, coeffs, prec)


def agree(f: PuiseuxSeries, g: PuiseuxSeries) -> bool:
    """Equality modulo the smaller of the two precisions."""
    prec = min(f.prec, g.prec)
    return f.truncate(prec) == g.truncate(prec)


def derivative_window(f: PuiseuxSeries) -> Fraction:
    """val of the Y-derivative of f(Y^(p^level)); 0 when it vanishes to precision."""
    deriv = f.as_level_zero().derivative()
    v = deriv.val()
    return Fraction(0) if v.censored else v.value


def asymptotic_profile(f: PuiseuxSeries, k: int, i_max: int = DEFAULT_I_MAX) -> ShProfile:
    """Γ_k-orbit profile of f fitted on depths where p^(k+i) exceeds twice the derivative window."""
    floors = orbit_floors(f, k, i_max)
    return fit_asymptotic(floors, f.p, k, derivative_window(f), f.prec)


def sh_level_classify(f: PuiseuxSeries, k: int, i_max: int = DEFAULT_I_MAX) -> int:
    """n̂ = k − λ̂ from the fitted orbit profile."""
    logger.info(f"{get_fn_name()}. {k = } {i_max = }")
    profile = asymptotic_profile(f, k, i_max)
    if not math.isfinite(profile.lam):
        msg = f"Orbit profile did not resolve a finite λ: {profile.per_gap = }"
        logger.error(msg)
        raise TooFewPoints(msg)
    return round(k - profile.lam)


@attrs.define(frozen=True)
class Decompletion:
    n: int
    stabilization_index: int
    floors: dict[int, Valuation]
    profile: ShProfile | None
    classified: int | None

    @property
    def consistent(self) -> bool:
        if self.stabilization_index != self.n:
            return False
        return self.classified is None or self.classified == self.n


def decomplete(f: PuiseuxSeries, k: int, i_max: int = DEFAULT_I_MAX) -> Decompletion:
    """Minimal n with f ∈ E_n, certified by the T_j sequence and the Γ_k orbit profile."""
    logger.info(f"{get_fn_name()}. {f.level = } {k = }")
    n = f.term_level
    stabilization = next(j for j in range(n + 1) if agree(tate_trace(f, j), f))
    try:
        profile = asymptotic_profile(f, k, i_max)
    except TooFewPoints:
        return Decompletion(n, stabilization, orbit_floors(f, k, i_max), None, None)
    classified = round(k - profile.lam) if math.isfinite(profile.lam) else None
    return Decompletion(n, stabilization, profile.floors, profile, classified)


@attrs.define(frozen=True)
class PsiTower:
    """(m_0, …, m_J) in E⁺ with ψ(m_(j+1)) = m_j."""

    p: int
    entries: tuple[PuiseuxSeries, ...] = attrs.field(converter=tuple)

    def __attrs_post_init__(self) -> None:
        for m in self.entries:
            _require_level_zero(m, "PsiTower")
            if m.p != self.p:
                msg = f"Tower entries must live over p = {self.p}"
                logger.error(msg)
                raise ValueError(msg)

    @property
    def depth(self) -> int:
        return len(self.entries) - 1


def embed(f: PuiseuxSeries, depth: int = DEFAULT_TOWER_DEPTH) -> PsiTower:
    """i(f) = (f, φf, …, φ^J f)."""
    _require_level_zero(f, "embed")
    entries = [f]
    for _ in range(depth):
        entries.append(entries[-1].frobenius())
    return PsiTower(f.p, tuple(entries))


def lift_tower(m0: PuiseuxSeries, hs: Sequence[PuiseuxSeries]) -> PsiTower:
    """m_(j+1) = φ(m_j) + (1+X)·φ(h_j); ψ kills the second summand."""
    entries = [m0]
    for h in hs:
        lifted = entries[-1].frobenius()
        one_plus_x = PuiseuxSeries.from_coeffs(m0.p, {0: 1, 1: 1}, lifted.prec)
        entries.append(lifted + one_plus_x * h.frobenius())
    return PsiTower(m0.p, tuple(entries))


def validate_tower(t: PsiTower) -> bool:
    for j in range(t.depth):
        if not agree(psi(t.entries[j + 1]), t.entries[j]):
            msg = f"ψ(m_{j + 1}) ≠ m_{j}"
            logger.error(msg)
            raise NotPsiCompatible(msg, j)
    return True


def tower_val(t: PsiTower) -> Valuation:
    """⌊min_j val_X(m_j)/p^j⌋."""
    v = min_valuation(m.val().scale(Fraction(1, t.p**j)) for j, m in enumerate(t.entries))
    return Valuation(math.floor(v.value), censored=v.censored)


def tower_scalar_mul(f: PuiseuxSeries, t: PsiTower) -> PsiTower:
    """(f·m)_j = φ^j(f)·m_j."""
    return PsiTower(t.p, tuple(f.frobenius_power(j) * m for j, m in enumerate(t.entries)))


def tower_gamma_act(a: PadicInt, t: PsiTower) -> PsiTower:
    return PsiTower(t.p, tuple(gamma_act(a, m) for m in t.entries))


@attrs.define(frozen=True)
class TowerVerdict:
    verdict: Verdict
    index: int | None = None


def psi_tower_sh_test(
    t: PsiTower, k: int, method: str = "divisibility", i_max: int = DEFAULT_I_MAX
) -> TowerVerdict:
    """Whether each m_j is Γ_k-super-Hölder of level k + j, i.e. m_j ∈ φ^j(E⁺).

    `method="profile"` classifies every m_j through its orbit profile instead of
    reading exponents, and reports Unresolved where floors are censored.
    """
    logger.info(f"{get_fn_name()}. {t.depth = } {k = } {method = }")
    verdicts = []
    for j, m in enumerate(t.entries):
        if method == "divisibility":
            ok = m.in_frobenius_image(j)
        else:
            try:
                profile = asymptotic_profile(m, k, i_max)
            except TooFewPoints:
                verdicts.append(Verdict.UNRESOLVED)
                continue
            ok = profile.lam >= k + j
        if not ok:
            return TowerVerdict(Verdict.REFUTED, j)
        verdicts.append(Verdict.CERTIFIED)
    return TowerVerdict(Verdict.combine(verdicts))
