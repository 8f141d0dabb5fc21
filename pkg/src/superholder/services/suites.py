"""Seeded property batteries, one per registered suite name.

Each suite returns a polars frame with one row per checked case:
`property`, `case`, `verdict` and `detail`. Randomness comes only from a
`random.Random(seed)` owned by the suite.
"""

from __future__ import annotations

import math
import random
from collections.abc import Callable
from fractions import Fraction

import attrs
import polars as pl

from superholder.core import commutant as cm
from superholder.core import mahler as mh
from superholder.core import phigamma as pg
from superholder.core import tate_colmez as tc
from superholder.core.arith import GammaElement, PadicInt
from superholder.core.config import DEFAULT_TOWER_DEPTH, PRNG_NAME, SUITE_NAMES, default_k
from superholder.core.errors import (
    NotCommutant,
    PreconditionViolation,
    RPreconditionFailed,
    TooFewPoints,
    UnknownSuite,
)
from superholder.core.logger import get_fn_name, logger
from superholder.core.puiseux import (
    PuiseuxSeries,
    gamma_act,
    gamma_series,
    iterate_compose,
)
from superholder.core.valuation import Valuation, Verdict

Row = dict[str, str]
SuiteFn = Callable[[int, random.Random, int, int], list[Row]]

CERTIFIED, REFUTED, UNRESOLVED = Verdict.CERTIFIED, Verdict.REFUTED, Verdict.UNRESOLVED


def _row(prop: str, case: str, verdict: Verdict | bool, detail: str = "") -> Row:  # noqa: FBT001
    if isinstance(verdict, bool):
        verdict = CERTIFIED if verdict else REFUTED
    return {"property": prop, "case": case, "verdict": verdict.value, "detail": detail}


def random_series(
    rng: random.Random, p: int, level: int, prec_num: int, max_num: int, max_terms: int = 4
) -> PuiseuxSeries:
    """Random terms with numerators below `max_num`, one of them prime to p."""
    max_num = min(max_num, prec_num)
    coeffs = {rng.randrange(max_num): rng.randrange(1, p) for _ in range(rng.randint(0, max_terms))}
    prime_to_p = [e for e in range(1, max_num) if e % p]
    if prime_to_p:
        coeffs[rng.choice(prime_to_p)] = rng.randrange(1, p)
    return PuiseuxSeries.from_numerators(p, level, coeffs, prec_num)


def random_unit(rng: random.Random, p: int, digits: int) -> PadicInt:
    return PadicInt.from_int(rng.randrange(p**digits) * p + rng.randrange(1, p), p, digits)


# ---- mahler -----------------------------------------------------------


def mahler_suite(p: int, rng: random.Random, count: int, _k: int) -> list[Row]:
    rows = []
    max_t = 3 if p <= 3 else 2  # noqa: PLR2004
    for case in range(count):
        t = rng.randint(1, max_t)
        table = tuple(
            random_series(rng, p, rng.randint(0, 1), 8, 8, max_terms=2) for _ in range(p**t)
        )
        f = mh.ContinuousFn(p, t, table)
        e = mh.mahler_coeffs(f, p**t + p - 1)
        name = f"t={t} #{case}"
        rows.append(
            _row("round_trip", name, all(tc.agree(mh.mahler_eval(e, z), f(z)) for z in range(p**t)))
        )
        rows.append(_row("vanishing", name, all(m.is_zero() for m in e.coeffs[p**t :])))
        head = mh.MahlerExpansion(p, e.coeffs[: p**t])
        rebuilt = mh.ContinuousFn(p, t, tuple(mh.mahler_eval(head, z) for z in range(p**t)))
        again = mh.mahler_coeffs(rebuilt, p**t - 1)
        rows.append(
            _row(
                "uniqueness",
                name,
                all(tc.agree(a, b) for a, b in zip(again.coeffs, head.coeffs, strict=True)),
            )
        )
    prec = p**2 + 2
    orbit = mh.ContinuousFn(
        p,
        2,
        tuple(
            PuiseuxSeries.from_coeffs(p, {0: 1, 1: 1}, prec) ** a
            for a in range(p**2)
        ),
        locally_constant=False,
    )
    e = mh.mahler_coeffs(orbit)
    rows.append(
        _row(
            "binomial_orbit",
            "(1+X)^a",
            all(
                tc.agree(m, PuiseuxSeries.monomial(p, n, prec)) for n, m in enumerate(e.coeffs)
            ),
        )
    )
    return rows


# ---- shmahl -----------------------------------------------------------


def shmahl_suite(p: int, rng: random.Random, count: int, k: int) -> list[Row]:
    """Orbits of c·X^(1/p^n) for every depth up to 3 and n ≤ 2, at precision 2p^(k+4)."""
    rows = []
    t = 2
    for case in range(count):
        c = rng.randrange(1, p)
        for kk in range(k, max(k, 3) + 1):
            prec = 2 * p ** (kk + 4)
            for n in range(3):
                lam = kk - n
                m = PuiseuxSeries.monomial(p, Fraction(1, p**n), prec, c)
                e = mh.mahler_coeffs(mh.orbit_fn(m, kk, t, i_max=0).fn)
                name = f"#{case} {c}·X^(1/{p**n}) k={kk}"
                rows.append(_row("certifies", name, mh.sh_test_mahler(e, lam, 0).verdict))
                refuted = mh.sh_test_mahler(e, lam + 1, 0)
                rows.append(
                    _row("refutes", name, refuted.verdict is REFUTED, f"witness={refuted.witness}")
                )
                rows.append(_row("w_implies_sh", name, mh.w_test_mahler(e, lam, 0).verdict))
                rows.append(_row("sh_implies_w", name, mh.w_test_mahler(e, lam - 1, 0).verdict))
    return rows


# ---- etnsh ------------------------------------------------------------


def etnsh_suite(p: int, rng: random.Random, count: int, k: int) -> list[Row]:
    rows = []
    for n in (0, 1):
        prec = Fraction(p) ** (k - n + 2) + 1
        m = PuiseuxSeries.monomial(p, Fraction(1, p**n), prec)
        for i in range(3):
            for b in range(1, p):
                g = GammaElement.from_coordinate(p**i * b, p, k)
                v = (gamma_act(g, m) - m).val()
                expected = Valuation.exact(Fraction(p) ** (k - n + i))
                rows.append(_row("equality", f"n={n} i={i} b={b}", v == expected, str(v)))
    for case in range(count):
        f = random_series(rng, p, 0, 2 * p, 2 * p)
        window = tc.derivative_window(f)
        m = 1
        while p**m <= 2 * window:
            m += 1
        f = PuiseuxSeries.from_numerators(p, 0, dict(f.terms), p**m + int(window) + 3)
        v = (gamma_act(PadicInt.from_int(1 + p**m, p), f) - f).val()
        expected = Valuation.exact(p**m + window)
        rows.append(_row("level_zero_asymptotic", f"#{case} m={m}", v == expected, str(v)))
    for case in range(min(count, 5)):
        u = PuiseuxSeries.from_coeffs(
            p, {1: 1, **{e: rng.randrange(p) for e in range(2, 5)}}, p**3 + 2
        )
        rows.extend(
            _row(
                "sen_bound",
                f"#{case} j={j}",
                (iterate_compose(u, p**j) - PuiseuxSeries.monomial(p, 1, u.prec)).val().at_least(p**j),
            )
            for j in range(1, 4)
        )
    return rows


# ---- colmtn -----------------------------------------------------------


def colmtn_suite(p: int, rng: random.Random, count: int, _k: int) -> list[Row]:
    rows = []
    level = 3
    prec_num = 3 * p**level
    for case in range(count):
        f = random_series(rng, p, level, prec_num, prec_num // 2, max_terms=5)
        name = f"#{case}"
        d = tc.colmez_decompose(f)
        rows.append(_row("reconstruction", name, tc.agree(tc.reconstruct(d), f)))
        v, inf = f.val(), d.inf_val()
        lower = inf.value > v.value - 1
        upper = UNRESOLVED if inf.censored else (CERTIFIED if inf.value <= v.value else REFUTED)
        rows.append(_row("colmez_bounds", name, upper if lower else REFUTED, f"{v=!s} {inf=!s}"))
        full = f.level
        traces = [tc.tate_trace(f, n) for n in range(full + 1)]
        rows.append(
            _row(
                "identity_on_En",
                name,
                all(tc.agree(tc.tate_trace(t, n, level=full), t) for n, t in enumerate(traces)),
            )
        )
        # T_n f = f from n = level on; before that f − T_n f only keeps val ≥ val(f) − 1
        reached = traces[full] == f
        gaps = Verdict.combine((f - t).val().at_least(v.value - 1) for t in traces)
        rows.append(_row("convergence", name, gaps if reached else REFUTED))
        rows.append(
            _row(
                "valuation_bound",
                name,
                Verdict.combine(t.val().at_least(v.value - 1) for t in traces) is not REFUTED,
            )
        )
        n = max(full - 1, 0)
        units = [PadicInt.from_int(a, p) for a in (1 + p, p - 1, 2 * p + 1, p**2 + 1, 1 + 3 * p)]
        rows.append(
            _row(
                "equivariance",
                name,
                all(
                    tc.agree(tc.tate_trace(gamma_act(a, f), n), gamma_act(a, tc.tate_trace(f, n)))
                    for a in units
                ),
            )
        )
        h = random_series(rng, p, 0, 6, 6)
        g0 = random_series(rng, p, 0, 3 * p, 3 * p)
        rows.append(
            _row(
                "psi_projection",
                name,
                tc.agree(tc.psi(g0 * h.frobenius()), h * tc.psi(g0))
                and tc.agree(tc.psi(h.frobenius()), h)
                and tc.agree(tc.psi(gamma_act(units[0], g0)), gamma_act(units[0], tc.psi(g0))),
            )
        )
    return rows


# ---- shdecet ----------------------------------------------------------


def shdecet_suite(p: int, rng: random.Random, count: int, k: int) -> list[Row]:
    rows = []
    i_max = 3
    for case in range(count):
        n = case % 4
        prec_num = p ** (k + i_max) + 4 * p
        f = random_series(rng, p, n, prec_num, 2 * p)
        result = tc.decomplete(f, k, i_max)
        name = f"#{case} n={n}"
        rows.append(_row("decomplete", name, result.n == n, f"got {result.n}"))
        try:
            n_hat = tc.sh_level_classify(f, k, i_max)
        except TooFewPoints as err:
            rows.append(_row("classify_agrees", name, UNRESOLVED, str(err)))
            continue
        rows.append(_row("classify_agrees", name, n_hat == n, f"n_hat={n_hat}"))
        rows.append(_row("stabilization", name, result.stabilization_index == n))
    return rows


# ---- gmcom ------------------------------------------------------------


def gmcom_suite(p: int, rng: random.Random, count: int, k: int) -> list[Row]:
    rows = []
    digits = 6
    base_prec = p ** (digits - 1) + 1
    for case in range(count):
        b = random_unit(rng, p, digits)
        n = rng.randint(-2, 2)
        u = gamma_series(b, base_prec, p).frobenius_power(n)
        name = f"#{case} n={n}"
        try:
            sol = cm.solve_commutant(u, digits)
        except NotCommutant as err:
            rows.append(_row("round_trip", name, REFUTED, err.reason))
            continue
        rows.append(
            _row("round_trip", name, sol.b == b and sol.n == n, f"b={sol.b.residue} n={sol.n}")
        )
        bad = gamma_series(b, base_prec, p)
        j = rng.randrange(2, base_prec)
        while _is_p_power(j, p):
            j = rng.randrange(2, base_prec)
        bad = (bad + PuiseuxSeries.monomial(p, j, base_prec)).frobenius_power(n)
        try:
            cm.solve_commutant(bad, digits)
            rows.append(_row("rejects_non_examples", name, REFUTED, f"accepted j={j}"))
        except NotCommutant as err:
            rows.append(_row("rejects_non_examples", name, True, f"{err.reason} at {err.witness}"))
    small = p**3 + 2
    for case in range(min(count, 3)):
        b = random_unit(rng, p, digits)
        u = gamma_series(b, small, p)
        samples = [random_unit(rng, p, 16) for _ in range(3)]
        rows.append(_row("soundness", f"#{case}", cm.check_commute(u, samples).verdict))
        u_long = gamma_series(b, p ** (k + 3) + 2, p)
        try:
            profile = tc.asymptotic_profile(u_long, k)
            rows.append(_row("sh_consistency", f"#{case}", math.isfinite(profile.lam)))
        except TooFewPoints as err:
            rows.append(_row("sh_consistency", f"#{case}", UNRESOLVED, str(err)))
    return rows


def _is_p_power(n: int, p: int) -> bool:
    while n % p == 0:
        n //= p
    return n == 1


# ---- phigsh -----------------------------------------------------------


def _random_unit_matrix(rng: random.Random, p: int, d: int, prec: int) -> pg.MatrixSeries:
    rows = []
    for i in range(d):
        row = []
        for j in range(d):
            coeffs = {e: rng.randrange(p) for e in range(1, 4)}
            coeffs[0] = int(i == j)
            if i == j:
                # val(U') = 0 keeps the orbit floors at exactly p^(k+i)
                coeffs[1] = rng.randrange(1, p)
            row.append(PuiseuxSeries.from_coeffs(p, coeffs, prec))
        rows.append(tuple(row))
    return pg.MatrixSeries(tuple(rows))


def phigsh_suite(p: int, rng: random.Random, count: int, k: int) -> list[Row]:
    rows = []
    i_max = 3
    prec = p ** (k + i_max) + 2 * p
    for case in range(max(1, count // 4)):
        for d in (1, 2):
            U = _random_unit_matrix(rng, p, d, prec)  # noqa: N806
            D = pg.gauge_module(U, k)  # noqa: N806
            name = f"#{case} d={d}"
            samples = pg.module_samples(D, i_max)
            rows.append(_row("validates", name, pg.validate_module(D, samples).verdict))
            try:
                profile = pg.matrix_sh_profile(D, i_max)
                inverse = pg.matrix_sh_profile(D, i_max, inverse=True)
            except TooFewPoints as err:
                rows.append(_row("profile_near_k", name, UNRESOLVED, str(err)))
                continue
            rows.append(
                _row("profile_near_k", name, abs(profile.lam - k) <= 1, f"lam={profile.lam}")
            )
            rows.append(_row("inverse_profile", name, inverse.lam == profile.lam))
            g = samples[0]
            try:
                result = pg.fixed_point_series(D, g, pg.minimal_r(D), i_max)
            except RPreconditionFailed as err:
                rows.append(_row("fixed_point", name, UNRESOLVED, str(err)))
                continue
            rows.append(_row("fixed_point", name, result.agrees, f"attained={result.attained}"))
            rows.append(
                _row(
                    "fixed_point_growth",
                    name,
                    all(
                        v.at_least(Fraction(p**i - 1, p - 1)) is not REFUTED
                        for i, v in enumerate(result.term_vals)
                    ),
                )
            )
            try:
                ell, verdict = pg.frobenius_power_bound(D, g)
                rows.append(_row("frobenius_power", name, verdict, f"ell={ell}"))
            except PreconditionViolation as err:
                rows.append(_row("frobenius_power", name, UNRESOLVED, str(err)))
    trivial = pg.trivial_module(p, 1, k, prec)
    for m in (0, 1, 2):
        x_prec_num = p ** (k + i_max + m) + 4 * p
        x = (random_series(rng, p, m, x_prec_num, 2 * p),)
        U = _random_unit_matrix(rng, p, 1, x[0].prec + 1)  # noqa: N806
        D = trivial if m == 0 else pg.gauge_module(U, k)  # noqa: N806
        result = pg.vector_sh_profile(D, x, i_max)
        rows.append(_row("vector_level", f"m={m}", result.m_hat == m, f"m_hat={result.m_hat}"))
    return rows


# ---- llpsh ------------------------------------------------------------


def llpsh_suite(p: int, rng: random.Random, count: int, k: int) -> list[Row]:
    rows = []
    depth = min(DEFAULT_TOWER_DEPTH, 3)
    for case in range(count):
        f = random_series(rng, p, 0, 8, 8)
        t = tc.embed(f, depth)
        tc.validate_tower(t)
        rows.append(_row("diagonal_certified", f"#{case}", tc.psi_tower_sh_test(t, k).verdict))
    for case in range(count):
        m0 = random_series(rng, p, 0, 8, 8)
        first = rng.randrange(depth)
        hs = [
            PuiseuxSeries.zero(p, 8 * p**j)
            if j < first
            else random_series(rng, p, 0, 8 * p**j, 4)
            for j in range(depth)
        ]
        t = tc.lift_tower(m0, hs)
        tc.validate_tower(t)
        result = tc.psi_tower_sh_test(t, k)
        rows.append(
            _row(
                "non_diagonal_refuted",
                f"#{case}",
                result.verdict is REFUTED and result.index == first + 1,
                f"index={result.index} expected={first + 1}",
            )
        )
    return rows


SUITES: dict[str, SuiteFn] = {
    "mahler": mahler_suite,
    "shmahl": shmahl_suite,
    "etnsh": etnsh_suite,
    "colmtn": colmtn_suite,
    "shdecet": shdecet_suite,
    "gmcom": gmcom_suite,
    "phigsh": phigsh_suite,
    "llpsh": llpsh_suite,
}


@attrs.define(frozen=True)
class SuiteResult:
    name: str
    p: int
    seed: int
    frame: pl.DataFrame

    @property
    def verdict(self) -> Verdict:
        return Verdict.combine(Verdict(v) for v in self.frame["verdict"].to_list())

    def summary(self) -> pl.DataFrame:
        return (
            self.frame.group_by("property", maintain_order=True)
            .agg(
                pl.len().alias("cases"),
                (pl.col("verdict") == CERTIFIED.value).sum().alias("certified"),
                (pl.col("verdict") == REFUTED.value).sum().alias("refuted"),
                (pl.col("verdict") == UNRESOLVED.value).sum().alias("unresolved"),
            )
            .sort("property")
        )

    def to_report(self) -> dict:
        failures = self.frame.filter(pl.col("verdict") != CERTIFIED.value).head(10)
        return {
            "suite": self.name,
            "p": self.p,
            "seed": self.seed,
            "prng": PRNG_NAME,
            "verdict": self.verdict.value,
            "properties": {
                row["property"]: {
                    "cases": row["cases"],
                    "certified": row["certified"],
                    "refuted": row["refuted"],
                    "unresolved": row["unresolved"],
                }
                for row in self.summary().iter_rows(named=True)
            },
            "failures": failures.to_dicts(),
        }


DEFAULT_COUNTS = {
    "mahler": 200,
    "shmahl": 1,
    "etnsh": 50,
    "colmtn": 100,
    "shdecet": 100,
    "gmcom": 100,
    "phigsh": 8,
    "llpsh": 50,
}


def run_suite(
    name: str, p: int, seed: int, count: int | None = None, k: int | None = None
) -> SuiteResult:
    """Run one registered battery; `count` defaults to the suite's standard size."""
    logger.info(f"{get_fn_name()}. {name = } {p = } {seed = } {count = }")
    if name not in SUITES:
        msg = f"Unknown suite {name!r}; registered: {list(SUITE_NAMES)}"
        logger.error(msg)
        raise UnknownSuite(msg)
    rng = random.Random(seed)  # noqa: S311
    count = DEFAULT_COUNTS[name] if count is None else count
    rows = SUITES[name](p, rng, count, default_k(p) if k is None else k)
    frame = pl.DataFrame(
        rows,
        schema={"property": pl.String, "case": pl.String, "verdict": pl.String, "detail": pl.String},
    )
    return SuiteResult(name, p, seed, frame)
