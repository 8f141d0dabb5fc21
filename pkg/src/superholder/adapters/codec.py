"""Canonical text forms.

Series JSON keeps the key order p, level, prec_num, terms with compact
separators, so byte equality is equality at matched precision. Reports are
sorted-key JSON. The plain-text series grammar is input only:

    series   := term ("+" term)* ["+" "O(X^" exponent ")"]
    term     := [coeff "*"] "X" ["^" exponent] | coeff
    exponent := int | "(" int ["/" int] ")"
"""

from __future__ import annotations

import json
import math
import re
from fractions import Fraction
from typing import Any

import yaml
from sympy import isprime

from superholder.core.arith import GammaElement, PadicInt
from superholder.core.commutant import CommutantSolution
from superholder.core.errors import ParseError
from superholder.core.logger import logger
from superholder.core.mahler import ContinuousFn, MahlerExpansion, ShProfile
from superholder.core.phigamma import MatrixSeries, PhiGammaModule
from superholder.core.puiseux import PuiseuxSeries
from superholder.core.tate_colmez import ColmezDecomposition, PsiTower
from superholder.core.valuation import Valuation

SERIES_KEYS = ("p", "level", "prec_num", "terms")


def _fail(msg: str, offset: int) -> ParseError:
    logger.error(f"{msg} at byte offset {offset}")
    return ParseError(msg, offset)


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def number(x: float | Fraction | int) -> int | float | str:
    """JSON-safe rendering: integers stay integers, infinities become strings."""
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else str(x)
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, float) and x.is_integer():
        return int(x)
    return x


# ---- series ----------------------------------------------------------


def series_to_dict(f: PuiseuxSeries) -> dict:
    return {
        "p": f.p,
        "level": f.level,
        "prec_num": f.prec_num,
        "terms": [[e, c] for e, c in f.terms],
    }


def dumps_series(f: PuiseuxSeries) -> str:
    return json.dumps(series_to_dict(f), separators=(",", ":"))


def _locate(source: str | None, needles: list[str], default: int) -> int:
    """Byte offset of the first needle found in the JSON source, else `default`."""
    if source is None:
        return default
    for needle in needles:
        pos = source.find(needle)
        if pos >= 0:
            return _byte_offset(source, pos)
    return default


def _is_int(v: object) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def series_from_dict(data: Any, offset: int = 0, source: str | None = None) -> PuiseuxSeries:  # noqa: ANN401
    """`source` is the JSON text `data` came from; errors then point into it."""
    if not isinstance(data, dict) or any(key not in data for key in SERIES_KEYS):
        raise _fail(f"A series object needs the keys {list(SERIES_KEYS)}", offset)
    p, level, prec_num, terms = (data[key] for key in SERIES_KEYS)
    for key, v in zip(SERIES_KEYS, (p, level, prec_num), strict=False):
        if not _is_int(v):
            raise _fail(f"{key} must be an integer, got {v!r}", _locate(source, [f'"{key}"'], offset))
    if not isprime(p) or level < 0 or prec_num < 0:
        raise _fail(
            f"Invalid series context {p = } {level = } {prec_num = }", _locate(source, ['"p"'], offset)
        )
    if not isinstance(terms, list):
        raise _fail(f"terms must be a list, got {terms!r}", _locate(source, ['"terms"'], offset))
    coeffs: dict[int, int] = {}
    for term in terms:
        at = _locate(source, [json.dumps(term), json.dumps(term, separators=(",", ":"))], offset)
        if not isinstance(term, list) or len(term) != 2 or not all(map(_is_int, term)):  # noqa: PLR2004
            raise _fail(f"Malformed term {term!r}", at)
        e, c = term
        if not 0 <= e < prec_num or not 1 <= c < p or e in coeffs:
            raise _fail(f"Term {term!r} is out of range or repeated", at)
        coeffs[e] = c
    return PuiseuxSeries.from_numerators(p, level, coeffs, prec_num)


def load_document(raw: str | dict) -> Any:  # noqa: ANN401
    """JSON text (or an already-parsed YAML mapping) into plain Python data."""
    return raw if isinstance(raw, dict) else _loads(raw)


def _loads(text: str) -> Any:  # noqa: ANN401
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise _fail(f"Invalid JSON: {err.msg}", _byte_offset(text, err.pos)) from err


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<sym>[X+*^()/O]))")


class _TextParser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def _skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _offset(self) -> int:
        return _byte_offset(self.text, self.pos)

    def peek(self) -> str | None:
        self._skip()
        if self.pos >= len(self.text):
            return None
        m = _TOKEN.match(self.text, self.pos)
        if m is None:
            raise _fail(f"Unexpected character {self.text[self.pos]!r}", self._offset())
        return m.group("num") or m.group("sym")

    def take(self, expected: str | None = None) -> str:
        token = self.peek()
        if token is None or (expected is not None and token != expected):
            raise _fail(f"Expected {expected or 'a token'!r}, got {token!r}", self._offset())
        self.pos += len(token)
        return token

    def integer(self) -> int:
        token = self.peek()
        if token is None or not token.isdigit():
            raise _fail(f"Expected an integer, got {token!r}", self._offset())
        return int(self.take())

    def exponent(self) -> Fraction:
        if self.peek() != "(":
            return Fraction(self.integer())
        self.take("(")
        num = self.integer()
        den = 1
        if self.peek() == "/":
            self.take("/")
            start = self._offset()
            den = self.integer()
            if den == 0:
                raise _fail("Zero denominator in exponent", start)
        self.take(")")
        return Fraction(num, den)

    def term(self) -> tuple[Fraction, int] | Fraction:
        """(exponent, coefficient), or a bare Fraction for an O(X^T) term."""
        if self.peek() == "O":
            self.take("O")
            self.take("(")
            self.take("X")
            self.take("^")
            prec = self.exponent()
            self.take(")")
            return prec
        coeff = 1
        if self.peek() != "X":
            coeff = self.integer()
            if self.peek() != "*":
                return Fraction(0), coeff
            self.take("*")
        self.take("X")
        exp = Fraction(1)
        if self.peek() == "^":
            self.take("^")
            exp = self.exponent()
        return exp, coeff


def parse_series_text(text: str, p: int, prec: Fraction | int | None = None) -> PuiseuxSeries:
    parser = _TextParser(text)
    coeffs: dict[Fraction, int] = {}
    found_prec: Fraction | None = None
    while True:
        start = parser._offset()  # noqa: SLF001
        item = parser.term()
        if isinstance(item, Fraction):
            found_prec = item
        else:
            exp, coeff = item
            if not _is_p_power(exp.denominator, p):
                raise _fail(f"Exponent {exp} does not have a power-of-{p} denominator", start)
            coeffs[exp] = coeffs.get(exp, 0) + coeff
        if parser.peek() is None:
            break
        parser.take("+")
    if found_prec is None and prec is None:
        raise _fail("No precision: pass --prec or end the series with + O(X^T)", len(text.encode()))
    final_prec = Fraction(prec) if found_prec is None else found_prec
    if not _is_p_power(final_prec.denominator, p):
        raise _fail(f"Precision {final_prec} does not have a power-of-{p} denominator", 0)
    return PuiseuxSeries.from_coeffs(p, coeffs, final_prec)


def _is_p_power(n: int, p: int) -> bool:
    while n % p == 0:
        n //= p
    return n == 1


def parse_series(raw: str, p: int | None = None, prec: Fraction | int | None = None) -> PuiseuxSeries:
    """Canonical JSON or the plain-text form; text needs `p` (and `prec` unless it has an O-term)."""
    stripped = raw.lstrip()
    if stripped.startswith("{"):
        start = _byte_offset(raw, len(raw) - len(stripped))
        return series_from_dict(_loads(raw), start, raw)
    if p is None:
        raise _fail("Plain-text series need --p", 0)
    return parse_series_text(raw, p, prec)


# ---- composite documents ---------------------------------------------


def function_from_dict(data: dict) -> ContinuousFn:
    """{"t": level, "table": [series, …], "locally_constant": bool} into a tabulated function."""
    if "t" not in data or not data.get("table"):
        raise _fail("A function document needs 't' and a non-empty 'table'", 0)
    table = tuple(series_from_dict(v) for v in data["table"])
    return ContinuousFn(
        table[0].p, int(data["t"]), table, bool(data.get("locally_constant", True))
    )


def expansion_to_dict(e: MahlerExpansion) -> dict:
    return {"n_max": e.n_max, "coeffs": [series_to_dict(c) for c in e.coeffs]}


def expansion_from_dict(data: dict) -> MahlerExpansion:
    coeffs = tuple(series_from_dict(c) for c in data.get("coeffs", []))
    if not coeffs:
        raise _fail("An expansion needs at least one coefficient", 0)
    return MahlerExpansion(coeffs[0].p, coeffs)


def valuation_to_json(v: Valuation) -> int | str:
    return v.to_json()


def profile_to_dict(profile: ShProfile) -> dict:
    return {
        "floors": {str(i): v.to_json() for i, v in sorted(profile.floors.items())},
        "lambda": number(profile.lam),
        "mu": number(profile.mu),
        "stable": profile.stable,
        "certified_to": None if profile.certified_to is None else str(profile.certified_to),
    }


def decomposition_to_dict(d: ColmezDecomposition) -> dict:
    return {"level": d.level, "entries": [[str(i), series_to_dict(a)] for i, a in d.indexed()]}


def tower_to_dict(t: PsiTower) -> dict:
    return {"depth": t.depth, "entries": [series_to_dict(m) for m in t.entries]}


def tower_from_dict(data: dict) -> PsiTower:
    entries = tuple(series_from_dict(m) for m in data.get("entries", []))
    if not entries:
        raise _fail("A tower needs at least one entry", 0)
    return PsiTower(entries[0].p, entries)


def padic_digits(z: PadicInt) -> list[int]:
    return list(z.digits)


def padic_from_digits(digits: list[int | str], p: int) -> PadicInt:
    try:
        return PadicInt.from_digits([int(d) for d in digits], p)
    except (TypeError, ValueError) as err:
        raise _fail(f"Invalid digit list {digits!r}", 0) from err


def matrix_to_rows(m: MatrixSeries) -> list[list[dict]]:
    return [[series_to_dict(e) for e in row] for row in m.rows]


def matrix_from_rows(rows: list[list[dict]]) -> MatrixSeries:
    if not isinstance(rows, list) or not rows or not all(isinstance(row, list) for row in rows):
        raise _fail(f"A matrix is a non-empty list of rows, got {rows!r}", 0)
    return MatrixSeries(tuple(tuple(series_from_dict(e) for e in row) for row in rows))


def module_to_dict(D: PhiGammaModule, samples: list[GammaElement]) -> dict:  # noqa: N803
    return {
        "d": D.d,
        "k": D.k,
        "P": matrix_to_rows(D.P),
        "cocycle": [{"a_digits": padic_digits(g.a), "G": matrix_to_rows(D.G(g))} for g in samples],
    }


def module_from_dict(data: dict) -> tuple[PhiGammaModule, list[GammaElement]]:
    for key in ("d", "k", "P", "cocycle"):
        if key not in data:
            raise _fail(f"A module document needs the key {key!r}", 0)
    P = matrix_from_rows(data["P"])  # noqa: N806
    if P.d != data["d"]:
        raise _fail(f"Declared rank {data['d']} does not match P", 0)
    samples, table, digits = [], {}, None
    for entry in data["cocycle"]:
        if not isinstance(entry, dict) or "a_digits" not in entry or "G" not in entry:
            raise _fail(f"A cocycle entry needs 'a_digits' and 'G', got {entry!r}", 0)
        a = padic_from_digits(entry["a_digits"], P.p)
        digits = a.precision if digits is None else min(digits, a.precision)
        g = GammaElement(a, data["k"])
        samples.append(g)
        table[a.residue] = matrix_from_rows(entry["G"])
    module = PhiGammaModule(P, data["k"], None, table, digits or 1)
    return module, samples


def commutant_to_dict(sol: CommutantSolution) -> dict:
    verified = Fraction(sol.residual_prec)
    return {
        "b_digits": padic_digits(sol.b),
        "n": sol.n,
        "verified_to": f"{verified.numerator}/{verified.denominator}",
    }


# ---- reports ---------------------------------------------------------


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2)
    if fmt == "yaml":
        return yaml.safe_dump(report, sort_keys=True)
    return "\n".join(f"{key}: {_flat(report[key])}" for key in sorted(report))


def _flat(value: Any) -> str:  # noqa: ANN401
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return str(value)
