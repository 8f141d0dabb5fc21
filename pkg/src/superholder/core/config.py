from __future__ import annotations

from fractions import Fraction
import sys

if sys.version_info >= (3, 11):
    from typing import Self
else:  # pragma: no cover
    from typing_extensions import Self

import attrs
from sympy import isprime

DEFAULT_DIGITS = 16
DEFAULT_TOWER_DEPTH = 4
DEFAULT_I_MAX = 3
DEFAULT_PREC = Fraction(64)
PRNG_NAME = "python-random-mt19937/v1"

SUITE_NAMES = (
    "mahler",
    "shmahl",
    "etnsh",
    "colmtn",
    "shdecet",
    "gmcom",
    "phigsh",
    "llpsh",
)
FORMATS = ("json", "text", "yaml")


def default_k(p: int) -> int:
    """Smallest depth with Γ_k procyclic: 2 for p = 2, 1 otherwise."""
    return 2 if p == 2 else 1  # noqa: PLR2004


def _is_prime(_instance: object, attribute: attrs.Attribute, value: int) -> None:
    if not isprime(value):
        msg = f"`{attribute.name}` must be prime, got {value}"
        raise ValueError(msg)


def _positive(_instance: object, attribute: attrs.Attribute, value: Fraction) -> None:
    if value <= 0:
        msg = f"`{attribute.name}` must be positive, got {value}"
        raise ValueError(msg)


def _to_fraction(value: str | int | Fraction) -> Fraction:
    return Fraction(str(value).strip()) if isinstance(value, str) else Fraction(value)


@attrs.define
class RunConfig:
    p: int = attrs.field(
        default=2, converter=int, validator=[attrs.validators.instance_of(int), _is_prime]
    )
    prec: Fraction = attrs.field(default=DEFAULT_PREC, converter=_to_fraction, validator=_positive)
    level: int = attrs.field(default=0, converter=int, validator=attrs.validators.ge(0))
    k: int | None = attrs.field(
        default=None,
        converter=attrs.converters.optional(int),
        validator=attrs.validators.optional(attrs.validators.ge(1)),
    )
    seed: int = attrs.field(
        default=0,
        converter=int,
        validator=[attrs.validators.ge(0), attrs.validators.lt(2**64)],
    )
    suite: str | None = attrs.field(
        default=None, validator=attrs.validators.optional(attrs.validators.in_(SUITE_NAMES))
    )
    i_max: int = attrs.field(default=DEFAULT_I_MAX, converter=int, validator=attrs.validators.ge(0))
    n_max: int | None = attrs.field(
        default=None, converter=attrs.converters.optional(int)
    )
    digits: int = attrs.field(default=DEFAULT_DIGITS, converter=int, validator=attrs.validators.ge(1))
    count: int | None = attrs.field(default=None, converter=attrs.converters.optional(int))
    input_path: str | None = attrs.field(
        default=None, validator=attrs.validators.optional(attrs.validators.instance_of(str))
    )
    output: str | None = attrs.field(
        default=None, validator=attrs.validators.optional(attrs.validators.instance_of(str))
    )
    format: str = attrs.field(
        default="json", converter=str.lower, validator=attrs.validators.in_(FORMATS)
    )

    def __attrs_post_init__(self) -> None:
        if self.k is None:
            self.k = default_k(self.p)
        if self.p == 2 and self.k < 2:  # noqa: PLR2004
            msg = f"Γ_k needs k ≥ 2 when p = 2, got {self.k = }"
            raise ValueError(msg)

    @classmethod
    def from_dict(cls, config: dict) -> Self:
        filtered = {
            f.name: config[f.name]
            for f in attrs.fields(cls)
            if f.name in config and config[f.name] is not None
        }
        return cls(**filtered)

    def to_dict(self) -> dict:
        out = attrs.asdict(self)
        out["prec"] = str(self.prec)
        return out
