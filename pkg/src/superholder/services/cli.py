"""Command-line surface.

Each subcommand maps to one lab operation and prints a sorted-key report.
Exit codes: 0 certified (or a plain computation), 1 usage or parse error,
2 refuted with a witness, 3 unresolved at the working precision.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Callable
from typing import NoReturn

from superholder.adapters import codec
from superholder.adapters.io_funcs import FileType
from superholder.adapters.io_sh import IOBase, IOWrapper
from superholder.core import commutant as cm
from superholder.core import mahler as mh
from superholder.core import phigamma as pg
from superholder.core import tate_colmez as tc
from superholder.core.config import FORMATS, RunConfig
from superholder.core.errors import (
    InsufficientPrecision,
    NotCommutant,
    NotPsiCompatible,
    ShLabError,
    TooFewPoints,
    UsageError,
)
from superholder.core.logger import get_fn_name, logger
from superholder.core.puiseux import PuiseuxSeries
from superholder.core.valuation import Verdict
from superholder.services.suites import run_suite

Report = tuple[dict, Verdict]
Command = Callable[[RunConfig, argparse.Namespace, IOBase], Report]


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        logger.error(message)
        raise UsageError(message)


# ---- inputs ----------------------------------------------------------


def _read_input(cfg: RunConfig, io_wrapper: IOBase) -> str | dict:
    if cfg.input_path is None:
        msg = "This subcommand reads its operand from --in"
        logger.error(msg)
        raise UsageError(msg)
    return io_wrapper.read(cfg.input_path, FileType.from_path(cfg.input_path))


def _read_series(cfg: RunConfig, io_wrapper: IOBase) -> PuiseuxSeries:
    raw = _read_input(cfg, io_wrapper)
    if isinstance(raw, dict):
        return codec.series_from_dict(raw)
    return codec.parse_series(raw, cfg.p, cfg.prec)


def _read_document(cfg: RunConfig, io_wrapper: IOBase) -> dict:
    data = codec.load_document(_read_input(cfg, io_wrapper))
    if not isinstance(data, dict):
        msg = f"{cfg.input_path} must hold a JSON object"
        logger.error(msg)
        raise UsageError(msg)
    return data


# ---- commands --------------------------------------------------------


def _witness(result: mh.MahlerVerdict) -> list[int] | None:
    return None if result.witness is None else list(result.witness)


def mahler(cfg: RunConfig, args: argparse.Namespace, io_wrapper: IOBase) -> Report:
    """
    Mahler coefficients of a tabulated function read from `--in`
    (`{"t": …, "table": [series, …]}`), up to `--n-max`. With `--lam`
    (and optionally `--mu`) the expansion is also run through the
    super-Hölder and Amice-type coefficient tests.
    """
    e = mh.mahler_coeffs(codec.function_from_dict(_read_document(cfg, io_wrapper)), cfg.n_max)
    report: dict = {"expansion": codec.expansion_to_dict(e)}
    if args.lam is None:
        return report, Verdict.CERTIFIED
    mu = args.mu or 0.0
    sh = mh.sh_test_mahler(e, args.lam, mu)
    w = mh.w_test_mahler(e, args.lam, mu)
    report["sh_test"] = {"verdict": sh.verdict.value, "witness": _witness(sh)}
    report["w_test"] = {"verdict": w.verdict.value, "witness": _witness(w)}
    return report, sh.verdict


def profile(cfg: RunConfig, args: argparse.Namespace, io_wrapper: IOBase) -> Report:
    """
    Γ_k-orbit floors of the series in `--in` over depths 0..`--i-max`, with
    the fitted (λ, μ). With `--lam`/`--mu` the floors are checked against
    that pair; otherwise the verdict records whether the fit is stable.
    """
    result = tc.asymptotic_profile(_read_series(cfg, io_wrapper), cfg.k, cfg.i_max)
    report = {"profile": codec.profile_to_dict(result)}
    if args.lam is not None:
        return report, result.passes(args.lam, args.mu or 0.0)
    return report, Verdict.CERTIFIED if result.stable else Verdict.UNRESOLVED


def trace(cfg: RunConfig, _args: argparse.Namespace, io_wrapper: IOBase) -> Report:
    """
    Normalized Tate trace T_n of the series in `--in`, with n = `--level`,
    alongside the full decomposition f = Σ (1+X)^i·a_i(f).
    """
    f = _read_series(cfg, io_wrapper)
    report = {
        "trace": codec.series_to_dict(tc.tate_trace(f, cfg.level)),
        "decomposition": codec.decomposition_to_dict(tc.colmez_decompose(f)),
    }
    return report, Verdict.CERTIFIED


def decomplete(cfg: RunConfig, _args: argparse.Namespace, io_wrapper: IOBase) -> Report:
    """
    Minimal n with the series in `--in` lying in E_n, cross-checked against
    the level read off its Γ_k-orbit profile.
    """
    result = tc.decomplete(_read_series(cfg, io_wrapper), cfg.k, cfg.i_max)
    report = {
        "n": result.n,
        "stabilization_index": result.stabilization_index,
        "classified": result.classified,
        "profile": None if result.profile is None else codec.profile_to_dict(result.profile),
    }
    if not result.consistent:
        return report, Verdict.REFUTED
    return report, Verdict.UNRESOLVED if result.classified is None else Verdict.CERTIFIED


def commutant(cfg: RunConfig, args: argparse.Namespace, io_wrapper: IOBase) -> Report:
    """
    `check`: whether the series in `--in` commutes with sampled γ_a.
    `solve`: recover (b, n) with u = γ_b(X^(p^n)), reading `--digits` digits of b;
    rejections are refutations carrying the reason and the first bad exponent.
    """
    u = _read_series(cfg, io_wrapper)
    if args.action == "check":
        result = cm.check_commute(u, cm.default_unit_samples(u.p, cfg.digits))
        report = {
            "consistent": result.consistent,
            "checked_to": str(result.checked_to),
            "a_digits": None if result.a is None else codec.padic_digits(result.a),
            "exponent": None if result.exponent is None else codec.number(result.exponent),
        }
        return report, result.verdict
    try:
        solution = cm.solve_commutant(u, cfg.digits)
    except NotCommutant as err:
        witness = err.witness
        return {"reason": err.reason, "witness": None if witness is None else str(witness)}, (
            Verdict.REFUTED
        )
    return codec.commutant_to_dict(solution), Verdict.CERTIFIED


def phigamma(cfg: RunConfig, args: argparse.Namespace, io_wrapper: IOBase) -> Report:
    """
    `gauge`: build the module P = U^(−1)φ(U), G_g = U^(−1)g(U) from the matrix
    `{"U": rows}` in `--in` and tabulate it on the depth samples.
    `validate`: check the cocycle and commutation identities of a module document.
    `profile`: fit the matrix super-Hölder profile of a module document.
    """
    data = _read_document(cfg, io_wrapper)
    if args.action == "gauge":
        if "U" not in data:
            msg = "phigamma gauge reads {\"U\": rows} from --in"
            logger.error(msg)
            raise UsageError(msg)
        module = pg.gauge_module(codec.matrix_from_rows(data["U"]), cfg.k)
        return codec.module_to_dict(module, pg.module_samples(module, cfg.i_max)), Verdict.CERTIFIED
    module, samples = codec.module_from_dict(data)
    if args.action == "validate":
        result = pg.validate_module(module, samples)
        report = {
            "cocycle": [[a, b, v.to_json()] for a, b, v in result.cocycle],
            "commutation": [[a, v.to_json()] for a, v in result.commutation],
            "determinants": [[a, v.to_json()] for a, v in result.determinants],
        }
        return report, result.verdict
    result = pg.matrix_sh_profile(module, cfg.i_max, inverse=args.inverse)
    return {"profile": codec.profile_to_dict(result)}, (
        Verdict.CERTIFIED if result.stable else Verdict.UNRESOLVED
    )


def psi_tower(cfg: RunConfig, args: argparse.Namespace, io_wrapper: IOBase) -> Report:
    """
    ψ-compatibility of the tower in `--in`, then the level test that each
    m_j is super-Hölder of level k + j; a failure names the first bad index.
    """
    tower = codec.tower_from_dict(_read_document(cfg, io_wrapper))
    try:
        tc.validate_tower(tower)
    except NotPsiCompatible as err:
        return {"psi_compatible": False, "index": err.index}, Verdict.REFUTED
    result = tc.psi_tower_sh_test(tower, cfg.k, args.method, cfg.i_max)
    return {"psi_compatible": True, "index": result.index}, result.verdict


def suite(cfg: RunConfig, _args: argparse.Namespace, _io_wrapper: IOBase) -> Report:
    """
    Seeded property battery `--name` at prime `--p`, `--count` cases; the
    report carries the PRNG name and seed, per-property counts and failures.
    """
    if cfg.suite is None:
        msg = "suite needs --name"
        logger.error(msg)
        raise UsageError(msg)
    result = run_suite(cfg.suite, cfg.p, cfg.seed, cfg.count, cfg.k)
    return result.to_report(), result.verdict


COMMANDS: dict[str, Command] = {
    "mahler": mahler,
    "profile": profile,
    "trace": trace,
    "decomplete": decomplete,
    "commutant": commutant,
    "phigamma": phigamma,
    "psi-tower": psi_tower,
    "suite": suite,
}


# ---- parser ----------------------------------------------------------


def _common_flags() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="YAML run configuration; flags override it")
    common.add_argument("--p", type=int)
    common.add_argument("--prec", help="truncation exponent, e.g. 64 or 15/3")
    common.add_argument("--level", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--in", dest="input_path")
    common.add_argument("--out", dest="output")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--suite", "--name", dest="suite")
    common.add_argument("--i-max", dest="i_max", type=int)
    common.add_argument("--n-max", dest="n_max", type=int)
    common.add_argument("--digits", type=int)
    common.add_argument("--count", type=int)
    common.add_argument("--lam", type=float)
    common.add_argument("--mu", type=float)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = _Parser(prog="superholder", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("mahler", "profile", "trace", "decomplete", "suite"):
        sub.add_parser(name, parents=[common])
    commutant_parser = sub.add_parser("commutant", parents=[common])
    commutant_parser.add_argument("action", choices=("check", "solve"))
    phigamma_parser = sub.add_parser("phigamma", parents=[common])
    phigamma_parser.add_argument("action", choices=("gauge", "validate", "profile"))
    phigamma_parser.add_argument("--inverse", action="store_true")
    tower_parser = sub.add_parser("psi-tower", parents=[common])
    tower_parser.add_argument("--method", choices=("divisibility", "profile"), default="divisibility")
    return parser


def load_config(args: argparse.Namespace, io_wrapper: IOBase) -> RunConfig:
    """attrs defaults, then the YAML file, then flags."""
    layered: dict = {}
    if args.config is not None:
        from_file = io_wrapper.read(args.config, FileType.YAML)
        if not isinstance(from_file, dict):
            msg = f"{args.config} must hold a mapping"
            logger.error(msg)
            raise UsageError(msg)
        layered.update({("suite" if key == "name" else key): v for key, v in from_file.items()})
    layered.update({key: v for key, v in vars(args).items() if v is not None})
    try:
        return RunConfig.from_dict(layered)
    except (TypeError, ValueError) as err:
        msg = f"Invalid run configuration: {err}"
        logger.error(msg)
        raise UsageError(msg) from err


def _emit(report: dict, cfg: RunConfig, io_wrapper: IOBase) -> None:
    text = codec.render(report, cfg.format)
    if cfg.output is None:
        io_wrapper.emit(text)
    else:
        io_wrapper.write(text if text.endswith("\n") else text + "\n", cfg.output, FileType.TEXT)


def run_subcommand(argv: list[str], io_wrapper: IOBase | None = None) -> int:
    io_wrapper = io_wrapper or IOWrapper()
    logger.info(f"{get_fn_name()}. {argv = }")
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args, io_wrapper)
    except (UsageError, OSError) as err:
        sys.stderr.write(f"usage error: {err}\n")
        return 1
    try:
        report, verdict = COMMANDS[args.command](cfg, args, io_wrapper)
    except (InsufficientPrecision, TooFewPoints) as err:
        report, verdict = {"error": str(err)}, Verdict.UNRESOLVED
    except (ShLabError, OSError) as err:
        sys.stderr.write(f"error: {err}\n")
        return 1
    except (KeyError, TypeError) as err:
        logger.error(f"Malformed input document: {err!r}")
        sys.stderr.write(f"error: malformed input document ({err!r})\n")
        return 1
    _emit({"command": args.command, **report, "verdict": verdict.value}, cfg, io_wrapper)
    return verdict.exit_code


def main() -> None:
    sys.exit(run_subcommand(sys.argv[1:]))
