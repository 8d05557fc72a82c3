"""Command line driver: ``periodscope <command> [--fixture NAME | --input FILE] ...``.

Every command prints one JSON document with a ``schema_version`` field.
Exit codes: 0 success, 2 refusal, 1 error (the error is also JSON).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Callable, Sequence

from . import dmod, pipeline
from .pipeline import Family, PipelineError, Refusal, SCHEMA_VERSION

COMMANDS: dict[str, Callable[..., dict]] = {
    "validate": lambda f, a: f.validate(),
    "gkz": lambda f, a: {"gkz": pipeline.stage_gkz(f)},
    "pf": lambda f, a: {"pf": pipeline.stage_pf(f)},
    "rank": lambda f, a: {"rank": pipeline.stage_rank(f)},
    "discriminant": lambda f, a: {"discriminant": pipeline.stage_discriminant(f)},
    "connection": lambda f, a: {"connection": pipeline.stage_connection(f)},
    "monodromy": lambda f, a: {"monodromy": pipeline.stage_monodromy(f, a.chart)},
    "lmhs": lambda f, a: {"lmhs": pipeline.stage_lmhs(f)},
    "yukawa": lambda f, a: {"yukawa": pipeline.stage_yukawa(f)},
    "moduli": lambda f, a: {"moduli": pipeline.stage_moduli(f)},
    "degree": lambda f, a: {"degree": pipeline.stage_degree(f)},
    "report": lambda f, a: {"report": pipeline.stage_report(f)},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise PipelineError(f"usage: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="periodscope", description="Exact period-map pipeline for toric Calabi-Yau families.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("name", nargs="?", help="fixture name (shorthand for --fixture)")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--fixture", help=f"built-in fixture: {', '.join(pipeline.FIXTURES)}")
    src.add_argument("--input", help="TOML file with the same schema as the fixtures")
    p.add_argument("--chart", help="chart name for the monodromy command")
    p.add_argument("--max-order", type=int, default=5, help="order cap for pairing relations (default 5)")
    p.add_argument("--seed", type=int, default=0, help="selects the order of generic probe curves (default 0)")
    p.add_argument("--out", help="write the JSON document to this file")
    return p


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def _family(args: argparse.Namespace) -> Family:
    if args.input:
        fx = pipeline.parse_fixture(pipeline.read_toml(args.input))
    else:
        name = args.fixture or args.name
        if not name:
            raise PipelineError("no input: give a fixture name or --input FILE")
        fx = pipeline.load_fixture(name)
    if args.max_order < 3:
        raise PipelineError("--max-order must be at least 3")
    return Family(fx, seed=args.seed, max_order=args.max_order)


def run(argv: Sequence[str]) -> tuple[int, dict, str | None]:
    """Run one command; returns (exit code, JSON document, --out path or None)."""
    base: dict[str, Any] = {"schema_version": SCHEMA_VERSION}
    out = None
    try:
        args = build_parser().parse_args(list(argv))
        out = args.out
        if args.name and args.fixture:
            raise PipelineError("usage: give the fixture either positionally or with --fixture")
        base["command"] = args.command
        fam = _family(args)
        base["family"] = fam.name
        base.update(COMMANDS[args.command](fam, args))
        return 0, base, out
    except Refusal as exc:
        base["refused"] = {"message": str(exc), **exc.details}
        return 2, base, out
    except PipelineError as exc:
        kind = "usage" if str(exc).startswith("usage") else "input"
        base["error"] = {"type": kind, "message": str(exc), **exc.details}
        return 1, base, out
    except dmod.ResourceError as exc:
        base["error"] = {"type": "resource", "message": str(exc)}
        return 1, base, out
    except (ValueError, ArithmeticError, LookupError) as exc:
        base["error"] = {"type": type(exc).__name__, "message": str(exc)}
        return 1, base, out


def main(argv: Sequence[str] | None = None) -> int:
    code, doc, out = run(sys.argv[1:] if argv is None else argv)
    text = dumps(doc)
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
