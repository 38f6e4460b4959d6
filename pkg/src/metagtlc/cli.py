"""Command-line driver.

Exit codes: 0 success, 1 static/syntax/runtime diagnostic, 2 blame during
metaevaluation, 3 fuel exhausted, 4 internal defect (a stuck term or a
validator failure, which a well-typed program can never produce).
"""

from __future__ import annotations

import argparse
import json
import sys

from .compiler import compile_meta
from .evaluator import (
    DEFAULT_FUEL,
    BlameResult,
    CodeResult,
    EvalRuntimeError,
    StuckResult,
    TimeoutResult,
    meta_eval,
    trace,
)
from .frontend import (
    Diagnostic,
    ParseError,
    from_blame,
    from_parse_error,
    from_runtime_error,
    from_type_error,
    diagnostic_to_json,
    load_program,
    render_diagnostic,
)
from .syntax import (
    EMPTY_CTX,
    format_meta_type,
    format_obj_type,
    pretty_meta,
    pretty_obj,
)
from .typecheck import TypeCheckError, ValidationError, type_cc_code, type_meta

EXIT_OK = 0
EXIT_STATIC = 1
EXIT_BLAME = 2
EXIT_TIMEOUT = 3
EXIT_DEFECT = 4


def _emit_diagnostic(diag: Diagnostic, sources, fmt: str) -> None:
    if fmt == "json":
        print(diagnostic_to_json(diag), file=sys.stderr)
    else:
        print(render_diagnostic(diag, sources), file=sys.stderr)


def _load(path: str, fmt: str):
    sources = {}
    try:
        loaded = load_program(path)
        return loaded, None
    except ParseError as err:
        _emit_diagnostic(from_parse_error(err), sources, fmt)
    except TypeCheckError as err:
        _emit_diagnostic(from_type_error(err), sources, fmt)
    return None, EXIT_STATIC


def cmd_check(args) -> int:
    loaded, code = _load(args.file, args.format)
    if loaded is None:
        return code
    try:
        ty = type_meta(EMPTY_CTX, loaded.term)
    except TypeCheckError as err:
        _emit_diagnostic(from_type_error(err), loaded.sources, args.format)
        return EXIT_STATIC
    if args.format == "json":
        print(json.dumps({"status": "ok", "type": format_meta_type(ty)}))
    else:
        print(format_meta_type(ty))
    return EXIT_OK


def cmd_compile(args) -> int:
    loaded, code = _load(args.file, args.format)
    if loaded is None:
        return code
    try:
        cc, ty = compile_meta(EMPTY_CTX, loaded.term)
    except TypeCheckError as err:
        _emit_diagnostic(from_type_error(err), loaded.sources, args.format)
        return EXIT_STATIC
    except ValidationError as err:
        print(f"internal defect: {err}", file=sys.stderr)
        return EXIT_DEFECT
    if args.emit_cc:
        if args.format == "json":
            print(json.dumps({"type": format_meta_type(ty), "term": pretty_meta(cc)}))
        else:
            print(pretty_meta(cc))
    else:
        print(format_meta_type(ty))
    return EXIT_OK


def cmd_run(args) -> int:
    loaded, code = _load(args.file, args.format)
    if loaded is None:
        return code
    try:
        result = meta_eval(loaded.term, fuel=args.fuel)
    except TypeCheckError as err:
        _emit_diagnostic(from_type_error(err), loaded.sources, args.format)
        return EXIT_STATIC
    except EvalRuntimeError as err:
        _emit_diagnostic(from_runtime_error(err), loaded.sources, args.format)
        return EXIT_STATIC
    except ValidationError as err:
        print(f"internal defect: {err}", file=sys.stderr)
        return EXIT_DEFECT
    match result:
        case CodeResult(term, ty):
            # the printed program is revalidated as plain typed object code
            checked = type_cc_code(EMPTY_CTX, term, expected=ty)
            if checked != ty:
                print("internal defect: output failed revalidation", file=sys.stderr)
                return EXIT_DEFECT
            if args.format == "json":
                print(json.dumps({
                    "status": "ok",
                    "objectCode": pretty_obj(term),
                    "objectType": format_obj_type(ty),
                }))
            else:
                print(f"{pretty_obj(term)} : {format_obj_type(ty)}")
            return EXIT_OK
        case BlameResult(label, expected, actual):
            _emit_diagnostic(from_blame(label, expected, actual), loaded.sources, args.format)
            return EXIT_BLAME
        case TimeoutResult(steps):
            print(f"gave up after {steps} steps; the metaprogram may diverge "
                  "(raise --fuel, or 0 for no limit)", file=sys.stderr)
            return EXIT_TIMEOUT
        case StuckResult(term):
            print(f"internal defect: evaluation got stuck at {pretty_meta(term)}",
                  file=sys.stderr)
            return EXIT_DEFECT
    return EXIT_DEFECT


def cmd_trace(args) -> int:
    loaded, code = _load(args.file, args.format)
    if loaded is None:
        return code
    try:
        tr = trace(loaded.term, fuel=args.fuel)
    except TypeCheckError as err:
        _emit_diagnostic(from_type_error(err), loaded.sources, args.format)
        return EXIT_STATIC
    except EvalRuntimeError as err:
        _emit_diagnostic(from_runtime_error(err), loaded.sources, args.format)
        return EXIT_STATIC
    except ValidationError as err:
        print(f"internal defect: {err}", file=sys.stderr)
        return EXIT_DEFECT
    for i, (term, ty) in enumerate(tr.steps):
        if args.format == "json":
            print(json.dumps({
                "step": i, "term": pretty_meta(term), "type": format_meta_type(ty),
            }))
        else:
            print(f"[{i}] {pretty_meta(term)}  :  {format_meta_type(ty)}")
    match tr.result:
        case CodeResult(_, _):
            return EXIT_OK
        case BlameResult(label, expected, actual):
            _emit_diagnostic(from_blame(label, expected, actual), loaded.sources, args.format)
            return EXIT_BLAME
        case TimeoutResult(steps):
            print(f"gave up after {steps} steps", file=sys.stderr)
            return EXIT_TIMEOUT
        case StuckResult(_):
            print("internal defect: evaluation got stuck", file=sys.stderr)
            return EXIT_DEFECT
    return EXIT_DEFECT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metagtlc",
        description="Check, compile, and run staged metaprograms that "
                    "generate typed object code.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="type-check a program and print its type")
    p_check.add_argument("file")

    p_compile = sub.add_parser("compile", help="insert casts and print the compiled form")
    p_compile.add_argument("file")
    p_compile.add_argument("--emit-cc", action="store_true",
                           help="print the cast-calculus term instead of its type")

    p_run = sub.add_parser("run", help="metaevaluate and print the generated object code")
    p_run.add_argument("file")
    p_run.add_argument("--fuel", type=int, default=DEFAULT_FUEL,
                       help="maximum reduction steps; 0 means no limit")

    p_trace = sub.add_parser("trace", help="run and print every reduction step")
    p_trace.add_argument("file")
    p_trace.add_argument("--fuel", type=int, default=DEFAULT_FUEL)

    for p in (p_check, p_compile, p_run, p_trace):
        p.add_argument("--format", choices=("text", "json"), default="text")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    commands = {
        "check": cmd_check,
        "compile": cmd_compile,
        "run": cmd_run,
        "trace": cmd_trace,
    }
    return commands[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
