"""Command line entry points.

Exit codes: 0 success, 1 semantic negative (no models, failed check, replay
mismatch), 2 usage or input error, 3 resource cap exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import analyze
from .caps import Caps, caps_from_env
from .errors import (
    CapExceededError,
    EngineError,
    ParseError,
    SearchExhaustedError,
    UnfoundedOverflowError,
)
from .grounding import ground, render_ground_program
from .model import parse_atom_list, render_interpretation, sorted_atoms
from .semantics import is_answer_set, search_answer_sets
from .session import Session, SessionSettings, replay_script, session_save
from .source import parse

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_CAP = 3


def _read_program(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as err:
        raise SystemExit(f"cannot read {path}: {err}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acpstep",
        description="Ground, solve, check, analyze, replay, and serve "
        "abstract-constraint answer-set programs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("ground", help="parse and ground a program")
    g.add_argument("file")
    g.add_argument("--emit-ground", action="store_true", help="print the ground program")

    s = sub.add_parser("solve", help="enumerate answer sets")
    s.add_argument("file")
    s.add_argument("--max-models", type=int, default=0, help="0 means all")
    s.add_argument("--atom-cap", type=int, default=None)

    c = sub.add_parser("check", help="decide whether an interpretation is an answer set")
    c.add_argument("file")
    c.add_argument("--interpretation", required=True, help='e.g. "a,b(1)"')
    c.add_argument(
        "--strategy",
        choices=("auto", "unfounded", "condition-o"),
        default="auto",
    )

    a = sub.add_parser("analyze", help="dependency and fragment analysis")
    a.add_argument("file")

    r = sub.add_parser("replay", help="replay a step script against a program")
    r.add_argument("file")
    r.add_argument("--script", required=True)
    r.add_argument("--expect", help="golden state payload file to diff against")
    r.add_argument("--save", help="write the resulting session to a file")

    v = sub.add_parser("serve", help="start the HTTP/WebSocket service")
    v.add_argument("--port", type=int, default=8073)
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--static", help="directory with the web client build")
    return parser


def _caps(args) -> Caps:
    caps = caps_from_env()
    atom_cap = getattr(args, "atom_cap", None)
    if atom_cap is not None:
        caps = Caps(
            enumeration=caps.enumeration,
            atoms=atom_cap,
            subsets=caps.subsets,
            unfounded=caps.unfounded,
            ground_instances=caps.ground_instances,
            search_nodes=caps.search_nodes,
        )
    return caps


def cmd_ground(args) -> int:
    gr = ground(parse(_read_program(args.file)), _caps(args))
    if args.emit_ground:
        print(render_ground_program(gr))
    else:
        print(f"{len(gr.program)} ground rules from {len(gr.source.statements)} statements")
    for note in gr.diagnostics:
        print(f"warning: {note}", file=sys.stderr)
    return EXIT_OK


def cmd_solve(args) -> int:
    caps = _caps(args)
    gr = ground(parse(_read_program(args.file)), caps)
    limit = args.max_models if args.max_models > 0 else None
    models = list(search_answer_sets(gr.program, caps=caps, max_models=limit))
    for m in sorted(models, key=lambda s: (len(s), sorted_atoms(s))):
        print(render_interpretation(m))
    return EXIT_OK if models else EXIT_NEGATIVE


def cmd_check(args) -> int:
    caps = _caps(args)
    gr = ground(parse(_read_program(args.file)), caps)
    interp = parse_atom_list(args.interpretation)
    report = is_answer_set(gr.program, interp, caps, strategy=args.strategy)
    print(("answer set" if report.is_answer_set else "not an answer set"))
    if not report.is_answer_set:
        print(report.describe())
    return EXIT_OK if report.is_answer_set else EXIT_NEGATIVE


def cmd_analyze(args) -> int:
    gr = ground(parse(_read_program(args.file)), _caps(args))
    print(json.dumps(analyze(gr.program, _caps(args)), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_replay(args) -> int:
    caps = _caps(args)
    session = Session(_read_program(args.file), SessionSettings(caps=caps))
    script = json.loads(Path(args.script).read_text())
    if not isinstance(script, list):
        raise EngineError("step script must be a JSON array of actions")
    payloads = replay_script(session, script)
    if args.save:
        Path(args.save).write_bytes(session_save(session))
    rendered = json.dumps(payloads, indent=1, sort_keys=True)
    if args.expect:
        expected = json.dumps(
            json.loads(Path(args.expect).read_text()), indent=1, sort_keys=True
        )
        if rendered != expected:
            print("replay diverges from the expected states", file=sys.stderr)
            _print_diff(expected, rendered)
            return EXIT_NEGATIVE
        print(f"replay matches {args.expect} ({len(payloads)} states)")
        return EXIT_OK
    print(rendered)
    return EXIT_OK


def _print_diff(expected: str, actual: str) -> None:
    import difflib

    for line in difflib.unified_diff(
        expected.splitlines(), actual.splitlines(), "expected", "actual", lineterm=""
    ):
        print(line, file=sys.stderr)


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    static = Path(args.static) if args.static else _default_static()
    app = create_app(static_dir=static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def _default_static():
    bundled = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
    return bundled if bundled.is_dir() else None


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    commands = {
        "ground": cmd_ground,
        "solve": cmd_solve,
        "check": cmd_check,
        "analyze": cmd_analyze,
        "replay": cmd_replay,
        "serve": cmd_serve,
    }
    try:
        return commands[args.command](args)
    except ParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (CapExceededError, SearchExhaustedError, UnfoundedOverflowError) as err:
        print(f"cap exhausted: {err}", file=sys.stderr)
        return EXIT_CAP
    except EngineError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
