"""Command-line interface.

Exit codes: 0 success / analysis-positive, 1 analysis-negative (invalid
document, non-equivalent, divergence, failed check), 2 usage or parse
errors. Diagnostics go to stderr, results to stdout. With ``--json`` each
result is emitted as one JSON record per line.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .causality import (
    causally_equivalent,
    hb_graph,
    linearize,
    swap_equiv_oracle,
)
from .explorer import distinctness_check, explore
from .parsing import ParseError, name_sort_key
from .races import all_races, orphans, race_set, variant
from .simulator import (
    DivergenceError,
    ProgramError,
    parse_program,
    replay_prefix,
    run_deterministic,
    run_random,
)
from .terms import render_term
from .traces import (
    Interleaving,
    Trace,
    parse_interleaving,
    parse_trace,
    serialize_interleaving,
    serialize_trace,
    validate_interleaving,
    validate_trace,
)

OK, FAIL, USAGE = 0, 1, 2


class CliError(Exception):
    def __init__(self, message: str, code: int = USAGE):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def _load_trace(path: str) -> Trace:
    try:
        return parse_trace(_read(path))
    except ParseError as exc:
        raise CliError(f"{path}: {exc}") from exc


def _load_interleaving(path: str) -> Interleaving:
    try:
        return parse_interleaving(_read(path))
    except ParseError as exc:
        raise CliError(f"{path}: {exc}") from exc


def _load_program(path: str):
    try:
        return parse_program(_read(path))
    except (ParseError, ProgramError) as exc:
        raise CliError(f"{path}: {exc}") from exc


def _load_document(path: str):
    """Pick trace vs interleaving by extension (.trace / .itl)."""
    if path.endswith(".itl"):
        return _load_interleaving(path)
    if path.endswith(".trace"):
        return _load_trace(path)
    raise CliError(f"{path}: expected a .trace or .itl file")


def _emit(args, record: dict, text: str) -> None:
    print(json.dumps(record, sort_keys=True) if args.json else text)


def _require_valid_trace(path: str) -> Trace:
    t = _load_trace(path)
    bad = validate_trace(t)
    if bad is not None:
        raise CliError(f"{path}: invalid trace: {bad}", FAIL)
    return t


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    doc = _load_document(args.file)
    bad = (
        validate_interleaving(doc)
        if isinstance(doc, Interleaving)
        else validate_trace(doc)
    )
    if bad is None:
        _emit(args, {"result": "ok"}, "ok")
        return OK
    _emit(
        args,
        {"result": "violation", "condition": bad.condition, "where": bad.where,
         "detail": bad.detail},
        str(bad),
    )
    return FAIL


def cmd_hb(args) -> int:
    t = _require_valid_trace(args.file)
    graph = hb_graph(t)
    for (src, dst), label in sorted(
        graph.labels.items(),
        key=lambda kv: (name_sort_key(kv[0][0].pid), kv[0][0].index,
                        name_sort_key(kv[0][1].pid), kv[0][1].index),
    ):
        text = f"{src.pid}[{src.index}] -> {dst.pid}[{dst.index}] ({label})"
        _emit(args, {"from": list(src), "to": list(dst), "kind": label}, text)
    if args.pairs:
        for src, dst in sorted(
            graph.reachable_pairs(),
            key=lambda p: (name_sort_key(p[0].pid), p[0].index,
                           name_sort_key(p[1].pid), p[1].index),
        ):
            text = f"{src.pid}[{src.index}] ~> {dst.pid}[{dst.index}]"
            _emit(args, {"pair": [list(src), list(dst)]}, text)
    return OK


def cmd_equiv(args) -> int:
    s1 = _load_interleaving(args.a)
    s2 = _load_interleaving(args.b)
    for path, s in ((args.a, s1), (args.b, s2)):
        bad = validate_interleaving(s)
        if bad is not None:
            raise CliError(f"{path}: invalid interleaving: {bad}", FAIL)
    equivalent = causally_equivalent(s1, s2)
    if args.oracle:
        by_swaps = swap_equiv_oracle(s1, s2)
        if by_swaps != equivalent:
            raise CliError(
                f"oracle disagrees: trace-equality says {equivalent}, "
                f"swap search says {by_swaps}",
                FAIL,
            )
    _emit(
        args,
        {"equivalent": equivalent},
        "equivalent" if equivalent else "not equivalent",
    )
    return OK if equivalent else FAIL


def _racer_brace_list(tags) -> str:
    return "{" + ", ".join(tags) + "}"


def cmd_races(args) -> int:
    t = _require_valid_trace(args.file)
    reports = (
        [race_set(t, args.message)] if args.message is not None else all_races(t)
    )
    for rep in reports:
        pid, idx = rep.receive
        racers = rep.sorted_racers()
        if args.message is not None and not args.explain:
            _emit(args, {"receive": rep.subject, "racers": racers},
                  _racer_brace_list(racers))
        else:
            text = f"{pid}[{idx}] rec({rep.subject}): races = {_racer_brace_list(racers)}"
            _emit(args, {"receive": rep.subject, "at": [pid, idx], "racers": racers},
                  text)
        if args.explain:
            for c in rep.candidates:
                text = (
                    f"  {c.tag} (from {c.sender}): match={'yes' if c.matches else 'no'}"
                    f", received-earlier={'yes' if c.already_received else 'no'}"
                    f", hb-excluded={'yes' if c.hb_excluded else 'no'}"
                    f", blocked-by={c.blocked_by or '-'}"
                    f" => {c.reason()}"
                )
                _emit(
                    args,
                    {"candidate": c.tag, "sender": c.sender, "matches": c.matches,
                     "already_received": c.already_received,
                     "hb_excluded": c.hb_excluded, "blocked_by": c.blocked_by,
                     "infeasible": c.infeasible, "in_race_set": c.in_race_set},
                    text,
                )
    return OK


def cmd_variant(args) -> int:
    t = _require_valid_trace(args.file)
    try:
        v = variant(t, args.receive, args.with_tag)
    except ValueError as exc:
        raise CliError(str(exc), FAIL) from exc
    text = serialize_trace(v.trace)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        _emit(args, {"written": args.output}, f"wrote {args.output}")
    else:
        sys.stdout.write(text)
    return OK


def cmd_orphans(args) -> int:
    t = _require_valid_trace(args.file)
    tags = sorted(orphans(t), key=name_sort_key)
    _emit(args, {"orphans": tags}, _racer_brace_list(tags))
    return OK


def cmd_simulate(args) -> int:
    program = _load_program(args.prog)
    t, outcome = run_random(program, args.seed, args.max_steps)
    text = serialize_trace(t)
    if args.emit_trace:
        Path(args.emit_trace).write_text(text, encoding="utf-8")
    _emit(args, {"outcome": str(outcome), "trace": text}, f"outcome: {outcome}")
    if not args.json and not args.emit_trace:
        sys.stdout.write(text)
    return OK


def cmd_replay(args) -> int:
    program = _load_program(args.prog)
    prefix = _require_valid_trace(args.prefix)
    try:
        state, _ = replay_prefix(program, prefix)
    except DivergenceError as exc:
        _emit(args, {"result": "divergence", "detail": str(exc)}, str(exc))
        return FAIL
    if args.cont:
        t, outcome = run_deterministic(state, args.max_steps)
        _emit(args, {"outcome": str(outcome), "trace": serialize_trace(t)},
              f"outcome: {outcome}")
        if not args.json:
            sys.stdout.write(serialize_trace(t))
    else:
        _emit(args, {"result": "replayed", "trace": serialize_trace(state.trace())},
              "replayed prefix")
        if not args.json:
            sys.stdout.write(serialize_trace(state.trace()))
    return OK


def cmd_explore(args) -> int:
    program = _load_program(args.prog)
    report = explore(program, seed=args.seed, max_steps=args.max_steps,
                     max_traces=args.max_traces)
    bad = distinctness_check(report)
    if bad is not None:
        raise CliError(f"distinctness check failed: {bad}", FAIL)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for n, key in enumerate(report.order, start=1):
            (out / f"trace-{n:04d}.trace").write_text(key, encoding="utf-8")
        (out / "report.txt").write_text(report.render(), encoding="utf-8")
    if args.check_oracle:
        from .simulator import enumerate_executions

        expected, limited = enumerate_executions(program, args.max_steps)
        if limited:
            raise CliError(f"oracle hit the step limit on {limited} branches", FAIL)
        if set(expected) != set(report.traces):
            missing = sorted(set(expected) - set(report.traces))
            extra = sorted(set(report.traces) - set(expected))
            raise CliError(
                f"exploration mismatch: {len(missing)} missing, {len(extra)} extra",
                FAIL,
            )
        _emit(args, {"oracle": "ok", "traces": len(expected)},
              f"oracle agreement: {len(expected)} traces")
    _emit(args, {"traces": len(report.traces), "bounded": report.bounded},
          report.render())
    return OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="racetrace",
        description="Message-race analysis and exploration for actor traces",
    )
    parser.add_argument("--json", action="store_true",
                        help="machine-readable output, one JSON record per line")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a .trace or .itl file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("hb", help="print happened-before edges of a trace")
    p.add_argument("file")
    p.add_argument("--pairs", action="store_true",
                   help="also print the full reachability relation")
    p.set_defaults(func=cmd_hb)

    p = sub.add_parser("equiv", help="decide causal equivalence of interleavings")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--oracle", action="store_true",
                   help="cross-check with the swap-search oracle")
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("races", help="race sets of a trace's receives")
    p.add_argument("file")
    p.add_argument("--message", metavar="TAG", help="only this received tag")
    p.add_argument("--explain", action="store_true",
                   help="per-candidate condition table")
    p.set_defaults(func=cmd_races)

    p = sub.add_parser("variant", help="compute a race variant")
    p.add_argument("file")
    p.add_argument("--receive", required=True, metavar="TAG")
    p.add_argument("--with", dest="with_tag", required=True, metavar="TAG")
    p.add_argument("-o", "--output", metavar="OUT")
    p.set_defaults(func=cmd_variant)

    p = sub.add_parser("orphans", help="sent-but-never-received tags")
    p.add_argument("file")
    p.set_defaults(func=cmd_orphans)

    p = sub.add_parser("simulate", help="run a program with a random scheduler")
    p.add_argument("prog")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=10000)
    p.add_argument("--emit-trace", metavar="FILE")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="drive a program along a trace prefix")
    p.add_argument("prog")
    p.add_argument("--prefix", required=True, metavar="FILE")
    p.add_argument("--continue", dest="cont", action="store_true",
                   help="continue deterministically after the prefix")
    p.add_argument("--max-steps", type=int, default=10000)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("explore", help="race-variant-driven state-space exploration")
    p.add_argument("prog")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=10000)
    p.add_argument("--max-traces", type=int, default=10000)
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--check-oracle", action="store_true",
                   help="compare against exhaustive enumeration (small programs)")
    p.set_defaults(func=cmd_explore)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except (ParseError, ProgramError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
