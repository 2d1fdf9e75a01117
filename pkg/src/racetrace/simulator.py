"""A deterministic toy actor language that records traces as it runs.

Programs consist of function definitions whose bodies are statements:
variable binds, ``spawn f(args)``, ``send term to pid``, selective
``receive`` with pattern/guard clauses, and bare value expressions. Local
steps (binds of plain terms, value expressions) execute silently; the global
actions -- spawn, send, receive -- are scheduled one at a time and recorded.

Scheduling realizes message delivery: a send enqueues at the target mailbox
immediately, so per-sender FIFO holds by construction and cross-sender
mailbox orders are explored by reordering sends. A receive consumes the
oldest mailbox message matching its constraint.

Names are hierarchical and schedule-invariant: the initial process is
``p1``, the k-th process spawned by P is ``P.k``, and the k-th message sent
by P carries tag ``P.k``. Two executions that are trace-equal therefore
serialize byte-identically.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Union

from .parsing import (
    ParseError,
    TokenStream,
    name_sort_key,
    parse_guard,
    parse_pattern,
    tokenize,
)
from .terms import (
    Atom,
    Clause,
    Constraint,
    GTrue,
    Int,
    Lst,
    Pattern,
    PidLit,
    TagLit,
    Term,
    Tup,
    Var,
    Wildcard,
    eval_guard,
    match_pattern,
    pattern_vars,
    render_clause,
    render_guard,
    render_term,
)
from .traces import Action, Pid, Rec, Send, Spawn, Tag, Trace


class ProgramError(Exception):
    """Static error in a program (unknown function, unbound variable, ...)."""


class SimulationError(Exception):
    """Dynamic misuse of the simulator (stepping a non-enabled pid, ...)."""


class DivergenceError(Exception):
    """The program's behavior does not follow the replayed prefix."""

    def __init__(self, index: int, message: str):
        super().__init__(f"divergence at prefix event {index}: {message}")
        self.index = index


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpawnExpr:
    fname: str
    args: tuple[Pattern, ...]


@dataclass(frozen=True)
class BindStmt:
    var: Optional[str]  # None for a bare spawn statement
    expr: Union[SpawnExpr, Pattern]


@dataclass(frozen=True)
class SendStmt:
    value: Pattern
    target: Pattern  # Var or PidLit


@dataclass(frozen=True)
class ReceiveStmt:
    cs: Constraint
    bodies: tuple[tuple["Stmt", ...], ...]  # one body per clause


@dataclass(frozen=True)
class ExprStmt:
    value: Pattern


Stmt = Union[BindStmt, SendStmt, ReceiveStmt, ExprStmt]


@dataclass(frozen=True)
class FunDef:
    name: str
    params: tuple[str, ...]
    body: tuple[Stmt, ...]


@dataclass(frozen=True)
class Program:
    defs: dict[str, FunDef]
    main: str


# ---------------------------------------------------------------------------
# Program parsing
# ---------------------------------------------------------------------------


def parse_program(text: str) -> Program:
    ts = TokenStream(tokenize(text))
    ts.expect_atom("program")
    ts.expect_sym("{")
    ts.expect_atom("main")
    main = ts.expect_atom().text
    defs: dict[str, FunDef] = {}
    counter = [0]
    while ts.at_atom("def"):
        ts.next()
        name_tok = ts.expect_atom()
        params = _parse_params(ts)
        ts.expect_sym("{")
        body = _parse_stmts(ts, counter)
        ts.expect_sym("}")
        if name_tok.text in defs:
            raise ParseError(f"function {name_tok.text!r} defined twice",
                             name_tok.line, name_tok.col)
        defs[name_tok.text] = FunDef(name_tok.text, params, body)
    ts.expect_sym("}")
    tok = ts.peek()
    if tok.kind != "eof":
        raise ParseError(f"unexpected trailing input {tok.text!r}", tok.line, tok.col)
    program = Program(defs, main)
    check_program(program)
    return program


def _parse_params(ts: TokenStream) -> tuple[str, ...]:
    ts.expect_sym("(")
    params: list[str] = []
    if not ts.at_sym(")"):
        while True:
            tok = ts.peek()
            if tok.kind != "var":
                raise ParseError(f"expected a parameter name, found {tok.text!r}",
                                 tok.line, tok.col)
            params.append(ts.next().text)
            if not ts.accept_sym(","):
                break
    ts.expect_sym(")")
    return tuple(params)


def _parse_stmts(ts: TokenStream, counter: list[int]) -> tuple[Stmt, ...]:
    stmts: list[Stmt] = []
    if ts.at_sym("}"):
        return ()
    stmts.append(_parse_stmt(ts, counter))
    while ts.accept_sym(";"):
        stmts.append(_parse_stmt(ts, counter))
    return tuple(stmts)


def _parse_stmt(ts: TokenStream, counter: list[int]) -> Stmt:
    tok = ts.peek()
    if tok.kind == "var" and ts.peek(1).kind == "sym" and ts.peek(1).text == "=":
        ts.next()
        ts.next()
        if ts.at_atom("spawn"):
            return BindStmt(tok.text, _parse_spawn_expr(ts))
        return BindStmt(tok.text, parse_pattern(ts))
    if ts.at_atom("spawn"):
        return BindStmt(None, _parse_spawn_expr(ts))
    if ts.at_atom("send"):
        ts.next()
        value = parse_pattern(ts)
        ts.expect_atom("to")
        target = parse_pattern(ts)
        if not isinstance(target, (Var, PidLit)):
            raise ParseError("send target must be a variable or pid literal",
                             tok.line, tok.col)
        return SendStmt(value, target)
    if ts.at_atom("receive"):
        ts.next()
        ts.expect_sym("{")
        clauses: list[Clause] = []
        bodies: list[tuple[Stmt, ...]] = []
        while True:
            ctok = ts.peek()
            pattern = parse_pattern(ts)
            guard = GTrue()
            if ts.accept_atom("when"):
                guard = parse_guard(ts)
            ts.expect_sym("->")
            bodies.append((_parse_stmt(ts, counter),))  # one statement per clause
            try:
                clauses.append(Clause(pattern, guard))
            except ValueError as exc:
                raise ParseError(str(exc), ctok.line, ctok.col) from exc
            if not ts.accept_sym(";"):
                break
        ts.expect_sym("}")
        counter[0] += 1
        cs = Constraint(f"cs{counter[0]}", tuple(clauses))
        return ReceiveStmt(cs, tuple(bodies))
    return ExprStmt(parse_pattern(ts))


def _parse_spawn_expr(ts: TokenStream) -> SpawnExpr:
    ts.expect_atom("spawn")
    fname = ts.expect_atom().text
    ts.expect_sym("(")
    args: list[Pattern] = []
    if not ts.at_sym(")"):
        args.append(parse_pattern(ts))
        while ts.accept_sym(","):
            args.append(parse_pattern(ts))
    ts.expect_sym(")")
    return SpawnExpr(fname, tuple(args))


def check_program(program: Program) -> None:
    if program.main not in program.defs:
        raise ProgramError(f"main function {program.main!r} is not defined")
    if program.defs[program.main].params:
        raise ProgramError("main function must take no parameters")
    for fdef in program.defs.values():
        _check_stmts(program, fdef.body, set(fdef.params), fdef.name)


def _check_stmts(program: Program, stmts: tuple[Stmt, ...], bound: set[str],
                 where: str) -> set[str]:
    for stmt in stmts:
        if isinstance(stmt, BindStmt):
            if isinstance(stmt.expr, SpawnExpr):
                callee = program.defs.get(stmt.expr.fname)
                if callee is None:
                    raise ProgramError(f"{where}: unknown function {stmt.expr.fname!r}")
                if len(callee.params) != len(stmt.expr.args):
                    raise ProgramError(
                        f"{where}: {stmt.expr.fname} expects {len(callee.params)} "
                        f"argument(s), got {len(stmt.expr.args)}"
                    )
                for arg in stmt.expr.args:
                    _check_expr(arg, bound, where)
            else:
                _check_expr(stmt.expr, bound, where)
            if stmt.var is not None:
                bound.add(stmt.var)
        elif isinstance(stmt, SendStmt):
            _check_expr(stmt.value, bound, where)
            _check_expr(stmt.target, bound, where)
        elif isinstance(stmt, ReceiveStmt):
            for clause, body in zip(stmt.cs.clauses, stmt.bodies):
                _check_stmts(program, body, bound | set(pattern_vars(clause.pattern)),
                             where)
        else:
            _check_expr(stmt.value, bound, where)
    return bound


def _check_expr(expr: Pattern, bound: set[str], where: str) -> None:
    if isinstance(expr, Wildcard):
        raise ProgramError(f"{where}: wildcard is not a value expression")
    for v in pattern_vars(expr):
        if v not in bound:
            raise ProgramError(f"{where}: unbound variable {v}")


# ---------------------------------------------------------------------------
# Program serialization
# ---------------------------------------------------------------------------


def serialize_program(program: Program) -> str:
    lines = [f"program {{ main {program.main}"]
    for fdef in program.defs.values():
        params = ", ".join(fdef.params)
        body = "; ".join(_render_stmt(s) for s in fdef.body)
        lines.append(f"  def {fdef.name}({params}) {{ {body} }}".replace("{  }", "{ }"))
    return "\n".join(lines) + " }\n"


def _render_stmt(stmt: Stmt) -> str:
    if isinstance(stmt, BindStmt):
        rhs = (
            f"spawn {stmt.expr.fname}({', '.join(render_term(a) for a in stmt.expr.args)})"
            if isinstance(stmt.expr, SpawnExpr)
            else render_term(stmt.expr)
        )
        return rhs if stmt.var is None else f"{stmt.var} = {rhs}"
    if isinstance(stmt, SendStmt):
        return f"send {render_term(stmt.value)} to {render_term(stmt.target)}"
    if isinstance(stmt, ReceiveStmt):
        rendered = []
        for clause, body in zip(stmt.cs.clauses, stmt.bodies):
            head = render_term(clause.pattern)
            if not isinstance(clause.guard, GTrue):
                head += " when " + render_guard(clause.guard)
            rendered.append(f"{head} -> {_render_stmt(body[0])}")
        return "receive { " + "; ".join(rendered) + " }"
    return render_term(stmt.value)


# ---------------------------------------------------------------------------
# Runtime state
# ---------------------------------------------------------------------------


@dataclass
class ProcState:
    pid: Pid
    mailbox: list[tuple[Tag, Term]]
    stmts: list[Stmt]
    env: dict[str, Term]

    def clone(self) -> "ProcState":
        return ProcState(self.pid, list(self.mailbox), list(self.stmts), dict(self.env))


@dataclass
class SysState:
    program: Program
    procs: dict[Pid, ProcState]
    recorded: dict[Pid, list[Action]]
    spawn_counts: dict[Pid, int] = field(default_factory=dict)
    tag_counts: dict[Pid, int] = field(default_factory=dict)

    def clone(self) -> "SysState":
        return SysState(
            self.program,
            {p: ps.clone() for p, ps in self.procs.items()},
            {p: list(a) for p, a in self.recorded.items()},
            dict(self.spawn_counts),
            dict(self.tag_counts),
        )

    def trace(self) -> Trace:
        return Trace("p1", {p: tuple(a) for p, a in self.recorded.items()})


def initial_state(program: Program) -> SysState:
    main = program.defs[program.main]
    proc = ProcState("p1", [], list(main.body), {})
    sys = SysState(program, {"p1": proc}, {"p1": []})
    _settle(proc)
    return sys


def _eval(expr: Pattern, env: dict[str, Term]) -> Term:
    if isinstance(expr, Var):
        try:
            return env[expr.name]
        except KeyError:
            raise SimulationError(f"unbound variable {expr.name}") from None
    if isinstance(expr, Tup):
        return Tup(tuple(_eval(x, env) for x in expr.items))
    if isinstance(expr, Lst):
        return Lst(tuple(_eval(x, env) for x in expr.items))
    if isinstance(expr, Wildcard):
        raise SimulationError("wildcard is not a value expression")
    return expr  # Int, Atom, PidLit, TagLit


def _settle(proc: ProcState) -> None:
    """Run local statements silently until the next global action."""
    while proc.stmts:
        stmt = proc.stmts[0]
        if isinstance(stmt, (SendStmt, ReceiveStmt)):
            return
        if isinstance(stmt, BindStmt):
            if isinstance(stmt.expr, SpawnExpr):
                return
            value = _eval(stmt.expr, proc.env)
            proc.stmts.pop(0)
            if stmt.var is not None:
                proc.env[stmt.var] = value
            continue
        assert isinstance(stmt, ExprStmt)
        _eval(stmt.value, proc.env)  # evaluated for effect-freedom, then dropped
        proc.stmts.pop(0)


def _oldest_match(proc: ProcState, cs: Constraint) -> Optional[tuple[int, Tag, Term]]:
    for i, (tag, value) in enumerate(proc.mailbox):
        for clause in cs.clauses:
            subst = match_pattern(clause.pattern, value)
            if subst is not None and eval_guard(clause.guard, subst):
                return i, tag, value
    return None


def enabled(sys: SysState) -> list[tuple[Pid, Action]]:
    """Pids that can fire, with the action each would record, in pid order."""
    out: list[tuple[Pid, Action]] = []
    for pid in sorted(sys.procs, key=name_sort_key):
        proc = sys.procs[pid]
        if not proc.stmts:
            continue
        stmt = proc.stmts[0]
        if isinstance(stmt, BindStmt):  # settled: must be a spawn bind
            child = f"{pid}.{sys.spawn_counts.get(pid, 0) + 1}"
            out.append((pid, Spawn(child)))
        elif isinstance(stmt, SendStmt):
            tag = f"{pid}.{sys.tag_counts.get(pid, 0) + 1}"
            value = _eval(stmt.value, proc.env)
            target = _eval(stmt.target, proc.env)
            if not isinstance(target, PidLit):
                raise SimulationError(
                    f"{pid}: send target evaluates to {render_term(target)}, not a pid"
                )
            out.append((pid, Send(tag, value, target.pid)))
        else:
            assert isinstance(stmt, ReceiveStmt)
            found = _oldest_match(proc, stmt.cs)
            if found is not None:
                out.append((pid, Rec(found[1], stmt.cs)))
    return out


def step(sys: SysState, pid: Pid) -> Action:
    """Execute one global action of an enabled pid; returns what was recorded."""
    predicted = dict(enabled(sys))
    if pid not in predicted:
        raise SimulationError(f"pid {pid} is not enabled")
    proc = sys.procs[pid]
    stmt = proc.stmts.pop(0)
    action = predicted[pid]

    if isinstance(action, Spawn):
        assert isinstance(stmt, BindStmt) and isinstance(stmt.expr, SpawnExpr)
        sys.spawn_counts[pid] = sys.spawn_counts.get(pid, 0) + 1
        fdef = sys.program.defs[stmt.expr.fname]
        env = {
            name: _eval(arg, proc.env)
            for name, arg in zip(fdef.params, stmt.expr.args)
        }
        child = ProcState(action.child, [], list(fdef.body), env)
        sys.procs[action.child] = child
        sys.recorded[action.child] = []
        if stmt.var is not None:
            proc.env[stmt.var] = PidLit(action.child)
        _settle(child)
    elif isinstance(action, Send):
        sys.tag_counts[pid] = sys.tag_counts.get(pid, 0) + 1
        sys.procs[action.target].mailbox.append((action.tag, action.value))
    else:
        assert isinstance(action, Rec) and isinstance(stmt, ReceiveStmt)
        found = _oldest_match(proc, stmt.cs)
        assert found is not None and found[1] == action.tag
        slot, _, value = found
        proc.mailbox.pop(slot)
        for idx, clause in enumerate(stmt.cs.clauses):
            subst = match_pattern(clause.pattern, value)
            if subst is not None and eval_guard(clause.guard, subst):
                proc.env.update(subst)
                proc.stmts = list(stmt.bodies[idx]) + proc.stmts
                break

    sys.recorded[pid].append(action)
    _settle(proc)
    return action


# ---------------------------------------------------------------------------
# Whole-run drivers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Outcome:
    kind: str  # "completed" | "deadlock" | "step-limit"
    blocked: tuple[Pid, ...] = ()

    def __str__(self) -> str:
        if self.kind == "deadlock":
            return "deadlock(" + ", ".join(self.blocked) + ")"
        return self.kind


def _quiescent_outcome(sys: SysState) -> Outcome:
    blocked = tuple(
        pid for pid in sorted(sys.procs, key=name_sort_key) if sys.procs[pid].stmts
    )
    return Outcome("deadlock", blocked) if blocked else Outcome("completed")


def run_random(program: Program, seed: int, max_steps: int = 10000) -> tuple[Trace, Outcome]:
    """Scheduler picks uniformly among enabled pids with a seeded PRNG."""
    rng = random.Random(seed)
    sys = initial_state(program)
    for _ in range(max_steps):
        choices = enabled(sys)
        if not choices:
            return sys.trace(), _quiescent_outcome(sys)
        pid, _ = choices[rng.randrange(len(choices))]
        step(sys, pid)
    return sys.trace(), Outcome("step-limit")


def run_deterministic(sys: SysState, max_steps: int = 10000) -> tuple[Trace, Outcome]:
    """Continue a state with the fixed smallest-enabled-pid policy."""
    for _ in range(max_steps):
        choices = enabled(sys)
        if not choices:
            return sys.trace(), _quiescent_outcome(sys)
        step(sys, choices[0][0])
    return sys.trace(), Outcome("step-limit")


def enumerate_executions(
    program: Program, max_steps: int = 10000
) -> tuple[dict[str, Trace], int]:
    """Depth-first over every enabled choice at every state.

    Returns (complete traces keyed by canonical serialization, number of
    branches cut off by the step limit).
    """
    traces: dict[str, Trace] = {}
    limited = 0

    def walk(sys: SysState, depth: int) -> None:
        nonlocal limited
        choices = enabled(sys)
        if not choices:
            t = sys.trace()
            traces.setdefault(t.key(), t)
            return
        if depth >= max_steps:
            limited += 1
            return
        for pid, _ in choices:
            branch = sys.clone()
            step(branch, pid)
            walk(branch, depth + 1)

    walk(initial_state(program), 0)
    return traces, limited


# ---------------------------------------------------------------------------
# Prefix-driven replay
# ---------------------------------------------------------------------------


@dataclass
class Alignment:
    """Bidirectional renaming between logged and simulator names.

    Pids and tags are kept in separate namespaces: the simulator names both
    hierarchically, so the k-th child and the k-th message of a process share
    the spelling ``P.k``."""

    pid_log_to_sim: dict[str, str] = field(default_factory=dict)
    pid_sim_to_log: dict[str, str] = field(default_factory=dict)
    tag_log_to_sim: dict[str, str] = field(default_factory=dict)
    tag_sim_to_log: dict[str, str] = field(default_factory=dict)

    def bind_pid(self, log_name: str, sim_name: str) -> None:
        self.pid_log_to_sim[log_name] = sim_name
        self.pid_sim_to_log[sim_name] = log_name

    def bind_tag(self, log_name: str, sim_name: str) -> None:
        self.tag_log_to_sim[log_name] = sim_name
        self.tag_sim_to_log[sim_name] = log_name

    def sim_value_to_log(self, value: Term) -> Term:
        if isinstance(value, PidLit):
            return PidLit(self.pid_sim_to_log.get(value.pid, value.pid))
        if isinstance(value, TagLit):
            return TagLit(self.tag_sim_to_log.get(value.tag, value.tag))
        if isinstance(value, Tup):
            return Tup(tuple(self.sim_value_to_log(x) for x in value.items))
        if isinstance(value, Lst):
            return Lst(tuple(self.sim_value_to_log(x) for x in value.items))
        return value


def replay_prefix(program: Program, prefix: Trace) -> tuple[SysState, Alignment]:
    """Drive the program along one linearization of the prefix.

    Every step checks that the program performs exactly the logged action
    (names compared modulo the incremental alignment); the returned state can
    be continued with the normal schedulers.
    """
    from .causality import linearize
    from .traces import validate_trace

    bad = validate_trace(prefix)
    if bad is not None:
        raise ValueError(f"invalid prefix trace: {bad}")
    order = linearize(prefix)
    sys = initial_state(program)
    align = Alignment()
    align.bind_pid(prefix.initial, "p1")

    for i, event in enumerate(order.events):
        sim_pid = align.pid_log_to_sim.get(event.pid)
        if sim_pid is None:
            raise DivergenceError(i, f"pid {event.pid} has no simulator counterpart")
        predicted = dict(enabled(sys))
        if sim_pid not in predicted:
            raise DivergenceError(i, f"pid {event.pid} ({sim_pid}) is not enabled")
        actual = predicted[sim_pid]
        logged = event.action
        if isinstance(logged, Spawn):
            if not isinstance(actual, Spawn):
                raise DivergenceError(i, f"expected spawn, program does {actual}")
            step(sys, sim_pid)
            align.bind_pid(logged.child, actual.child)
        elif isinstance(logged, Send):
            if not isinstance(actual, Send):
                raise DivergenceError(i, f"expected send, program does {actual}")
            if align.pid_sim_to_log.get(actual.target) != logged.target:
                raise DivergenceError(
                    i, f"send targets {actual.target}, log says {logged.target}"
                )
            if align.sim_value_to_log(actual.value) != logged.value:
                raise DivergenceError(
                    i,
                    f"send value {render_term(actual.value)} differs from "
                    f"logged {render_term(logged.value)}",
                )
            step(sys, sim_pid)
            align.bind_tag(logged.tag, actual.tag)
        else:
            assert isinstance(logged, Rec)
            if not isinstance(actual, Rec):
                raise DivergenceError(i, f"expected receive, program does {actual}")
            if align.tag_sim_to_log.get(actual.tag) != logged.tag:
                raise DivergenceError(
                    i,
                    f"receive consumes {align.tag_sim_to_log.get(actual.tag, actual.tag)}, "
                    f"log says {logged.tag}",
                )
            if not actual.cs.same_clauses(logged.cs):
                raise DivergenceError(i, "receive constraint differs from the log")
            step(sys, sim_pid)
    return sys, align
