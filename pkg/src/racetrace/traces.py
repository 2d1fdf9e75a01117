"""Events, interleavings and traces, with validation and a stable file format.

An interleaving is one linear schedule of pid-tagged actions; a trace maps
each pid to its own action sequence and stands for the whole class of
causally equivalent interleavings. Validation of an interleaving checks four
conditions:

  1. every event of a non-initial pid is preceded by its spawn;
  2. every receive is preceded by a matching send addressed to the receiver;
  3. a receive consumes the oldest matching message: every send to the same
     target that precedes the consumed message's send must either fail the
     receive constraint or have been received earlier;
  4. pids and tags are unique.

Condition 3 deliberately ranges over sends from *any* sender: with messages
delivered at send time, hoisting a matching foreign send above the consumed
one changes which message is oldest in the mailbox, so such schedules are
invalid even though the two sends are causally independent.

A mapping is a valid trace iff some valid interleaving linearizes it. We
decide this directly: besides per-process well-formedness, we build the
happened-before edge graph extended with one ordering edge per (receive,
competing matching unreceived send) pair and check it for cycles; any
topological order of that extended graph is a valid interleaving, and every
valid interleaving is such an order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .parsing import (
    ParseError,
    TokenStream,
    name_sort_key,
    parse_constraint_block,
    parse_dotted_name,
    parse_term,
    tokenize,
)
from .terms import Constraint, Term, match, render_constraint, render_term

Pid = str
Tag = str


# ---------------------------------------------------------------------------
# Actions and events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Spawn:
    child: Pid


@dataclass(frozen=True)
class Send:
    tag: Tag
    value: Term
    target: Pid


@dataclass(frozen=True)
class Rec:
    tag: Tag
    cs: Constraint


Action = Union[Spawn, Send, Rec]


@dataclass(frozen=True)
class Event:
    pid: Pid
    action: Action


def render_action(a: Action) -> str:
    if isinstance(a, Spawn):
        return f"spawn({a.child})"
    if isinstance(a, Send):
        return f"send({a.tag}, {render_term(a.value)}, {a.target})"
    return f"rec({a.tag}, {a.cs.cs_id})"


# ---------------------------------------------------------------------------
# Interleaving / Trace containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Interleaving:
    initial: Pid
    events: tuple[Event, ...]


@dataclass
class Trace:
    initial: Pid
    procs: dict[Pid, tuple[Action, ...]]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Trace)
            and self.initial == other.initial
            and self.procs == other.procs
        )

    def pids(self) -> list[Pid]:
        return sorted(self.procs, key=name_sort_key)

    def events(self) -> list[tuple[Pid, int, Action]]:
        out = []
        for pid in self.pids():
            for i, a in enumerate(self.procs[pid]):
                out.append((pid, i, a))
        return out

    def key(self) -> str:
        """Canonical serialization; byte-equal iff traces are equal."""
        return serialize_trace(self)


@dataclass(frozen=True)
class Violation:
    condition: str  # "1".."4" for interleavings, "a".."d" for traces
    where: str  # e.g. "event 5" or "p3[2]"
    detail: str

    def __str__(self) -> str:
        return f"condition {self.condition} violated at {self.where}: {self.detail}"


# ---------------------------------------------------------------------------
# Interleaving validation (Definition-style conditions 1-4)
# ---------------------------------------------------------------------------


def validate_interleaving(s: Interleaving) -> Optional[Violation]:
    """None when valid, otherwise the first violated condition."""
    events = s.events
    spawned: dict[Pid, int] = {}
    sends: dict[Tag, tuple[int, Event]] = {}
    received: dict[Tag, int] = {}

    for j, ev in enumerate(events):
        a = ev.action
        # condition 1: pid alive
        if ev.pid != s.initial and ev.pid not in spawned:
            return Violation("1", f"event {j}", f"pid {ev.pid} acts before being spawned")
        if isinstance(a, Spawn):
            # condition 4: pid uniqueness
            if a.child in spawned or a.child == s.initial:
                return Violation("4", f"event {j}", f"pid {a.child} spawned twice")
            if a.child == ev.pid:
                return Violation("4", f"event {j}", f"pid {ev.pid} spawns itself")
            if any(e.pid == a.child for e in events[:j]):
                return Violation("1", f"event {j}", f"pid {a.child} acted before its spawn")
            spawned[a.child] = j
        elif isinstance(a, Send):
            # condition 4: tag uniqueness
            if a.tag in sends:
                return Violation("4", f"event {j}", f"tag {a.tag} sent twice")
            sends[a.tag] = (j, ev)
        elif isinstance(a, Rec):
            if a.tag in received:
                return Violation("4", f"event {j}", f"tag {a.tag} received twice")
            # condition 2: a preceding matching send to this process
            if a.tag not in sends:
                return Violation("2", f"event {j}", f"no prior send of tag {a.tag}")
            _, send_ev = sends[a.tag]
            assert isinstance(send_ev.action, Send)
            if send_ev.action.target != ev.pid:
                return Violation(
                    "2", f"event {j}", f"tag {a.tag} was sent to {send_ev.action.target}"
                )
            if not match(send_ev.action.value, a.cs):
                return Violation(
                    "2",
                    f"event {j}",
                    f"value {render_term(send_ev.action.value)} does not match {a.cs.cs_id}",
                )
            received[a.tag] = j

    # condition 3: each consumed message is the oldest matching one
    for tag, j in received.items():
        rec_ev = events[j]
        assert isinstance(rec_ev.action, Rec)
        send_idx, _ = sends[tag]
        for i in range(send_idx):
            other = events[i].action
            if not isinstance(other, Send) or other.target != rec_ev.pid:
                continue
            if other.tag == tag or not match(other.value, rec_ev.action.cs):
                continue
            other_rec = received.get(other.tag)
            if other_rec is None or other_rec > j:
                return Violation(
                    "3",
                    f"event {j}",
                    f"message {other.tag} was sent before {tag}, matches "
                    f"{rec_ev.action.cs.cs_id} and is not received earlier",
                )
    return None


def actions(pid: Pid, s: Interleaving) -> tuple[Action, ...]:
    return tuple(ev.action for ev in s.events if ev.pid == pid)


def tr(s: Interleaving) -> Trace:
    """Per-process projection of a valid interleaving."""
    bad = validate_interleaving(s)
    if bad is not None:
        raise ValueError(f"invalid interleaving: {bad}")
    procs: dict[Pid, list[Action]] = {s.initial: []}
    for ev in s.events:
        procs.setdefault(ev.pid, []).append(ev.action)
        if isinstance(ev.action, Spawn):
            procs.setdefault(ev.action.child, [])
    return Trace(s.initial, {p: tuple(a) for p, a in procs.items()})


# ---------------------------------------------------------------------------
# Trace validation
# ---------------------------------------------------------------------------


def _collect(t: Trace):
    """Index sends and receives of a trace document."""
    sends: dict[Tag, tuple[Pid, int, Send]] = {}
    recs: dict[Tag, tuple[Pid, int, Rec]] = {}
    spawns: dict[Pid, tuple[Pid, int]] = {}
    for pid, i, a in t.events():
        if isinstance(a, Send):
            sends.setdefault(a.tag, (pid, i, a))
        elif isinstance(a, Rec):
            recs.setdefault(a.tag, (pid, i, a))
        elif isinstance(a, Spawn):
            spawns.setdefault(a.child, (pid, i))
    return sends, recs, spawns


def validate_trace(t: Trace) -> Optional[Violation]:
    """None iff some valid interleaving S has tr(S) = t."""
    if t.initial not in t.procs:
        return Violation("a", t.initial, "initial pid has no entry")

    # (a) pid/tag uniqueness and spawn closure
    seen_spawn: dict[Pid, str] = {}
    seen_send: dict[Tag, str] = {}
    seen_rec: dict[Tag, str] = {}
    for pid, i, a in t.events():
        loc = f"{pid}[{i}]"
        if isinstance(a, Spawn):
            if a.child in seen_spawn or a.child == t.initial:
                return Violation("a", loc, f"pid {a.child} spawned twice")
            if a.child == pid:
                return Violation("a", loc, f"pid {pid} spawns itself")
            seen_spawn[a.child] = loc
        elif isinstance(a, Send):
            if a.tag in seen_send:
                return Violation("a", loc, f"tag {a.tag} sent twice")
            seen_send[a.tag] = loc
        elif isinstance(a, Rec):
            if a.tag in seen_rec:
                return Violation("a", loc, f"tag {a.tag} received twice")
            seen_rec[a.tag] = loc
    known_pids = set(t.procs) | set(seen_spawn)
    for pid in t.procs:
        if pid != t.initial and pid not in seen_spawn:
            return Violation("a", pid, f"pid {pid} is never spawned")
    for pid, i, a in t.events():
        if isinstance(a, Spawn) and a.child not in t.procs:
            return Violation("a", f"{pid}[{i}]", f"spawned pid {a.child} has no entry")
        if isinstance(a, Send) and a.target not in known_pids:
            return Violation("a", f"{pid}[{i}]", f"unknown send target {a.target}")

    # (b) every receive has a unique matching send addressed to it
    sends, recs, _ = _collect(t)
    for tag, (pid, i, rec) in recs.items():
        loc = f"{pid}[{i}]"
        if tag not in sends:
            return Violation("b", loc, f"no send of tag {tag}")
        spid, si, send = sends[tag]
        if send.target != pid:
            return Violation("b", loc, f"tag {tag} was sent to {send.target}")
        if not match(send.value, rec.cs):
            return Violation(
                "b", loc, f"value {render_term(send.value)} does not match {rec.cs.cs_id}"
            )

    # (c) per-sender FIFO: an earlier matching unreceived send from the same
    # sender forbids consuming a later one (special case of the edge check
    # below, reported separately for clearer diagnostics)
    rec_pos = {tag: i for tag, (_, i, _) in recs.items()}
    for tag, (pid, i, rec) in recs.items():
        spid, si, send = sends[tag]
        for k in range(si):
            prev = t.procs[spid][k]
            if not isinstance(prev, Send) or prev.target != pid or prev.tag == tag:
                continue
            if not match(prev.value, rec.cs):
                continue
            prev_rec = rec_pos.get(prev.tag)
            if prev_rec is None or prev_rec > i:
                return Violation(
                    "c",
                    f"{pid}[{i}]",
                    f"sender {spid} sent matching {prev.tag} before {tag}, "
                    "not received earlier",
                )

    # (d) the happened-before graph extended with ordering edges is acyclic
    from .causality import hb_graph_unchecked

    graph = hb_graph_unchecked(t)
    cycle = graph.find_cycle()
    if cycle is not None:
        pretty = " -> ".join(f"{p}[{i}]" for p, i in cycle)
        return Violation("d", pretty, "no linearization can order these events")
    return None


def is_subtrace(t1: Trace, t2: Trace) -> bool:
    """Per-process prefix relation between valid traces."""
    if t1.initial != t2.initial:
        raise ValueError("subtrace comparison requires the same initial pid")
    for pid, seq in t1.procs.items():
        if seq and seq != t2.procs.get(pid, ())[: len(seq)]:
            return False
    return True


def in_sched(s: Interleaving, t: Trace) -> bool:
    """True iff s is a linearization of t."""
    return s.initial == t.initial and tr(s) == t


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------


def _constraint_table(actions_iter: Iterable[Action]) -> dict[str, Constraint]:
    table: dict[str, Constraint] = {}
    for a in actions_iter:
        if isinstance(a, Rec):
            prev = table.get(a.cs.cs_id)
            if prev is not None and prev != a.cs:
                raise ValueError(f"constraint id {a.cs.cs_id} bound to two definitions")
            table[a.cs.cs_id] = a.cs
    return table


def _render_constraints_block(table: dict[str, Constraint]) -> str:
    if not table:
        return ""
    lines = [render_constraint(table[k]) for k in sorted(table, key=name_sort_key)]
    return "constraints { " + "\n  ".join(lines) + " }\n"


def serialize_trace(t: Trace) -> str:
    lines = [f"trace {{ initial: {t.initial}"]
    for pid in t.pids():
        seq = t.procs[pid]
        body = ", ".join(render_action(a) for a in seq) if seq else "ε"
        lines.append(f"  {pid}: {body}")
    text = "\n".join(lines) + " }\n"
    table = _constraint_table(a for seq in t.procs.values() for a in seq)
    return text + _render_constraints_block(table)


def serialize_interleaving(s: Interleaving) -> str:
    lines = [f"interleaving {{ initial: {s.initial}"]
    for ev in s.events:
        lines.append(f"  {ev.pid}: {render_action(ev.action)}")
    text = "\n".join(lines) + " }\n"
    table = _constraint_table(ev.action for ev in s.events)
    return text + _render_constraints_block(table)


def _parse_action(ts: TokenStream, constraints: dict[str, Constraint]) -> Action:
    tok = ts.peek()
    kind = ts.expect_atom().text
    ts.expect_sym("(")
    if kind == "spawn":
        child = parse_dotted_name(ts)
        ts.expect_sym(")")
        return Spawn(child)
    if kind == "send":
        tag = parse_dotted_name(ts)
        ts.expect_sym(",")
        value = parse_term(ts)
        ts.expect_sym(",")
        target = parse_dotted_name(ts)
        ts.expect_sym(")")
        return Send(tag, value, target)
    if kind == "rec":
        tag = parse_dotted_name(ts)
        ts.expect_sym(",")
        cs_tok = ts.peek()
        cs_id = ts.expect_atom().text
        ts.expect_sym(")")
        if cs_id not in constraints:
            raise ParseError(f"unknown constraint id {cs_id!r}", cs_tok.line, cs_tok.col)
        return Rec(tag, constraints[cs_id])
    raise ParseError(f"unknown action {kind!r}", tok.line, tok.col)


def _parse_document(text: str, keyword: str):
    """Common scaffolding: '<keyword> { initial: pid ... }' + constraints."""
    ts = TokenStream(tokenize(text))
    # The constraint table is written after the body but needed to resolve
    # rec actions, so scan ahead for it first.
    probe = TokenStream(ts.tokens[:])
    constraints: dict[str, Constraint] = {}
    depth = 0
    while probe.peek().kind != "eof":
        tok = probe.peek()
        if tok.kind == "atom" and tok.text == "constraints" and depth == 0:
            constraints = parse_constraint_block(probe)
            continue
        if tok.kind == "sym" and tok.text == "{":
            depth += 1
        elif tok.kind == "sym" and tok.text == "}":
            depth -= 1
        probe.next()
    ts.expect_atom(keyword)
    ts.expect_sym("{")
    ts.expect_atom("initial")
    ts.expect_sym(":")
    initial = parse_dotted_name(ts)
    entries: list[tuple[Pid, list[Action]]] = []
    while not ts.at_sym("}"):
        pid = parse_dotted_name(ts)
        ts.expect_sym(":")
        acts: list[Action] = []
        if ts.accept_atom("ε"):
            pass
        else:
            acts.append(_parse_action(ts, constraints))
            while ts.accept_sym(","):
                acts.append(_parse_action(ts, constraints))
        entries.append((pid, acts))
    ts.expect_sym("}")
    if ts.peek().kind == "atom" and ts.peek().text == "constraints":
        parse_constraint_block(ts)  # already harvested by the probe
    tok = ts.peek()
    if tok.kind != "eof":
        raise ParseError(f"unexpected trailing input {tok.text!r}", tok.line, tok.col)
    return initial, entries


def parse_trace(text: str) -> Trace:
    initial, entries = _parse_document(text, "trace")
    procs: dict[Pid, tuple[Action, ...]] = {}
    for pid, acts in entries:
        if pid in procs:
            raise ParseError(f"duplicate process entry {pid!r}", 0, 0)
        procs[pid] = tuple(acts)
    procs.setdefault(initial, ())
    return Trace(initial, procs)


def parse_interleaving(text: str) -> Interleaving:
    initial, entries = _parse_document(text, "interleaving")
    events: list[Event] = []
    for pid, acts in entries:
        if len(acts) != 1:
            raise ParseError(
                f"interleaving lines carry exactly one action (process {pid})", 0, 0
            )
        events.append(Event(pid, acts[0]))
    return Interleaving(initial, tuple(events))
