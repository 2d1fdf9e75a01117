"""Message races, race variants and orphan messages.

A message L' races with a received message L when some causally equivalent
prefix of the execution could have consumed L' at L's receive instead. The
constructive check per candidate send(L', v', p):

  * v' matches the receive constraint;
  * L' was not already consumed before the receive;
  * the receive did not happen before the send of L';
  * no earlier send from the same sender to p is still in the way (matching
    and unconsumed at the receive), which would make *it* the racer instead;
  * finally, the rewritten trace must remain valid. The per-sender check
    above is not enough on its own: a foreign blocking message can be forced
    ahead of L' through a chain of orderings (e.g. the blocker precedes, in
    its own sender, a message that an earlier receive pins before L'). The
    validity gate decides this exactly, and the earlier per-candidate checks
    survive as explanations.

The declarative oracle re-derives the same answer by brute force: it searches
for a subtrace that truncates the receiver right before the receive and stays
a valid trace once ``rec(L', cs)`` is appended.

A race variant rewrites the receive to consume the racer and erases every
action that happened after the original receive, yielding a (usually partial)
trace that can drive a replayed execution into a new equivalence class.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .causality import EventId, HbGraph, hb_graph
from .parsing import name_sort_key
from .traces import Pid, Rec, Send, Spawn, Tag, Trace, validate_trace
from .terms import match


@dataclass(frozen=True)
class CandidateCheck:
    """Why a candidate message is in or out of a race set."""

    tag: Tag
    sender: Pid
    matches: bool
    already_received: bool  # consumed before the receive under analysis
    hb_excluded: bool  # the receive happened before this send
    blocked_by: Tag | None  # earlier same-sender send still in the way
    infeasible: bool  # rewritten trace invalid (cross-sender forced order)
    in_race_set: bool

    def reason(self) -> str:
        if self.in_race_set:
            return "races"
        if self.already_received:
            return "received earlier"
        if not self.matches:
            return "value does not match"
        if self.hb_excluded:
            return "receive happened before send"
        if self.blocked_by is not None:
            return f"blocked by earlier send {self.blocked_by}"
        return "forced behind another matching message in every reordering"


@dataclass
class RaceReport:
    receive: EventId
    subject: Tag
    racers: set[Tag]
    candidates: list[CandidateCheck]

    def sorted_racers(self) -> list[Tag]:
        return sorted(self.racers, key=name_sort_key)


@dataclass
class Variant:
    trace: Trace
    replaced_at: tuple[Pid, int]
    old_tag: Tag
    new_tag: Tag


def _require_valid(t: Trace) -> None:
    bad = validate_trace(t)
    if bad is not None:
        raise ValueError(f"invalid trace: {bad}")


def _find_rec(t: Trace, tag: Tag) -> tuple[Pid, int, Rec]:
    for pid, i, a in t.events():
        if isinstance(a, Rec) and a.tag == tag:
            return pid, i, a
    raise ValueError(f"no receive event for tag {tag}")


def _race_report(t: Trace, graph: HbGraph, tag: Tag) -> RaceReport:
    pid, idx, rec = _find_rec(t, tag)
    rec_id = EventId(pid, idx)
    rec_index_of: dict[Tag, int] = {
        a.tag: i for p, i, a in t.events() if isinstance(a, Rec) and p == pid
    }
    sends_to_p: list[tuple[Pid, int, Send]] = [
        (q, i, a)
        for q, i, a in t.events()
        if isinstance(a, Send) and a.target == pid and a.tag != tag
    ]
    checks: list[CandidateCheck] = []
    for q, i, send in sends_to_p:
        matches = match(send.value, rec.cs)
        prior = rec_index_of.get(send.tag)
        already = prior is not None and prior < idx
        hb_excluded = graph.reach(rec_id, EventId(q, i))
        blocked_by: Tag | None = None
        for k in range(i):
            earlier = t.procs[q][k]
            if not isinstance(earlier, Send) or earlier.target != pid:
                continue
            if not match(earlier.value, rec.cs):
                continue
            erec = rec_index_of.get(earlier.tag)
            if erec is None or erec >= idx:
                blocked_by = earlier.tag
                break
        survives = matches and not already and not hb_excluded and blocked_by is None
        infeasible = survives and (
            validate_trace(_build_variant(t, pid, idx, rec, send.tag)) is not None
        )
        checks.append(
            CandidateCheck(
                send.tag, q, matches, already, hb_excluded, blocked_by,
                infeasible, survives and not infeasible,
            )
        )
    checks.sort(key=lambda c: name_sort_key(c.tag))
    racers = {c.tag for c in checks if c.in_race_set}
    return RaceReport(rec_id, tag, racers, checks)


def race_set(t: Trace, tag: Tag) -> RaceReport:
    _require_valid(t)
    return _race_report(t, hb_graph(t), tag)


def all_races(t: Trace) -> list[RaceReport]:
    """One report per receive event, in process order then index order."""
    _require_valid(t)
    graph = hb_graph(t)
    return [
        _race_report(t, graph, a.tag)
        for pid, i, a in t.events()
        if isinstance(a, Rec)
    ]


def orphans(t: Trace) -> set[Tag]:
    """Tags that are sent but never received."""
    _require_valid(t)
    sent = {a.tag for _, _, a in t.events() if isinstance(a, Send)}
    received = {a.tag for _, _, a in t.events() if isinstance(a, Rec)}
    return sent - received


# ---------------------------------------------------------------------------
# Declarative oracle
# ---------------------------------------------------------------------------


def declarative_race_oracle(t: Trace, tag: Tag, other: Tag) -> bool:
    """Brute-force the declarative race definition on a small trace.

    True iff some subtrace truncates the receiver exactly before rec(tag)
    and remains a valid trace once rec(other, cs) is appended there.
    """
    _require_valid(t)
    if other == tag:
        return False
    pid, idx, rec = _find_rec(t, tag)
    others = [p for p in t.pids() if p != pid]
    ranges = [range(len(t.procs[p]) + 1) for p in others]
    for cut in itertools.product(*ranges):
        procs = {p: t.procs[p][:n] for p, n in zip(others, cut)}
        procs[pid] = t.procs[pid][:idx]
        prefix = Trace(t.initial, procs)
        if validate_trace(prefix) is not None:
            continue  # not a subtrace
        candidate_procs = dict(procs)
        candidate_procs[pid] = procs[pid] + (Rec(other, rec.cs),)
        if validate_trace(Trace(t.initial, candidate_procs)) is None:
            return True
    return False


# ---------------------------------------------------------------------------
# Race variants (rdep)
# ---------------------------------------------------------------------------


def _rdep(suffix: tuple, procs: dict[Pid, tuple]) -> dict[Pid, tuple]:
    """Erase every action depending on the removed receive.

    Worklist form of the inductive definition: process the removed actions
    one at a time; a removed spawn erases the whole child, a removed send
    whose message was consumed truncates the consumer before that receive
    and queues the removed tail.
    """
    work = list(suffix)
    while work:
        action = work.pop(0)
        if isinstance(action, Rec):
            continue
        if isinstance(action, Spawn):
            child_actions = procs.pop(action.child, ())
            work = work + list(child_actions)
            continue
        assert isinstance(action, Send)
        target_seq = procs.get(action.target, ())
        cut = next(
            (
                k
                for k, a in enumerate(target_seq)
                if isinstance(a, Rec) and a.tag == action.tag
            ),
            None,
        )
        if cut is None:
            continue
        removed = target_seq[cut + 1 :]
        procs[action.target] = target_seq[:cut]
        work = work + list(removed)
    return procs


def _build_variant(t: Trace, pid: Pid, idx: int, rec: Rec, racer: Tag) -> Trace:
    """Replace the receive at pid[idx] with rec(racer) and erase dependents."""
    procs = dict(t.procs)
    suffix = procs[pid][idx + 1 :]
    procs[pid] = procs[pid][:idx] + (Rec(racer, rec.cs),)
    return Trace(t.initial, _rdep(suffix, procs))


def variant(t: Trace, tag: Tag, racer: Tag) -> Variant:
    """The race variant of t that consumes `racer` at `tag`'s receive."""
    report = race_set(t, tag)
    if racer not in report.racers:
        detail = next((c.reason() for c in report.candidates if c.tag == racer), None)
        why = f" ({detail})" if detail else ""
        raise ValueError(f"{racer} is not in the race set of {tag}{why}")
    pid, idx = report.receive
    rec = t.procs[pid][idx]
    assert isinstance(rec, Rec)
    result = _build_variant(t, pid, idx, rec, racer)
    bad = validate_trace(result)
    if bad is not None:  # cannot happen: the race set gates on validity
        raise AssertionError(f"variant produced an invalid trace: {bad}")
    return Variant(result, (pid, idx), tag, racer)
