"""Happened-before graphs, linearizations and causal equivalence.

Events are addressed as ``(pid, index)`` pairs, where the index is the
position of the action in that process's sequence. The happened-before
relation is generated by program order, spawn-before-child and
send-before-receive edges, closed transitively.

Besides happened-before edges, the graph records *ordering constraints*: for
a receive of message L, every other matching send to the same process that is
not consumed earlier must be scheduled after L's send (otherwise the receive
would not take the oldest matching message). These constraints are not part
of happened-before — the events involved are causally independent — but every
valid linearization must respect them, so they participate in cycle checks,
``linearize`` and ``enumerate_linearizations``.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional

from .parsing import name_sort_key
from .terms import match
from .traces import (
    Event,
    Interleaving,
    Rec,
    Send,
    Spawn,
    Trace,
    tr,
    validate_interleaving,
    validate_trace,
)


class EventId(NamedTuple):
    pid: str
    index: int


class SwapBudgetExhausted(Exception):
    """The swap search ran out of budget before deciding reachability."""


@dataclass
class HbGraph:
    nodes: list[EventId]
    edges: dict[EventId, set[EventId]]
    labels: dict[tuple[EventId, EventId], str]  # "program" | "spawn" | "message TAG"
    order_constraints: set[tuple[EventId, EventId]] = field(default_factory=set)

    def reach(self, src: EventId, dst: EventId) -> bool:
        """True iff dst is reachable from src via happened-before edges.

        Irreflexive: reach(e, e) is False unless e lies on a cycle (which
        cannot happen for a valid trace).
        """
        if src not in self.edges and src not in self.nodes:
            raise KeyError(f"unknown event {src}")
        seen = {src}
        stack = [src]
        while stack:
            for nxt in self.edges.get(stack.pop(), ()):
                if nxt == dst:
                    return True
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    def reachable_pairs(self) -> set[tuple[EventId, EventId]]:
        pairs: set[tuple[EventId, EventId]] = set()
        for src in self.nodes:
            seen: set[EventId] = set()
            stack = list(self.edges.get(src, ()))
            while stack:
                node = stack.pop()
                if node in seen:
                    continue
                seen.add(node)
                stack.extend(self.edges.get(node, ()))
            pairs.update((src, dst) for dst in seen)
        return pairs

    def _successors(self, node: EventId) -> set[EventId]:
        out = set(self.edges.get(node, ()))
        out.update(dst for src, dst in self.order_constraints if src == node)
        return out

    def find_cycle(self) -> Optional[list[EventId]]:
        """A cycle over hb edges plus ordering constraints, or None."""
        color: dict[EventId, int] = {}
        parent: dict[EventId, EventId] = {}

        for root in self.nodes:
            if color.get(root):
                continue
            stack = [(root, iter(sorted(self._successors(root))))]
            color[root] = 1
            while stack:
                node, it = stack[-1]
                advanced = False
                for nxt in it:
                    if color.get(nxt) == 1:
                        cycle = [nxt, node]
                        cur = node
                        while cur != nxt:
                            cur = parent[cur]
                            cycle.append(cur)
                        cycle.reverse()
                        return cycle
                    if not color.get(nxt):
                        color[nxt] = 1
                        parent[nxt] = node
                        stack.append((nxt, iter(sorted(self._successors(nxt)))))
                        advanced = True
                        break
                if not advanced:
                    color[node] = 2
                    stack.pop()
        return None


def hb_graph_unchecked(t: Trace) -> HbGraph:
    """Build the graph without validating the trace first."""
    nodes = [EventId(pid, i) for pid, i, _ in t.events()]
    edges: dict[EventId, set[EventId]] = {n: set() for n in nodes}
    labels: dict[tuple[EventId, EventId], str] = {}

    def add(src: EventId, dst: EventId, label: str) -> None:
        edges.setdefault(src, set()).add(dst)
        labels[(src, dst)] = label

    send_at: dict[str, EventId] = {}
    rec_at: dict[str, EventId] = {}
    for pid, i, a in t.events():
        if isinstance(a, Send):
            send_at.setdefault(a.tag, EventId(pid, i))
        elif isinstance(a, Rec):
            rec_at.setdefault(a.tag, EventId(pid, i))

    for pid in t.pids():
        seq = t.procs[pid]
        for i in range(len(seq) - 1):
            add(EventId(pid, i), EventId(pid, i + 1), "program")
        for i, a in enumerate(seq):
            if isinstance(a, Spawn) and t.procs.get(a.child):
                add(EventId(pid, i), EventId(a.child, 0), "spawn")
            elif isinstance(a, Rec) and a.tag in send_at:
                add(send_at[a.tag], EventId(pid, i), f"message {a.tag}")

    constraints: set[tuple[EventId, EventId]] = set()
    for pid, i, a in t.events():
        if not isinstance(a, Rec) or a.tag not in send_at:
            continue
        subject_send = send_at[a.tag]
        for spid, si, other in t.events():
            if not isinstance(other, Send) or other.target != pid or other.tag == a.tag:
                continue
            if not match(other.value, a.cs):
                continue
            other_rec = rec_at.get(other.tag)
            if other_rec is not None and other_rec.pid == pid and other_rec.index < i:
                continue  # consumed before this receive; no ordering needed
            constraints.add((subject_send, EventId(spid, si)))
    return HbGraph(nodes, edges, labels, constraints)


def hb_graph(t: Trace) -> HbGraph:
    bad = validate_trace(t)
    if bad is not None:
        raise ValueError(f"invalid trace: {bad}")
    return hb_graph_unchecked(t)


def independent(t: Trace, e1: EventId, e2: EventId) -> bool:
    """Neither event happened before the other."""
    graph = hb_graph(t)
    for e in (e1, e2):
        if e.pid not in t.procs or not 0 <= e.index < len(t.procs[e.pid]):
            raise KeyError(f"unknown event {e}")
    return not graph.reach(e1, e2) and not graph.reach(e2, e1)


# ---------------------------------------------------------------------------
# Linearization
# ---------------------------------------------------------------------------


def _ready_order(t: Trace, graph: HbGraph):
    """Predecessor counts over hb edges plus ordering constraints."""
    preds: dict[EventId, int] = {n: 0 for n in graph.nodes}
    succs: dict[EventId, list[EventId]] = {n: [] for n in graph.nodes}
    seen: set[tuple[EventId, EventId]] = set()
    for src, dsts in graph.edges.items():
        for dst in dsts:
            if (src, dst) not in seen:
                seen.add((src, dst))
                preds[dst] += 1
                succs[src].append(dst)
    for src, dst in graph.order_constraints:
        if (src, dst) not in seen:
            seen.add((src, dst))
            preds[dst] += 1
            succs[src].append(dst)
    return preds, succs


def _event_key(e: EventId) -> tuple:
    return (name_sort_key(e.pid), e.index)


def _to_interleaving(t: Trace, order: list[EventId]) -> Interleaving:
    return Interleaving(
        t.initial, tuple(Event(e.pid, t.procs[e.pid][e.index]) for e in order)
    )


def linearize(t: Trace) -> Interleaving:
    """Deterministic linearization; ties broken by smallest pid, then index."""
    graph = hb_graph(t)
    preds, succs = _ready_order(t, graph)
    ready = sorted((n for n, c in preds.items() if c == 0), key=_event_key)
    order: list[EventId] = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        fresh = []
        for nxt in succs[node]:
            preds[nxt] -= 1
            if preds[nxt] == 0:
                fresh.append(nxt)
        ready = sorted(ready + fresh, key=_event_key)
    if len(order) != len(graph.nodes):
        raise ValueError("trace graph is cyclic")  # unreachable on valid traces
    return _to_interleaving(t, order)


def enumerate_linearizations(t: Trace, cap: int = 10000) -> list[Interleaving]:
    """All members of sched(t); raises if there are more than cap."""
    graph = hb_graph(t)
    preds, succs = _ready_order(t, graph)
    out: list[Interleaving] = []
    order: list[EventId] = []

    def backtrack() -> None:
        if len(order) == len(graph.nodes):
            if len(out) >= cap:
                raise ValueError(f"more than {cap} linearizations")
            out.append(_to_interleaving(t, list(order)))
            return
        for node in sorted((n for n, c in preds.items() if c == 0), key=_event_key):
            if node in taken:
                continue
            taken.add(node)
            preds[node] = -1
            for nxt in succs[node]:
                preds[nxt] -= 1
            order.append(node)
            backtrack()
            order.pop()
            for nxt in succs[node]:
                preds[nxt] += 1
            preds[node] = 0
            taken.discard(node)

    taken: set[EventId] = set()
    backtrack()
    return out


# ---------------------------------------------------------------------------
# Equivalence
# ---------------------------------------------------------------------------


def hb_relation(s: Interleaving) -> frozenset[tuple[Event, Event]]:
    """The happened-before relation of an interleaving as event pairs.

    Events themselves are the keys: pid/tag uniqueness makes every event of
    a valid interleaving distinct, so relations of two interleavings over
    the same events are directly comparable."""
    ids = list(s.events)
    direct: set[tuple[int, int]] = set()
    for i, ei in enumerate(s.events):
        for j in range(i + 1, len(s.events)):
            ej = s.events[j]
            if _directly_related(ei, ej):
                direct.add((i, j))
    # transitive closure
    closure = set(direct)
    changed = True
    while changed:
        changed = False
        for (a, b) in list(closure):
            for (c, d) in list(closure):
                if b == c and (a, d) not in closure:
                    closure.add((a, d))
                    changed = True
    return frozenset((ids[a], ids[b]) for a, b in closure)


def _directly_related(earlier: Event, later: Event) -> bool:
    if earlier.pid == later.pid:
        return True
    if isinstance(earlier.action, Spawn) and earlier.action.child == later.pid:
        return True
    if (
        isinstance(earlier.action, Send)
        and isinstance(later.action, Rec)
        and earlier.action.tag == later.action.tag
    ):
        return True
    return False


def causally_equivalent(s1: Interleaving, s2: Interleaving) -> bool:
    """Decided by trace equality (sound and complete for valid interleavings)."""
    for s in (s1, s2):
        bad = validate_interleaving(s)
        if bad is not None:
            raise ValueError(f"invalid interleaving: {bad}")
    if s1.initial != s2.initial:
        return False
    if Counter(s1.events) != Counter(s2.events):
        return False
    return tr(s1) == tr(s2)


def swap_equiv_oracle(s1: Interleaving, s2: Interleaving, budget: int = 100000) -> bool:
    """Breadth-first search over single swaps of consecutive independent
    events, keeping only sequences that remain valid interleavings.

    Exists purely as a test oracle for ``causally_equivalent``; exponential.
    Raises SwapBudgetExhausted when the budget runs out undecided.
    """
    for s in (s1, s2):
        bad = validate_interleaving(s)
        if bad is not None:
            raise ValueError(f"invalid interleaving: {bad}")
    if s1.initial != s2.initial or Counter(s1.events) != Counter(s2.events):
        return False
    start, goal = s1.events, s2.events
    if start == goal:
        return True
    seen = {start}
    queue = deque([start])
    expanded = 0
    while queue:
        if expanded >= budget:
            raise SwapBudgetExhausted(f"undecided after expanding {expanded} states")
        events = queue.popleft()
        expanded += 1
        for i in range(len(events) - 1):
            if _directly_related(events[i], events[i + 1]):
                continue
            swapped = events[:i] + (events[i + 1], events[i]) + events[i + 2 :]
            if swapped in seen:
                continue
            if validate_interleaving(Interleaving(s1.initial, swapped)) is not None:
                continue
            if swapped == goal:
                return True
            seen.add(swapped)
            queue.append(swapped)
    return False
