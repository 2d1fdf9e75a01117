"""Hypothesis strategies for random valid interleavings and traces.

Interleavings are generated the way an execution would produce them: spawn
allocates a fresh child pid, send enqueues at the target's mailbox, and a
receive consumes the oldest mailbox message matching its constraint. The
four validity conditions then hold by construction, which the tests assert
rather than assume.
"""

from hypothesis import strategies as st

from racetrace import (
    Atom,
    Clause,
    Cmp,
    Constraint,
    Event,
    GTrue,
    Int,
    Interleaving,
    Rec,
    Send,
    Spawn,
    Tup,
    Var,
    matching_clause,
    tr,
)

CS_ANY = Constraint("csa", (Clause(Tup((Atom("val"), Var("M"))), GTrue()),))
CS_POS = Constraint(
    "csp", (Clause(Tup((Atom("val"), Var("M"))), Cmp(">", Var("M"), Int(0))),)
)
VALUES = [Tup((Atom("val"), Int(n))) for n in (0, 1, 2)]


@st.composite
def interleavings(draw, max_events: int = 8) -> Interleaving:
    pids = ["p1"]
    mailboxes: dict[str, list] = {"p1": []}
    spawn_count: dict[str, int] = {}
    tag_count: dict[str, int] = {}
    events: list[Event] = []

    n = draw(st.integers(min_value=0, max_value=max_events))
    for _ in range(n):
        options = []
        if len(pids) < 5:
            options.append("spawn")
        options.append("send")
        receivable = [
            (p, cs)
            for p in pids
            for cs in (CS_ANY, CS_POS)
            if any(matching_clause(v, cs) is not None for _, v in mailboxes[p])
        ]
        if receivable:
            options.append("rec")
        kind = draw(st.sampled_from(options))
        if kind == "spawn":
            parent = draw(st.sampled_from(pids))
            spawn_count[parent] = spawn_count.get(parent, 0) + 1
            child = f"{parent}.{spawn_count[parent]}"
            pids.append(child)
            mailboxes[child] = []
            events.append(Event(parent, Spawn(child)))
        elif kind == "send":
            sender = draw(st.sampled_from(pids))
            target = draw(st.sampled_from(pids))
            value = draw(st.sampled_from(VALUES))
            tag_count[sender] = tag_count.get(sender, 0) + 1
            tag = f"{sender}.{tag_count[sender]}"
            mailboxes[target].append((tag, value))
            events.append(Event(sender, Send(tag, value, target)))
        else:
            p, cs = draw(st.sampled_from(receivable))
            slot = next(
                i
                for i, (_, v) in enumerate(mailboxes[p])
                if matching_clause(v, cs) is not None
            )
            tag, _ = mailboxes[p].pop(slot)
            events.append(Event(p, Rec(tag, cs)))
    return Interleaving("p1", tuple(events))


@st.composite
def traces(draw, max_events: int = 8):
    return tr(draw(interleavings(max_events=max_events)))
