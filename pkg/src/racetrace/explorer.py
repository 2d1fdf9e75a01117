"""Systematic state-space exploration driven by race variants.

The loop: run one seeded execution and record its trace; compute the race
sets of its receives and one race variant per (receive, racer) pair; replay
each variant prefix and continue deterministically to completion; recurse on
the races of the resulting traces. Complete traces and pending variants are
deduplicated by canonical serialization, which is sound because the
simulator's schedule-invariant naming makes trace-equal executions
byte-identical.

After replaying a variant, races are harvested only from receives at or
after the replaced one in the replaced process, and from receives of other
processes that lie beyond the variant prefix; races inside the shared prefix
were already harvested from the parent.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .parsing import name_sort_key
from .races import all_races, orphans, variant
from .simulator import (
    DivergenceError,
    Program,
    replay_prefix,
    run_deterministic,
    run_random,
)
from .traces import Pid, Tag, Trace


@dataclass(frozen=True)
class Origin:
    parent_key: str
    replaced_at: tuple[Pid, int]
    old_tag: Tag
    new_tag: Tag


@dataclass
class ExplorationReport:
    traces: dict[str, Trace] = field(default_factory=dict)
    outcomes: dict[str, str] = field(default_factory=dict)
    orphans: dict[str, list[Tag]] = field(default_factory=dict)
    race_counts: dict[str, int] = field(default_factory=dict)
    origins: dict[str, Optional[Origin]] = field(default_factory=dict)
    order: list[str] = field(default_factory=list)  # insertion order of keys
    variants_enqueued: int = 0
    duplicate_traces: int = 0
    duplicate_variants: int = 0
    divergences: int = 0
    step_limited: int = 0
    bounded: bool = False  # stopped at max_traces before the fixpoint

    def render(self) -> str:
        lines = [
            f"traces explored: {len(self.traces)}",
            f"variants enqueued: {self.variants_enqueued}",
            f"duplicate traces: {self.duplicate_traces}",
            f"duplicate variants: {self.duplicate_variants}",
            f"replay divergences: {self.divergences}",
            f"step-limited runs: {self.step_limited}",
            f"bounded: {'yes' if self.bounded else 'no'}",
            "",
        ]
        for n, key in enumerate(self.order, start=1):
            origin = self.origins[key]
            via = (
                f" via {origin.old_tag}->{origin.new_tag} at "
                f"{origin.replaced_at[0]}[{origin.replaced_at[1]}]"
                if origin
                else " (seed run)"
            )
            orphan_list = ", ".join(self.orphans[key]) or "none"
            lines.append(f"trace {n:04d}: {self.outcomes[key]}{via}")
            lines.append(f"  races: {self.race_counts[key]}, orphans: {orphan_list}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class _Pending:
    prefix: Trace
    replaced_at: tuple[Pid, int]
    old_tag: Tag
    new_tag: Tag
    parent_key: str


def explore(
    program: Program,
    seed: int = 0,
    max_steps: int = 10000,
    max_traces: int = 10000,
) -> ExplorationReport:
    report = ExplorationReport()
    pending_keys: set[str] = set()
    queue: deque[_Pending] = deque()

    def record(t: Trace, outcome_kind: str, origin: Optional[Origin]) -> Optional[str]:
        key = t.key()
        if key in report.traces:
            report.duplicate_traces += 1
            return None
        report.traces[key] = t
        report.outcomes[key] = outcome_kind
        report.orphans[key] = sorted(orphans(t), key=name_sort_key)
        report.origins[key] = origin
        report.order.append(key)
        return key

    def harvest(t: Trace, key: str, origin: Optional[Origin]) -> None:
        count = 0
        for rep in all_races(t):
            pid, idx = rep.receive
            if origin is not None:
                rpid, ridx = origin.replaced_at
                prefix = report_prefixes[key]
                if pid == rpid:
                    if idx < ridx:
                        continue
                elif idx < len(prefix.procs.get(pid, ())):
                    continue
            for racer in rep.sorted_racers():
                count += 1
                v = variant(t, rep.subject, racer)
                vkey = v.trace.key()
                if vkey in pending_keys:
                    report.duplicate_variants += 1
                    continue
                pending_keys.add(vkey)
                report.variants_enqueued += 1
                queue.append(_Pending(v.trace, v.replaced_at, rep.subject, racer, key))
        report.race_counts[key] = count

    report_prefixes: dict[str, Trace] = {}

    t0, outcome0 = run_random(program, seed, max_steps)
    if outcome0.kind == "step-limit":
        report.step_limited += 1
    key0 = record(t0, str(outcome0), None)
    assert key0 is not None
    harvest(t0, key0, None)

    while queue:
        if len(report.traces) >= max_traces:
            report.bounded = True
            break
        item = queue.popleft()
        try:
            sys, _ = replay_prefix(program, item.prefix)
        except DivergenceError:
            report.divergences += 1
            continue
        t, outcome = run_deterministic(sys, max_steps)
        if outcome.kind == "step-limit":
            report.step_limited += 1
        origin = Origin(item.parent_key, item.replaced_at, item.old_tag, item.new_tag)
        key = record(t, str(outcome), origin)
        if key is None:
            continue
        report_prefixes[key] = item.prefix
        harvest(t, key, origin)
    return report


def distinctness_check(report: ExplorationReport) -> Optional[str]:
    """None when all explored traces are pairwise distinct and every
    variant-descended trace differs from its parent at the replaced receive;
    otherwise a description of the first violation."""
    keys = report.order
    for i, k1 in enumerate(keys):
        for k2 in keys[i + 1 :]:
            if report.traces[k1] == report.traces[k2]:
                return f"duplicate traces under keys {k1!r} and {k2!r}"
    for key in keys:
        origin = report.origins.get(key)
        if origin is None:
            continue
        parent = report.traces.get(origin.parent_key)
        if parent is None:
            continue
        pid, idx = origin.replaced_at
        child_seq = report.traces[key].procs.get(pid, ())
        parent_seq = parent.procs.get(pid, ())
        if idx >= len(child_seq) or idx >= len(parent_seq):
            return f"replaced receive {pid}[{idx}] missing in trace or parent"
        if child_seq[idx] == parent_seq[idx]:
            return (
                f"trace derived from {origin.old_tag}->{origin.new_tag} does not "
                f"differ from its parent at {pid}[{idx}]"
            )
    return None
