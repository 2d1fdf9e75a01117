"""Values, patterns, guards and constraints for selective receives.

The analysis only needs a decidable ``match(value, constraint)`` predicate;
this module provides one concrete instantiation: finite first-order terms
(integers, atoms, tuples, lists, pid and tag literals), linear patterns with
variables and wildcard, and guards built from comparisons over the pattern
variables. Everything here is immutable and side-effect free.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union


# ---------------------------------------------------------------------------
# Term / pattern nodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Int:
    value: int


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Tup:
    items: tuple["Pattern", ...]


@dataclass(frozen=True)
class Lst:
    items: tuple["Pattern", ...]


@dataclass(frozen=True)
class PidLit:
    """A pid appearing inside a message value; never equal to an atom."""

    pid: str


@dataclass(frozen=True)
class TagLit:
    """A message tag appearing inside a value; never equal to an atom."""

    tag: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Wildcard:
    pass


# A Term is a ground Pattern (no Var / Wildcard nodes).
Pattern = Union[Int, Atom, Tup, Lst, PidLit, TagLit, Var, Wildcard]
Term = Union[Int, Atom, Tup, Lst, PidLit, TagLit]

Substitution = dict[str, Term]


def is_ground(t: Pattern) -> bool:
    if isinstance(t, (Var, Wildcard)):
        return False
    if isinstance(t, (Tup, Lst)):
        return all(is_ground(x) for x in t.items)
    return True


def pattern_vars(p: Pattern) -> list[str]:
    """Variable names in left-to-right order (with repetitions, if any)."""
    if isinstance(p, Var):
        return [p.name]
    if isinstance(p, (Tup, Lst)):
        out: list[str] = []
        for x in p.items:
            out.extend(pattern_vars(x))
        return out
    return []


def is_linear(p: Pattern) -> bool:
    vs = pattern_vars(p)
    return len(vs) == len(set(vs))


# ---------------------------------------------------------------------------
# Guards
# ---------------------------------------------------------------------------

CMP_OPS = ("==", "/=", "<", ">", "=<", ">=")


@dataclass(frozen=True)
class GTrue:
    pass


@dataclass(frozen=True)
class Cmp:
    op: str  # one of CMP_OPS
    lhs: Pattern  # Var, Int or Atom
    rhs: Pattern


@dataclass(frozen=True)
class GAnd:
    lhs: "Guard"
    rhs: "Guard"


@dataclass(frozen=True)
class GOr:
    lhs: "Guard"
    rhs: "Guard"


Guard = Union[GTrue, Cmp, GAnd, GOr]


def guard_vars(g: Guard) -> set[str]:
    if isinstance(g, Cmp):
        return set(pattern_vars(g.lhs)) | set(pattern_vars(g.rhs))
    if isinstance(g, (GAnd, GOr)):
        return guard_vars(g.lhs) | guard_vars(g.rhs)
    return set()


def eval_guard(g: Guard, subst: Substitution) -> bool:
    """Total guard evaluation; never raises on a complete substitution.

    Ordering comparisons are only defined between two integers; any other
    operand combination evaluates to False. Equality is structural.
    """
    if isinstance(g, GTrue):
        return True
    if isinstance(g, GAnd):
        return eval_guard(g.lhs, subst) and eval_guard(g.rhs, subst)
    if isinstance(g, GOr):
        return eval_guard(g.lhs, subst) or eval_guard(g.rhs, subst)
    assert isinstance(g, Cmp)
    lhs = _resolve(g.lhs, subst)
    rhs = _resolve(g.rhs, subst)
    if g.op == "==":
        return lhs == rhs
    if g.op == "/=":
        return lhs != rhs
    if isinstance(lhs, Int) and isinstance(rhs, Int):
        if g.op == "<":
            return lhs.value < rhs.value
        if g.op == ">":
            return lhs.value > rhs.value
        if g.op == "=<":
            return lhs.value <= rhs.value
        if g.op == ">=":
            return lhs.value >= rhs.value
    return False


def _resolve(operand: Pattern, subst: Substitution) -> Term:
    if isinstance(operand, Var):
        return subst[operand.name]
    assert is_ground(operand)
    return operand  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Constraints
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Clause:
    pattern: Pattern
    guard: Guard


@dataclass(frozen=True)
class Constraint:
    cs_id: str
    clauses: tuple[Clause, ...]

    def __post_init__(self) -> None:
        if not self.clauses:
            raise ValueError(f"constraint {self.cs_id} has no clauses")
        for cl in self.clauses:
            if not is_linear(cl.pattern):
                raise ValueError(
                    f"constraint {self.cs_id}: non-linear pattern (repeated variable)"
                )
            extra = guard_vars(cl.guard) - set(pattern_vars(cl.pattern))
            if extra:
                raise ValueError(
                    f"constraint {self.cs_id}: guard uses unbound variable(s) "
                    + ", ".join(sorted(extra))
                )

    def same_clauses(self, other: "Constraint") -> bool:
        """Structural equality ignoring the constraint id."""
        return self.clauses == other.clauses


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------


def match_pattern(p: Pattern, v: Term) -> Optional[Substitution]:
    """The unique substitution s with p[s] = v, or None."""
    if isinstance(p, Wildcard):
        return {}
    if isinstance(p, Var):
        return {p.name: v}
    if isinstance(p, Tup) and isinstance(v, Tup) or isinstance(p, Lst) and isinstance(v, Lst):
        if len(p.items) != len(v.items):
            return None
        subst: Substitution = {}
        for pi, vi in zip(p.items, v.items):
            si = match_pattern(pi, vi)
            if si is None:
                return None
            subst.update(si)  # patterns are linear, no clashes possible
        return subst
    return {} if p == v else None


def matching_clause(v: Term, cs: Constraint) -> Optional[int]:
    """Index of the first clause whose pattern matches v and guard holds."""
    for i, cl in enumerate(cs.clauses):
        subst = match_pattern(cl.pattern, v)
        if subst is not None and eval_guard(cl.guard, subst):
            return i
    return None


def match(v: Term, cs: Constraint) -> bool:
    return matching_clause(v, cs) is not None


# ---------------------------------------------------------------------------
# Rendering (canonical textual form)
# ---------------------------------------------------------------------------


def render_term(t: Pattern) -> str:
    if isinstance(t, Int):
        return str(t.value)
    if isinstance(t, Atom):
        return t.name
    if isinstance(t, Tup):
        return "{" + ",".join(render_term(x) for x in t.items) + "}"
    if isinstance(t, Lst):
        return "[" + ",".join(render_term(x) for x in t.items) + "]"
    if isinstance(t, PidLit):
        return f"<{t.pid}>"
    if isinstance(t, TagLit):
        return f"#{t.tag}"
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Wildcard):
        return "_"
    raise TypeError(f"not a term: {t!r}")


def render_guard(g: Guard) -> str:
    if isinstance(g, GTrue):
        return "true"
    if isinstance(g, Cmp):
        return f"{render_term(g.lhs)} {g.op} {render_term(g.rhs)}"
    op = "and" if isinstance(g, GAnd) else "or"
    return f"({render_guard(g.lhs)} {op} {render_guard(g.rhs)})"


def render_clause(cl: Clause, body: str = ".") -> str:
    head = render_term(cl.pattern)
    if not isinstance(cl.guard, GTrue):
        head += " when " + render_guard(cl.guard)
    return f"{head} -> {body}"


def render_constraint(cs: Constraint) -> str:
    return f"{cs.cs_id}: " + "; ".join(render_clause(cl) for cl in cs.clauses)
