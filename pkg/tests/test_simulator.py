import pytest

from racetrace import (
    DivergenceError,
    ProgramError,
    SimulationError,
    Outcome,
    Rec,
    Send,
    Spawn,
    enabled,
    enumerate_executions,
    initial_state,
    parse_program,
    replay_prefix,
    run_deterministic,
    run_random,
    serialize_program,
    step,
    validate_trace,
)
from racetrace.parsing import ParseError
from racetrace.terms import Atom, Int, Tup

from conftest import fixture_text


def val(n):
    return Tup((Atom("val"), Int(n)))


# ---------------------------------------------------------------------------
# Parsing and static checks
# ---------------------------------------------------------------------------


def test_program_roundtrip_on_fixture_files():
    for name in ("proga.prog", "progb.prog", "progc.prog"):
        text = fixture_text(name)
        assert serialize_program(parse_program(text)) == text


def test_unknown_main_rejected():
    with pytest.raises(ProgramError, match="main"):
        parse_program("program { main nope\n def f() { ok } }")


def test_main_with_parameters_rejected():
    with pytest.raises(ProgramError, match="no parameters"):
        parse_program("program { main f\n def f(X) { X } }")


def test_unknown_function_rejected():
    with pytest.raises(ProgramError, match="unknown function"):
        parse_program("program { main f\n def f() { spawn g() } }")


def test_arity_mismatch_rejected():
    with pytest.raises(ProgramError, match="expects 1"):
        parse_program(
            "program { main f\n def f() { spawn g() }\n def g(X) { X } }"
        )


def test_unbound_variable_rejected():
    with pytest.raises(ProgramError, match="unbound variable Y"):
        parse_program("program { main f\n def f() { send Y to <p1> } }")


def test_receive_binding_scopes_into_clause_body():
    parse_program(
        "program { main f\n"
        " def f() { send {val,1} to <p1>; receive { {val,M} -> send M to <p1> } } }"
    )


def test_duplicate_definition_rejected():
    with pytest.raises(ParseError, match="defined twice"):
        parse_program("program { main f\n def f() { ok }\n def f() { ok } }")


# ---------------------------------------------------------------------------
# Stepping
# ---------------------------------------------------------------------------


def test_enabled_and_naming_on_proga(proga):
    sys = initial_state(proga)
    assert enabled(sys) == [("p1", Spawn("p1.1"))]
    assert step(sys, "p1") == Spawn("p1.1")
    # p1.1 blocks on an empty mailbox; only p1 can move
    assert enabled(sys) == [("p1", Spawn("p1.2"))]
    step(sys, "p1")
    # now p1 and p1.2 both want to send
    assert enabled(sys) == [
        ("p1", Send("p1.1", val(1), "p1.1")),
        ("p1.2", Send("p1.2.1", val(0), "p1.1")),
    ]


def test_receive_takes_oldest_matching_message(proga):
    sys = initial_state(proga)
    for pid in ("p1", "p1", "p1.2", "p1.2", "p1"):
        step(sys, pid)
    # mailbox of p1.1 is [{val,0}, {val,2}, {val,1}]; the guard skips {val,0}
    assert enabled(sys) == [("p1.1", Rec("p1.2.2", sys.procs["p1.1"].stmts[0].cs))]
    assert step(sys, "p1.1").tag == "p1.2.2"


def test_step_of_disabled_pid_rejected(proga):
    sys = initial_state(proga)
    with pytest.raises(SimulationError, match="not enabled"):
        step(sys, "p1.1")


def test_send_to_non_pid_rejected():
    program = parse_program(
        "program { main f\n def f() { X = ok; send ok to X } }"
    )
    with pytest.raises(SimulationError, match="not a pid"):
        enabled(initial_state(program))


# ---------------------------------------------------------------------------
# Whole runs
# ---------------------------------------------------------------------------


def test_run_random_is_seed_deterministic(proga, progb, progc):
    for program in (proga, progb, progc):
        t1, o1 = run_random(program, seed=7)
        t2, o2 = run_random(program, seed=7)
        assert t1 == t2 and o1 == o2
        assert validate_trace(t1) is None


def test_run_outcomes(proga, progb):
    _, outcome = run_random(proga, seed=0)
    assert outcome == Outcome("completed")
    _, limited = run_random(proga, seed=0, max_steps=2)
    assert limited == Outcome("step-limit")
    # progb's server can consume {stop} first and then starve the {job,N}
    # guard, or finish; both runs end quiescent
    _, o = run_random(progb, seed=3)
    assert o.kind in ("completed", "deadlock")


def test_deadlock_reports_blocked_pids():
    program = parse_program(
        "program { main f\n def f() { receive { {val,M} -> M } } }"
    )
    t, outcome = run_deterministic(initial_state(program))
    assert outcome == Outcome("deadlock", ("p1",))
    assert str(outcome) == "deadlock(p1)"
    assert t.procs == {"p1": ()}


def test_enumerate_executions_counts(proga, progb, progc):
    for program, expected in ((proga, 2), (progb, 4), (progc, 5)):
        traces, limited = enumerate_executions(program)
        assert limited == 0
        assert len(traces) == expected
        for key, t in traces.items():
            assert validate_trace(t) is None
            assert t.key() == key


def test_enumeration_contains_every_random_run(proga):
    keys = set(enumerate_executions(proga)[0])
    for seed in range(10):
        t, outcome = run_random(proga, seed=seed)
        assert outcome.kind != "step-limit"
        assert t.key() in keys


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


def test_replay_prefix_then_continue(proga):
    # drive proga along a full recorded run, renamed to fresh log names
    full, _ = run_random(proga, seed=1)
    sys, align = replay_prefix(proga, full)
    t, outcome = run_deterministic(sys)
    assert outcome == Outcome("completed")
    # the continued run adds nothing: the prefix was complete
    assert {p: len(a) for p, a in t.procs.items()} == {
        align.pid_log_to_sim[p]: len(a) for p, a in full.procs.items()
    }


def test_replay_partial_prefix(proga):
    # a step-limited run yields a genuine (partial) trace to resume from
    prefix, outcome = run_random(proga, seed=1, max_steps=4)
    assert outcome == Outcome("step-limit")
    sys, _ = replay_prefix(proga, prefix)
    t, outcome = run_deterministic(sys)
    assert outcome == Outcome("completed")
    assert validate_trace(t) is None
    assert sum(map(len, t.procs.values())) > sum(map(len, prefix.procs.values()))


def test_replay_rejects_invalid_prefix(proga, tau_a):
    procs = dict(tau_a.procs)
    procs["p9"] = (Send("l9", val(1), "p1"),)
    with pytest.raises(ValueError, match="invalid prefix"):
        replay_prefix(proga, type(tau_a)("p1", procs))


def test_replay_detects_divergence(proga, tau_a):
    # tau_a's p1 sends {val,1} as its third action, but proga's p1 spawns
    # with different arguments: the logged value {val,1} is fine, the logged
    # receive order is not reachable after mutating the value
    mutated_procs = dict(tau_a.procs)
    send = mutated_procs["p1"][2]
    mutated_procs["p1"] = mutated_procs["p1"][:2] + (
        Send(send.tag, val(9), send.target),
    )
    with pytest.raises(DivergenceError, match="differs from logged"):
        replay_prefix(proga, type(tau_a)("p1", mutated_procs))


def test_replay_accepts_foreign_names(proga, tau_a):
    # tau_a uses p1/p2/p3 and l1..l3; the alignment maps them onto the
    # simulator's hierarchical names
    sys, align = replay_prefix(proga, tau_a)
    assert align.pid_log_to_sim["p2"] == "p1.1"
    assert align.pid_log_to_sim["p3"] == "p1.2"
    assert align.tag_log_to_sim["l1"] == "p1.1"
    t, outcome = run_deterministic(sys)
    assert outcome == Outcome("completed")
