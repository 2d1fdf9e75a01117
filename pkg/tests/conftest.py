from pathlib import Path

import pytest

from racetrace import parse_interleaving, parse_program, parse_trace

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.fixture
def tau_a():
    return parse_trace(fixture_text("fix_tau_a.trace"))


@pytest.fixture
def run_trace():
    return parse_trace(fixture_text("fix_run.trace"))


@pytest.fixture
def s_a():
    return parse_interleaving(fixture_text("fix_s_a.itl"))


@pytest.fixture
def s_b():
    return parse_interleaving(fixture_text("fix_s_b.itl"))


@pytest.fixture
def s_bad():
    return parse_interleaving(fixture_text("fix_s_bad.itl"))


@pytest.fixture
def proga():
    return parse_program(fixture_text("proga.prog"))


@pytest.fixture
def progb():
    return parse_program(fixture_text("progb.prog"))


@pytest.fixture
def progc():
    return parse_program(fixture_text("progc.prog"))
