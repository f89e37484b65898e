import random

import pytest
from hypothesis import strategies as st

from kscontext.graphs import ExclusivityGraph


def random_graph(rng: random.Random, n: int, p: float = 0.5) -> ExclusivityGraph:
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return ExclusivityGraph.from_edges(n, edges)


@st.composite
def graphs(draw, min_n=1, max_n=9):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    bits = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return ExclusivityGraph.from_edges(n, [e for e, b in zip(pairs, bits) if b])


@pytest.fixture
def rng():
    return random.Random(20240611)


# (criterion, passed, detail) lines recorded by the acceptance suite
ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def accept():
    def record(criterion: str, passed: bool, detail: str) -> None:
        ACCEPTANCE.append((criterion, bool(passed), detail))
        assert passed, f"{criterion}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")
