import contextlib

import numpy as np
import pytest

from motifcnn.graph import HeteroGraph

_CRITERIA: list[str] = []


class _Line:
    detail = ""


@contextlib.contextmanager
def criterion(number: int, title: str):
    """Records one PASS/FAIL line for the acceptance summary; re-raises failures."""
    line = _Line()
    try:
        yield line
    except BaseException as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        text = f"AC{number:<2} FAIL  {title}: {line.detail} {msg}".rstrip()
        _CRITERIA.append(text)
        print(text)
        raise
    text = f"AC{number:<2} PASS  {title}: {line.detail}".rstrip()
    _CRITERIA.append(text)
    print(text)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for text in sorted(_CRITERIA, key=lambda s: int(s[2:4])):
            terminalreporter.write_line(text)


@pytest.fixture
def triangle_graph():
    return HeteroGraph.from_edges(3, [(0, 1, False), (1, 2, False), (0, 2, False)])


@pytest.fixture
def clique4():
    return HeteroGraph.from_edges(4, [(i, j, False) for i in range(4) for j in range(i + 1, 4)])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
