import numpy as np
import pytest

from cloe.lti import StateSpaceModel


def random_minimal_system(rng: np.random.Generator, n: int, m: int, p: int) -> StateSpaceModel:
    """Stable system of order n: a mix of lightly damped pairs and real poles in [0.1, 10] rad/s."""
    A = np.zeros((n, n))
    i = 0
    used = []
    while i < n:
        w = 10 ** rng.uniform(-1, 1)
        while any(abs(np.log10(w / u)) < 0.05 for u in used):
            w = 10 ** rng.uniform(-1, 1)
        used.append(w)
        if n - i >= 2 and rng.random() < 0.7:
            z = rng.uniform(0.02, 0.5)
            A[i : i + 2, i : i + 2] = [[0.0, w], [-w, -2 * z * w]]
            i += 2
        else:
            A[i, i] = -w
            i += 1
    return StateSpaceModel(A, rng.standard_normal((n, p)), rng.standard_normal((m, n)))


@pytest.fixture
def first_order():
    """G(s) = 1/(s+1)."""
    return StateSpaceModel([[-1.0]], [[1.0]], [[1.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def report(criterion: str, ok: bool, detail: str) -> bool:
    """Record one acceptance line; shown in the terminal summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
