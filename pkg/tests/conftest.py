import numpy as np
import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def record_acceptance():
    def record(number, name, ok, detail):
        ACCEPTANCE_LINES.append((number, name, bool(ok), detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda x: x[0]):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {name}: {detail}")


def random_state(rng, dim, rank=None):
    rank = dim if rank is None else rank
    A = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
