import numpy as np
import pytest

from wirtflow import RandomSource


def crandn(gen, *shape):
    return gen.standard_normal(shape) + 1j * gen.standard_normal(shape)


@pytest.fixture
def gen():
    return RandomSource(20240611).generator()


@pytest.fixture
def unit_x(gen):
    x = crandn(gen, 8)
    return x / np.linalg.norm(x)


ACCEPTANCE_LINES = []


def record(criterion: str, ok: bool, detail: str) -> bool:
    """Print and keep one PASS/FAIL line for an acceptance criterion."""
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
