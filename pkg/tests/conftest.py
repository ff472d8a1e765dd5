import numpy as np
import pytest

ACCEPTANCE_LINES = []


def record(criterion, passed, detail):
    line = f"criterion {criterion:>4}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: _order(s)):
            terminalreporter.write_line(line)


def _order(line):
    tag = line.split(":")[0].split()[-1]
    digits = "".join(ch for ch in tag if ch.isdigit())
    return (int(digits or 0), tag)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
