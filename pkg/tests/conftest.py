from __future__ import annotations

import numpy as np
import pytest

from cocycle_lab import scenarios


@pytest.fixture
def lc():
    """f = 0.5 u + cos(2 pi y1) over the golden-mean rotation."""
    return scenarios.build("linear-contraction", alpha=0.5, forcing="cos")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
