import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

# criterion number -> list of (part, passed, detail), filled by the acceptance suite
ACCEPTANCE: dict = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def accept():
    """Record one acceptance measurement; the summary prints one line per criterion."""

    def record(number: int, part: str, passed: bool, detail: str) -> bool:
        ACCEPTANCE.setdefault(number, []).append((part, bool(passed), detail))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        verdict = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        detail = "; ".join(f"{p}: {d}{'' if ok else ' [FAIL]'}" for p, ok, d in parts)
        tr.write_line(f"criterion {number:2d} {verdict}  {detail}")
