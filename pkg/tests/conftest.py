import pytest

from g2kp.backend import HighsBackend
from g2kp.instance import Instance, parse_instance

TOY1_TEXT = "6 6\n2\n4 4 16 1\n2 6 12 2\n"


@pytest.fixture
def toy1() -> Instance:
    return parse_instance(TOY1_TEXT, name="toy1")


@pytest.fixture
def single() -> Instance:
    """One piece exactly the size of the plate."""
    return parse_instance("10 10\n1\n10 10 7 1\n", name="single")


@pytest.fixture(scope="session")
def backend() -> HighsBackend:
    return HighsBackend()


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion."""

    def record(number: int, title: str, ok: bool | None, detail: str = "") -> None:
        verdict = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"[{verdict}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
