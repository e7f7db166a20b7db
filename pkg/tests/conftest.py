import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def write(tmp_path):
    """Write text to a fresh file under tmp_path and return its path."""
    counter = iter(range(10**6))

    def _write(text, name=None):
        path = tmp_path / (name or f"f{next(counter)}.txt")
        path.write_text(text, encoding="utf-8")
        return path

    return _write


VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def _verdict(name, ok, detail, seconds):
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail} ({seconds:.1f}s)"
        VERDICTS.append(line)
        print(line)
        assert ok, line

    return _verdict


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
