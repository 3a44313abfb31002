"""Collects one verdict line per acceptance criterion and prints them after the run."""
import pytest

_VERDICTS: dict[str, str] = {}


@pytest.fixture
def verdict():
    def record(criterion: str, ok: bool | None, detail: str) -> None:
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        _VERDICTS[criterion] = f"criterion {criterion:>2}: {status}  {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_VERDICTS, key=lambda k: int(k)):
        terminalreporter.write_line(_VERDICTS[key])
