import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Call with (number, ok, detail); the line is echoed in the terminal summary."""
    reported = []

    def report(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        reported.append(number)
        _ACCEPTANCE_LINES.append(line)
        print(line)

    yield report
    if not reported:
        _ACCEPTANCE_LINES.append(f"{request.node.name}: FAIL  raised before reporting")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
