import pytest
from hypothesis import settings

settings.register_profile("suite", max_examples=50, deadline=None)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def acceptance(request):
    """Recorder for acceptance-criterion outcomes.

    Each criterion test calls ``record(criterion, passed, detail)``; the
    collected lines are printed in the terminal summary so every criterion
    gets exactly one visible pass/fail line.
    """
    lines = getattr(request.config, "_acceptance_lines", None)
    if lines is None:
        lines = request.config._acceptance_lines = []

    def record(criterion: str, passed: bool, detail: str = ""):
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}" + (
            f"  [{detail}]" if detail else ""
        )
        lines.append(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
