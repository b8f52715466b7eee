import os

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# One line per acceptance criterion, printed at the end of the session.
CRITERIA = []


@pytest.fixture
def criterion():
    def record(label, ok, detail):
        line = f"criterion {label}: {'PASS' if ok else 'FAIL'}  {detail}"
        CRITERIA.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=_order):
            terminalreporter.write_line(line)


def _order(line):
    label = line.split(":")[0].split()[1]
    num = "".join(ch for ch in label if ch.isdigit())
    return (int(num) if num else 0, label)
