from pathlib import Path

import pytest

from pmc_adapt.oracle import load_instance

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures" / "discrete"
CONFIGS = ROOT / "configs"
VALID_FIXTURES = ["two_state_symmetric", "two_state_asymmetric", "three_state_d3", "five_state_d3", "eight_state_d4"]


@pytest.fixture
def instance():
    def _load(name):
        return load_instance(FIXTURES / f"{name}.yaml")

    return _load


ACCEPTANCE_LINES = []


def record_acceptance(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
