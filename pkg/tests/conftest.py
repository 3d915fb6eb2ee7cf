import json
from pathlib import Path

import pytest

from mbtkit.generator import generate_suite, parse_criterion
from mbtkit.mapping import MappingTable, instantiate_suite
from mbtkit.model_io import load_model, model_hash
from mbtkit.runner import bundled_path

GOLDEN = Path(__file__).parent / "golden"
FULL_COVERAGE = "max_tests(100) && state_coverage(100) && transition_coverage(100)"


@pytest.fixture(scope="session")
def reference_model():
    return load_model(bundled_path("reference.efsm"))


@pytest.fixture(scope="session")
def reference_table():
    return MappingTable.load(bundled_path("reference_table.json"))


@pytest.fixture(scope="session")
def seed7(reference_model):
    """The seed-7 suite under the full-coverage criterion, with its ledger."""
    return generate_suite(reference_model, parse_criterion(FULL_COVERAGE), seed=7)


@pytest.fixture(scope="session")
def seed7_concrete(seed7, reference_model, reference_table):
    suite, _ = seed7
    return instantiate_suite(suite, reference_table, model_hash=model_hash(reference_model))


def load_golden(name):
    return json.loads((GOLDEN / name).read_text(encoding="utf-8"))


# one PASS/FAIL line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    def report(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
