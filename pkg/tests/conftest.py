import os
import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
TOY3 = Path(__file__).resolve().parent / "data" / "toy3"
TOY12 = Path(__file__).resolve().parent / "data" / "toy12"

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def toy3():
    from graph_infill.ingest import load_dataset
    return load_dataset(TOY3)


@pytest.fixture(scope="session")
def toy12():
    from graph_infill.ingest import load_dataset
    return load_dataset(TOY12)


def _real(name):
    path = DATA / name
    if not (path / "edges.tsv").exists():
        pytest.skip(f"{name} not converted; see scripts/convert_raw.py")
    from graph_infill.ingest import load_dataset
    return load_dataset(path)


@pytest.fixture(scope="session")
def cora():
    return _real("cora")


@pytest.fixture(scope="session")
def citeseer():
    return _real("citeseer")


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    """Collect one PASS/FAIL line; shown in the terminal summary and printed."""
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
