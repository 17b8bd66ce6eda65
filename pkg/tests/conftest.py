import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from queryboard.relation import TableCatalog, build_table, load_dataset
from queryboard.sqlast import parse_query

FIXTURES = Path(__file__).parent.parent / "fixtures"

RUNNING_EXAMPLE = [
    "SELECT p, count(*) FROM T WHERE a = 1 GROUP BY p",
    "SELECT p, count(*) FROM T WHERE b = 2 GROUP BY p",
    "SELECT a, count(*) FROM T GROUP BY a",
]

# Q1/Q2 differ only in the literal compared against a; Q3 charts a's groups
MULTIVIEW_EXAMPLE = [
    "SELECT p, count(*) FROM T WHERE a = 1 GROUP BY p",
    "SELECT p, count(*) FROM T WHERE a = 2 GROUP BY p",
    "SELECT a, count(*) FROM T GROUP BY a",
]

SDSS_EXAMPLE = [
    "SELECT ra, dec FROM stars WHERE ra BETWEEN 10 AND 20 AND dec BETWEEN 0 AND 5",
    "SELECT ra, dec FROM stars WHERE ra BETWEEN 30 AND 40 AND dec BETWEEN 10 AND 15",
]

SCREEN = (1280, 800)


@pytest.fixture(scope="session")
def catalog():
    return load_dataset(FIXTURES / "demo")


@pytest.fixture(scope="session")
def sdss_catalog():
    return load_dataset(FIXTURES / "sdss")


@pytest.fixture(scope="session")
def running_queries():
    return [parse_query(q) for q in RUNNING_EXAMPLE]


@pytest.fixture(scope="session")
def multiview_queries():
    return [parse_query(q) for q in MULTIVIEW_EXAMPLE]


@pytest.fixture(scope="session")
def sdss_queries():
    return [parse_query(q) for q in SDSS_EXAMPLE]


@pytest.fixture()
def tiny_catalog():
    """The three-row table the hand-evaluated examples use."""
    catalog = TableCatalog()
    catalog.tables["T"] = build_table(
        "T", ["p", "a", "b"], [["1", "1", "4"], ["2", "1", "5"], ["2", "2", "5"]]
    )
    return catalog
