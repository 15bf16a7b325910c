from pathlib import Path

import pytest

SAMPLE_CSV = Path(__file__).resolve().parent.parent / "data" / "sample_studies.csv"


@pytest.fixture(scope="session")
def sample_records():
    from vinedta.cli import read_input

    return read_input(SAMPLE_CSV)


def pytest_addoption(parser):
    parser.addoption(
        "--runslow",
        action="store_true",
        default=False,
        help="run the long simulation-tier tests",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="long simulation tier; pass --runslow to enable")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
