import os
import pathlib

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]


@pytest.fixture
def table1():
    return pathlib.Path(os.environ.get("SEGTRACK_DATA_DIR", ROOT / "data")) / "table1.csv"


@pytest.fixture
def pages():
    return pathlib.Path(os.environ.get("SEGTRACK_FIXTURES", ROOT / "tests" / "fixtures")) / "pages"
