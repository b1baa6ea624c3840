import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthetic import walk_series  # noqa: E402


@pytest.fixture(scope="session")
def walk_8k():
    """Medium random-walk series shared by calibration-heavy tests."""
    return walk_series(8000, seed=42, symbol="walk8k")
