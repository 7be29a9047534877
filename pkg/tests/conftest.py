import shutil
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
FIXTURE_DIR = TESTS_DIR / "fixtures"
GOLDEN_DIR = TESTS_DIR / "golden"

FIXTURE_FILES = [
    "threads.jsonl",
    "faers.csv",
    "faers_totals.csv",
    "matchmap.csv",
    "overrides.csv",
    "annotations.csv",
    "config.ini",
]


@pytest.fixture
def fixture_workdir(tmp_path) -> Path:
    """Copy the bundled corpus, caches, and config into a writable dir.

    Keeps test runs hermetic: the pipeline writes out/ next to the copied
    config, never into the repository.
    """
    for name in FIXTURE_FILES:
        shutil.copy(FIXTURE_DIR / name, tmp_path / name)
    shutil.copytree(FIXTURE_DIR / "cache", tmp_path / "cache")
    return tmp_path


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN_DIR
