from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def lpt_dump_text() -> str:
    return (DATA_DIR / "lpt_dump.txt").read_text(encoding="utf-8")
