import pytest

from tests.helpers import MINIMAL_CONFIG


@pytest.fixture
def minimal_config_text() -> str:
    return MINIMAL_CONFIG


@pytest.fixture
def minimal_config_file(tmp_path):
    path = tmp_path / "minimal.ini"
    path.write_text(MINIMAL_CONFIG, encoding="utf-8")
    return path
