import pytest

from bridge_helpers import TINY_CONFIG_TEXT


@pytest.fixture(scope="session")
def tiny_config_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("bridge") / "bridge.conf"
    path.write_text(TINY_CONFIG_TEXT)
    return path
