import pytest

from evocell.genome import decode_text

from helpers import GOLDEN_TEXT


@pytest.fixture
def golden_chromosome():
    return decode_text(GOLDEN_TEXT)
