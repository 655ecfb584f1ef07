import pytest

from rotrie import RandomTape


@pytest.fixture
def tape():
    return RandomTape(12345)
