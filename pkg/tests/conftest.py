import os
import sys

import pytest

# make the sibling oracle helpers importable regardless of invocation dir
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))


@pytest.fixture
def rng():
    import random

    return random.Random(0xBEEF)
