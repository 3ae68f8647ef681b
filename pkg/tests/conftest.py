from __future__ import annotations

import random

import pytest

SEED = 20130


@pytest.fixture
def rng() -> random.Random:
    return random.Random(SEED)
