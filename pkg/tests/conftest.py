import random

import pytest

from nilentropy import free_nilpotent


@pytest.fixture(scope="session")
def heis():
    """Free class-2 group on two generators (discrete Heisenberg)."""
    return free_nilpotent(2, 2)


@pytest.fixture(scope="session")
def f23():
    return free_nilpotent(2, 3)


@pytest.fixture(scope="session")
def f24():
    return free_nilpotent(2, 4)


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def random_vector(spec, rng, span=4):
    return tuple(rng.randint(-span, span) for _ in range(spec.dim))


def random_word(rank, length, rng, max_exp=2):
    return [
        (rng.randrange(rank), rng.choice([e for e in range(-max_exp, max_exp + 1) if e]))
        for _ in range(length)
    ]
