import random

import pytest

from vasreach.core import Action, Instance, Prerun, Vas, run_from_actions

FIG_TEXT = """\
dim 2
action a 1 1
action b -1 -2
init 0 2
target 1 0
"""


@pytest.fixture
def two_counter():
    """The running 2-dim example: a=(1,1), b=(-1,-2), (0,2) -> (1,0)."""
    vas = Vas(2, (Action("a", (1, 1)), Action("b", (-1, -2))))
    return Instance(vas, (0, 2), (1, 0))


@pytest.fixture
def two_counter_run(two_counter):
    a, b = two_counter.vas.actions
    return run_from_actions((0, 2), [a] * 4 + [b] * 3)


@pytest.fixture
def three_counter():
    """The 3-dim local-exploration example: a=(1,1,-1), b=(-1,0,1)."""
    return Vas(3, (Action("a", (1, 1, -1)), Action("b", (-1, 0, 1))))


def random_prerun(rng: random.Random, vas: Vas, max_len=4, max_val=4) -> Prerun:
    dim = vas.dim

    def cfg():
        return tuple(rng.randint(0, max_val) for _ in range(dim))

    word = tuple((cfg(), rng.choice(vas.actions), cfg())
                 for _ in range(rng.randint(0, max_len)))
    return Prerun(cfg(), word, cfg())


def pump_prerun(rng: random.Random, vas: Vas, prerun: Prerun) -> Prerun:
    """A compatible enlargement: inflate values, insert arbitrary letters."""
    dim = vas.dim

    def up(c):
        return tuple(x + rng.randint(0, 2) for x in c)

    def noise():
        c = tuple(rng.randint(0, 3) for _ in range(dim))
        return (c, rng.choice(vas.actions), c)

    word = []
    for (u, a, v) in prerun.word:
        while rng.random() < 0.4:
            word.append(noise())
        word.append((up(u), a, up(v)))
    while rng.random() < 0.4:
        word.append(noise())
    return Prerun(up(prerun.source), tuple(word), up(prerun.target))
