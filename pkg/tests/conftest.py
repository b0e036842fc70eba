import itertools
import random

import pytest
from hypothesis import strategies as st

from torus_gathering.classify import canonical_key, is_rigid
from torus_gathering.torus_core import Coord, TorusDims

D65 = TorusDims(6, 5)
D75 = TorusDims(7, 5)


def rigid_canonical(dims: TorusDims, k: int) -> list:
    seen = set()
    out = []
    for cells in itertools.combinations(list(dims.nodes()), k):
        key = canonical_key(cells, dims)
        if key in seen:
            continue
        seen.add(key)
        if is_rigid(frozenset(cells), dims):
            out.append(frozenset(cells))
    return out


@st.composite
def occupancies(draw, dims=D65, min_k=1, max_k=6):
    k = draw(st.integers(min_k, max_k))
    idx = draw(st.lists(st.integers(0, dims.n - 1), min_size=k, max_size=k, unique=True))
    return frozenset(Coord(i // dims.ell, i % dims.ell) for i in idx)


@pytest.fixture
def rng():
    return random.Random(1234)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
