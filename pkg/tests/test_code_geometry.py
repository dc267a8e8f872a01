import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlec.code_geometry import (
    Ambiguous,
    CodeSpace,
    census,
    code_distance,
    hamming_distance,
    nearest_valid,
    p_valid,
    repetition_code,
)
from mlec.errors import EntropyExceedsSpace, LengthMismatch, SingletonCode, SpaceTooLarge

from oracles import brute_census


def test_hamming_distance():
    assert hamming_distance("aa", "ba") == 1
    assert hamming_distance((0, 1, 2), (0, 1, 2)) == 0
    assert hamming_distance((0, 1, 2), (2, 1, 0)) == 2
    with pytest.raises(LengthMismatch):
        hamming_distance((0, 1), (0,))


def test_code_distance():
    assert code_distance(repetition_code(2)) == 2
    assert code_distance(repetition_code(3)) == 3
    full = CodeSpace(2, 2, tuple(itertools.product(range(2), repeat=2)))
    assert code_distance(full) == 1
    with pytest.raises(SingletonCode):
        code_distance(CodeSpace(2, 2, ((0, 0),)))


def test_p_valid():
    assert p_valid(2, 2, 4) == 0.25
    assert p_valid(3 * 1.584962500721156, 3, 3) == pytest.approx(1.0)
    assert p_valid(0, 2, 3) == 0.125
    with pytest.raises(EntropyExceedsSpace):
        p_valid(5, 2, 4)


def test_p_valid_decreases_with_dimension():
    values = [p_valid(3.0, 2, nu) for nu in range(3, 12)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_census_repetition_codes():
    r2 = census(repetition_code(2))
    assert (r2.valid, r2.correctable, r2.ambiguous, r2.distance) == (2, 0, 2, 2)
    r3 = census(repetition_code(3))
    assert (r3.valid, r3.correctable, r3.ambiguous, r3.distance) == (2, 6, 0, 3)


def test_census_full_space():
    full = CodeSpace(3, 2, tuple(itertools.product(range(3), repeat=2)))
    rep = census(full)
    assert (rep.valid, rep.correctable, rep.ambiguous) == (9, 0, 0)


def test_census_single_point_has_no_distance():
    rep = census(CodeSpace(2, 3, ((0, 1, 0),)))
    assert rep.distance is None
    assert (rep.valid, rep.correctable, rep.ambiguous) == (1, 7, 0)


def test_census_cap():
    with pytest.raises(SpaceTooLarge):
        census(repetition_code(30))
    with pytest.raises(SpaceTooLarge):
        census(repetition_code(5), cap=16)


def test_census_to_dict_field_names():
    assert set(census(repetition_code(2)).to_dict()) == {"total_points", "valid", "correctable", "ambiguous", "distance"}


def test_census_independent_of_thread_count(monkeypatch):
    import mlec.code_geometry as cg

    space = CodeSpace(3, 6, ((0,) * 6, (1, 2, 0, 1, 2, 0), (2, 2, 2, 1, 1, 1)))
    monkeypatch.setattr(cg, "_CHUNK_CELLS", 64)
    single = census(space)
    monkeypatch.setenv("MLEC_THREADS", "4")
    assert census(space) == single


def test_nearest_valid():
    rep3 = repetition_code(3)
    assert nearest_valid((0, 0, 1), rep3) == (0, 0, 0)
    assert nearest_valid((1, 1, 1), rep3) == (1, 1, 1)
    amb = nearest_valid((0, 1), repetition_code(2))
    assert isinstance(amb, Ambiguous)
    assert set(amb.candidates) == {(0, 0), (1, 1)}
    assert amb.distance == 1


@st.composite
def spaces(draw):
    n = draw(st.integers(2, 4))
    nu = draw(st.integers(1, 5))
    point = st.tuples(*[st.integers(0, n - 1)] * nu)
    valid = draw(st.lists(point, min_size=1, max_size=min(6, n**nu), unique=True))
    return CodeSpace(n, nu, tuple(valid))


@given(spaces())
@settings(max_examples=150, deadline=None)
def test_census_matches_brute_force(space):
    rep = census(space)
    assert (rep.valid, rep.correctable, rep.ambiguous) == brute_census(space.valid_points, space.n, space.nu)
    assert rep.valid + rep.correctable + rep.ambiguous == rep.total_points == space.n**space.nu
    if len(space.valid_points) > 1:
        assert rep.distance >= 1


@given(spaces())
@settings(max_examples=60, deadline=None)
def test_nearest_valid_ambiguous_exactly_when_census_says(space):
    amb = sum(
        isinstance(nearest_valid(p, space), Ambiguous)
        for p in itertools.product(range(space.n), repeat=space.nu)
    )
    assert amb == census(space).ambiguous
