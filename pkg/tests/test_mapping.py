import numpy as np
import pytest

from tcmnoma.errors import IndexOutOfRange, InvalidDimensions, InvalidPreset
from tcmnoma.mapping import build_mapping, users_on_subcarrier


def test_preset_grid():
    F = build_mapping(4, 2, 6, preset="paper-fig1")
    assert F.K == 4 and F.J == 6 and F.N == 2 and F.d_f == 3
    expect = np.array(
        [
            [1, 1, 0, 0, 0, 1],
            [1, 0, 0, 1, 1, 0],
            [0, 1, 1, 1, 0, 0],
            [0, 0, 1, 0, 1, 1],
        ],
        dtype=np.uint8,
    )
    assert np.array_equal(F.entries, expect)
    assert F.row_weights == (3, 3, 3, 3)


def test_preset_users_per_subcarrier():
    F = build_mapping(4, 2, 6, preset="paper-fig1")
    assert users_on_subcarrier(F, 1) == (1, 2, 6)
    assert users_on_subcarrier(F, 2) == (1, 4, 5)
    assert users_on_subcarrier(F, 3) == (2, 3, 4)
    assert users_on_subcarrier(F, 4) == (3, 5, 6)


def test_preset_occupied_subcarriers():
    F = build_mapping(4, 2, 6, preset="paper-fig1")
    assert F.occupied_subcarriers(1) == (1, 2)
    assert F.occupied_subcarriers(3) == (3, 4)
    assert F.occupied_subcarriers(6) == (1, 4)


def test_default_enumeration_is_lexicographic():
    F = build_mapping(4, 2, 6)
    subsets = [tuple(np.flatnonzero(F.entries[:, j]) + 1) for j in range(6)]
    assert subsets == [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]
    assert F.d_f == 3


def test_default_partial_user_count():
    F = build_mapping(4, 2, 3)
    assert F.J == 3
    assert F.d_f == int(F.entries.sum(axis=1).max())


def test_duplicate_columns_allowed():
    F = build_mapping(2, 2, 2, preset=[[1, 1], [1, 1]])
    assert F.d_f == 2
    assert users_on_subcarrier(F, 1) == (1, 2)


def test_dimension_errors():
    with pytest.raises(InvalidDimensions):
        build_mapping(4, 0, 6)
    with pytest.raises(InvalidDimensions):
        build_mapping(4, 5, 6)
    with pytest.raises(InvalidDimensions):
        build_mapping(4, 2, 0)
    with pytest.raises(InvalidDimensions):
        build_mapping(4, 2, 7)


def test_preset_errors():
    with pytest.raises(InvalidPreset):
        build_mapping(4, 2, 6, preset="no-such-grid")
    with pytest.raises(InvalidPreset):
        build_mapping(4, 2, 6, preset=[[1, 1], [1, 1]])
    with pytest.raises(InvalidPreset):
        build_mapping(2, 2, 2, preset=[[1, 2], [1, 0]])
    with pytest.raises(InvalidPreset):
        build_mapping(2, 2, 2, preset=[[1, 0], [1, 0]])  # column 2 weight 0
    with pytest.raises(InvalidPreset):
        build_mapping(3, 2, 3, preset=[[1, 1, 0], [1, 1, 1], [0, 0, 1]])


def test_index_errors():
    F = build_mapping(4, 2, 6, preset="paper-fig1")
    for k in (0, 5):
        with pytest.raises(IndexOutOfRange):
            users_on_subcarrier(F, k)
    for j in (0, 7):
        with pytest.raises(IndexOutOfRange):
            F.occupied_subcarriers(j)
