import io

import numpy as np
import pytest

from tcmnoma.constellation import (
    SignalSet,
    build_mother,
    cross_constellation,
    dedup_positions,
    md_position,
    mean_position_energy,
    shape,
    square_qam,
    write_point_table,
)
from tcmnoma.errors import SetTooSmall, TargetTooLarge


def test_square_qam_basics():
    c = square_qam(16)
    assert len(c.points) == 16
    assert len(set(c.points.tolist())) == 16
    assert c.points.sum() == 0
    assert np.all(np.abs(c.points.real) % 2 == 1)
    assert np.all(np.abs(c.points.imag) % 2 == 1)
    assert set(square_qam(4).points.tolist()) == {1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j}


def test_square_qam_rejects_non_square():
    with pytest.raises(ValueError):
        square_qam(8)
    with pytest.raises(ValueError):
        square_qam(9)


def test_cross_sizes():
    assert len(cross_constellation(8).points) == 8
    assert len(cross_constellation(32).points) == 32
    assert len(cross_constellation(128).points) == 128
    for size in (8, 32, 128):
        pts = cross_constellation(size).points
        assert len(set(pts.tolist())) == size
        assert pts.sum() == 0


def test_md_position_sum():
    assert md_position((1 + 1j, -3 + 3j, -1 - 3j)) == -3 + 1j
    assert md_position((0j,)) == 0j


# Sums of d_f odd coordinates per axis make these exact counts: 16QAM with
# d_f=3 spans 10 odd values per axis (10^2=100), 64QAM 22 (484), 256QAM 46
# (2116).
@pytest.mark.parametrize("M,expect", [(16, 100), (64, 484), (256, 2116)])
def test_dedup_position_counts(M, expect):
    mother = build_mother(square_qam(M), 3)
    ded = dedup_positions(mother)
    assert len(ded) == expect
    assert len(set(ded.positions.tolist())) == expect


def test_dedup_too_small():
    with pytest.raises(SetTooSmall):
        dedup_positions(build_mother(square_qam(16), 3), min_size=512)


def test_dedup_tie_keeps_lowest_index():
    comps = np.array([[-1, -1], [-1, 1], [1, -1], [1, 1]], dtype=np.complex128)
    ded = dedup_positions(SignalSet(comps))
    assert sorted(ded.positions.tolist(), key=lambda z: z.real) == [-2, 0, 2]
    at_zero = ded.comps[np.flatnonzero(ded.positions == 0)[0]]
    assert tuple(at_zero) == (-1 + 0j, 1 + 0j)


def test_dedup_prefers_spread_components():
    comps = np.array([[-1, 1], [-3, 3]], dtype=np.complex128)
    ded = dedup_positions(SignalSet(comps))
    assert len(ded) == 1
    assert tuple(ded.comps[0]) == (-3 + 0j, 3 + 0j)


def test_dedup_idempotent():
    mother = build_mother(square_qam(16), 2)
    once = dedup_positions(mother)
    twice = dedup_positions(once)
    assert np.array_equal(once.comps, twice.comps)


def test_shape_ratio_rule_both_modes():
    # ratio = nearest-neighbor distance^2 / |position|^2, smallest leaves first
    for mode in ("dynamic", "static"):
        s = SignalSet.from_positions([0.1, 0.2, 10.0, -10.0])
        kept = shape(s, 2, mode=mode)
        assert sorted(kept.positions.tolist(), key=lambda z: z.real) == [-10.0, 0.1]


def test_shape_exact_tie_removes_highest_index():
    s = SignalSet.from_positions([3, -3, 4, -4])
    kept = shape(s, 2)
    assert sorted(kept.positions.real.tolist()) == [-3, 3]


def test_shape_keeps_zero_energy_point():
    s = SignalSet.from_positions([0, 1, 100])
    kept = shape(s, 2)
    assert sorted(kept.positions.real.tolist()) == [0, 1]


def test_shape_identity_and_errors():
    s = SignalSet.from_positions([1, 2, 3])
    same = shape(s, 3)
    assert np.array_equal(same.positions, s.positions)
    with pytest.raises(TargetTooLarge):
        shape(s, 4)
    with pytest.raises(ValueError):
        shape(s, 2, mode="greedy")


def test_shape_dynamic_vs_static_can_differ_but_size_matches():
    rng = np.random.default_rng(7)
    pts = rng.integers(-20, 21, size=(40, 2))
    pos = np.unique(pts[:, 0] + 1j * pts[:, 1])
    s = SignalSet.from_positions(pos)
    for mode in ("dynamic", "static"):
        kept = shape(s, len(s) - 8, mode=mode)
        assert len(kept) == len(s) - 8
        assert set(kept.positions.tolist()) <= set(s.positions.tolist())


def test_mean_position_energy():
    s = SignalSet.from_positions([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j])
    assert mean_position_energy(s) == 2.0


def test_point_table_roundtrip_text():
    s = SignalSet(np.array([[1 + 1j, -3 - 1j]], dtype=np.complex128))
    buf = io.StringIO()
    write_point_table(s, buf)
    lines = buf.getvalue().strip().split("\n")
    assert len(lines) == 2
    assert lines[1].split("\t") == ["0", "1", "1", "-3", "-1", "-2", "0"]
