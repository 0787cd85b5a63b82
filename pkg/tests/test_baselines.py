import numpy as np
import pytest

from tcmnoma.baselines import gray_psk_points, make_conventional_splitter, psk_detect, psk_map
from tcmnoma.constellation import SignalSet, cross_constellation
from tcmnoma.encoder import random_frame, transmit_frame
from tcmnoma.errors import InvalidDimensions
from tcmnoma.partition import build_partition_tree, mssd_sq


def test_gray_ring_adjacent_labels_differ_in_one_bit():
    pts = gray_psk_points(3)
    assert pts.shape == (8,)
    assert np.allclose(np.abs(pts), 1.0)
    order = np.argsort(np.mod(np.angle(pts), 2 * np.pi))
    for a, b in zip(order, np.roll(order, -1)):
        assert bin(int(a) ^ int(b)).count("1") == 1


def test_psk_roundtrip_and_scaling():
    rng = np.random.default_rng(11)
    bits = rng.integers(0, 2, size=300)
    sym = psk_map(bits, 3)
    assert sym.shape == (100,)
    assert np.array_equal(psk_detect(sym, np.ones(100), 3), bits)

    h = 0.4 * np.exp(1j * rng.uniform(0, 2 * np.pi, size=100))
    noisy = h * sym + 0.01 * (rng.normal(size=100) + 1j * rng.normal(size=100))
    assert np.array_equal(psk_detect(noisy, h, 3), bits)


def test_psk_map_rejects_ragged_stream():
    with pytest.raises(InvalidDimensions):
        psk_map(np.zeros(7, dtype=np.int64), 3)


def test_conventional_split_doubles_min_distance():
    base = cross_constellation(128)
    sset = SignalSet.from_positions(base.points)
    tree = build_partition_tree(sset, 7, splitter=make_conventional_splitter(128))
    chain = []
    for level in range(6):
        nodes = [tree.node(level, i) for i in range(1 << level)]
        assert {len(n.sset) for n in nodes} == {128 >> level}
        chain.append(min(mssd_sq(n.sset.positions) for n in nodes))
    assert chain == [4, 8, 16, 32, 64, 128]


def test_balanced_fallback_on_non_lattice_subset():
    # collinear odd-spacing points defeat the coset construction
    sset = SignalSet.from_positions(np.array([0 + 0j, 1 + 0j, 2 + 0j, 3 + 0j]))
    halves = [
        sorted(int(z.real) for z in sub.positions) for sub in make_conventional_splitter(4)(sset)
    ]
    assert sorted(halves) == [[0, 2], [1, 3]]


def test_fallback_refuses_large_subsets():
    pts = np.arange(16, dtype=np.float64) + 0j
    with pytest.raises(InvalidDimensions):
        make_conventional_splitter(16)(SignalSet.from_positions(pts))


def test_lattice_bundle_values(lattice_design):
    d = lattice_design
    assert len(d.signal_set) == 128
    assert d.bits_per_label == 7
    assert d.q == 2
    assert d.mean_energy == pytest.approx(82.0)
    assert d.parity_octal == ("4", "16", "0", "23")
    assert d.searched
    assert d.flush_units == 2
    prof = d.profile
    assert prof.delta_min_sq == 64
    assert prof.delta_free_sq == 24
    assert prof.d_free_sq == min(prof.delta_min_sq, prof.delta_free_sq)
    assert prof.certified


def test_lattice_labeling_repeats_one_tree(lattice_design):
    tab = lattice_design.labeling
    for k in range(1, tab.point_by_bits.shape[0]):
        assert np.array_equal(tab.point_by_bits[0], tab.point_by_bits[k])
        assert np.array_equal(tab.pos_by_bits[0], tab.pos_by_bits[k])


def test_lattice_transmit_uses_cross_points(lattice_design):
    d = lattice_design
    frame = random_frame(d.mapping.J, 5, d.q, np.random.default_rng(3))
    tx = transmit_frame(frame, d.mapping, d.diagram, d.labeling)
    cross = set(np.round(cross_constellation(128).points, 9).tolist())
    for z in np.round(tx.positions.reshape(-1), 9):
        assert complex(z) in cross
