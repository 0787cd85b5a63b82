import numpy as np
import pytest

from tcmnoma.encoder import (
    Frame,
    assemble_sequence,
    bit_errors,
    flush_plan,
    random_frame,
    tcm_encode_unit,
    transmit_frame,
)
from tcmnoma.errors import IndexOutOfRange, InvalidDimensions


def test_assemble_worked_example(full_design):
    words = np.array([[0b01], [0b10], [0b11], [0b00], [0b01], [0b11]])
    frame = Frame(2, words)
    m = full_design.mapping
    # ascending-user concatenation per tone, first user most significant
    assert assemble_sequence(m, frame, 1, 0) == 0b011011
    assert assemble_sequence(m, frame, 2, 0) == 0b010001
    assert assemble_sequence(m, frame, 3, 0) == 0b101100
    assert assemble_sequence(m, frame, 4, 0) == 0b110111


def test_assemble_toy(toy_design):
    frame = Frame(1, np.array([[0], [1]]))
    assert assemble_sequence(toy_design.mapping, frame, 1, 0) == 0b01
    assert assemble_sequence(toy_design.mapping, frame, 2, 0) == 0b01


def test_assemble_unit_out_of_range(toy_design):
    frame = Frame(1, np.zeros((2, 3), dtype=np.int64))
    with pytest.raises(IndexOutOfRange):
        assemble_sequence(toy_design.mapping, frame, 1, 3)


def test_bit_errors():
    assert bit_errors(np.array([0b01, 0b10]), np.array([0b10, 0b10]), 2) == 2
    assert bit_errors(np.array([3, 1, 2]), np.array([3, 1, 2]), 2) == 0
    assert bit_errors(np.array([0b11]), np.array([0b00]), 2) == 2


def test_encode_unit_parity_prefix(full_design):
    # c carries the parity bit above the untouched input word
    d = full_design
    rng = np.random.default_rng(7)
    r = d.diagram.code.input_bits
    for _ in range(50):
        s = int(rng.integers(0, d.diagram.n_states))
        b = int(rng.integers(0, 1 << (d.bits_per_label - 1)))
        u = b >> (d.bits_per_label - 1 - r)
        _, c, _, _ = tcm_encode_unit(b, s, d.diagram, d.labeling, 1)
        y0 = int(d.diagram.coded[s, u]) >> r
        assert c == (y0 << (d.bits_per_label - 1)) | b


def test_uncoded_bits_leave_state_alone(full_design):
    d = full_design
    r = d.diagram.code.input_bits
    uncoded = d.bits_per_label - 1 - r
    rng = np.random.default_rng(3)
    for _ in range(30):
        s = int(rng.integers(0, d.diagram.n_states))
        top = int(rng.integers(0, 1 << r)) << uncoded
        ns = {
            tcm_encode_unit(top | low, s, d.diagram, d.labeling, 2)[0]
            for low in range(1 << uncoded)
        }
        assert len(ns) == 1


def test_all_zero_frame_hits_leftmost_leaves(full_design):
    d = full_design
    frame = Frame(2, np.zeros((6, 5), dtype=np.int64))
    tx = transmit_frame(frame, d.mapping, d.diagram, d.labeling)
    assert np.all(tx.labels == 0)
    assert np.all(tx.final_states == 0)
    for k in range(d.mapping.K):
        assert np.all(tx.point_ids[:, k] == d.labeling.point_by_bits[k, 0])
        assert np.all(tx.positions[:, k] == d.labeling.pos_by_bits[k, 0])


def test_transmit_shapes_and_flush(full_design):
    d = full_design
    rng = np.random.default_rng(11)
    frame = random_frame(6, 20, 2, rng)
    tx = transmit_frame(frame, d.mapping, d.diagram, d.labeling)
    assert tx.payload_units == 20
    assert tx.flush_units == d.flush_units
    assert tx.positions.shape == (20 + d.flush_units, 4)
    assert np.all(tx.final_states == 0)


def test_transmit_empty_payload_is_flush_only(full_design):
    d = full_design
    frame = Frame(2, np.zeros((6, 0), dtype=np.int64))
    tx = transmit_frame(frame, d.mapping, d.diagram, d.labeling)
    assert tx.payload_units == 0
    assert tx.positions.shape[0] == d.flush_units
    assert np.all(tx.labels == 0)
    assert np.all(tx.final_states == 0)


def test_transmit_components_sum_to_position(full_design):
    d = full_design
    rng = np.random.default_rng(5)
    frame = random_frame(6, 8, 2, rng)
    tx = transmit_frame(frame, d.mapping, d.diagram, d.labeling, signal_set=d.signal_set)
    assert tx.components.shape == (8 + d.flush_units, 4, 3)
    np.testing.assert_allclose(tx.components.sum(axis=2), tx.positions)
    for t in range(3):
        for k in range(4):
            pid = int(tx.point_ids[t, k])
            row = int(np.flatnonzero(d.signal_set.ids == pid)[0])
            np.testing.assert_array_equal(tx.components[t, k], d.signal_set.comps[row])


def test_transmit_energy_matches_design(full_design):
    d = full_design
    rng = np.random.default_rng(42)
    frame = random_frame(6, 2000, 2, rng)
    tx = transmit_frame(frame, d.mapping, d.diagram, d.labeling)
    pay = tx.positions[: tx.payload_units]
    measured = float(np.mean(pay.real**2 + pay.imag**2))
    assert measured == pytest.approx(d.mean_energy, rel=0.03)


def test_transmit_rejects_mismatched_labeling(full_design, toy_design):
    frame = Frame(2, np.zeros((6, 2), dtype=np.int64))
    with pytest.raises(InvalidDimensions):
        transmit_frame(frame, full_design.mapping, full_design.diagram, toy_design.labeling)


def test_transmit_deterministic(full_design):
    d = full_design
    frame = random_frame(6, 10, 2, np.random.default_rng(9))
    a = transmit_frame(frame, d.mapping, d.diagram, d.labeling)
    b = transmit_frame(frame, d.mapping, d.diagram, d.labeling)
    np.testing.assert_array_equal(a.positions, b.positions)
    np.testing.assert_array_equal(a.labels, b.labels)


def test_flush_plan_layers(full_design):
    plan = flush_plan(full_design.diagram)
    nxt = full_design.diagram.next_state
    assert int(nxt[0, 0]) == 0
    for s in range(full_design.diagram.n_states):
        seq = plan.sequence(s)
        assert len(seq) == plan.m
        cur = s
        for u in seq:
            cur = int(nxt[cur, u])
        assert cur == 0
        # one flush step lands on a state whose own schedule is the suffix
        if s != 0:
            s2 = int(nxt[s, plan.step[s]])
            assert plan.sequence(s2) == seq[1:] + (0,)
