from itertools import combinations

import numpy as np
import pytest

from tcmnoma.constellation import SignalSet
from tcmnoma.errors import (
    DepthExceeded,
    IncompleteTree,
    OddSize,
    SetTooSmall,
    SizeNotPowerOfTwo,
)
from tcmnoma.partition import (
    UNBOUNDED,
    Bipartition,
    PartitionNode,
    PartitionTree,
    build_labeling,
    build_partition_tree,
    distance_profile,
    fpo_bsp,
    min_subset_mssd,
    mssd_sq,
    render_labeling_table,
    render_tree_listing,
    set_metrics,
)
from tcmnoma.trellis import build_code


def brute_best_objective(positions):
    """Max over balanced bipartitions of min per-half MSSD."""
    n = len(positions)
    best = None
    for left in combinations(range(n), n // 2):
        if 0 not in left:
            continue
        right = [i for i in range(n) if i not in left]
        obj = min(mssd_sq(positions[list(left)]), mssd_sq(positions[right]))
        if best is None or obj > best:
            best = obj
    return best


def objective(positions, rows_a, rows_b):
    return min(mssd_sq(positions[list(rows_a)]), mssd_sq(positions[list(rows_b)]))


def test_unbounded_sentinel_ordering():
    assert UNBOUNDED > 10**12
    assert not (10**12 > UNBOUNDED)
    assert UNBOUNDED >= UNBOUNDED
    assert UNBOUNDED == UNBOUNDED
    assert min(7, UNBOUNDED) == 7
    assert max(7, UNBOUNDED) is UNBOUNDED
    assert mssd_sq([1 + 1j]) is UNBOUNDED


def test_set_metrics_values():
    m = set_metrics(SignalSet.from_positions([0, 1, 3]))
    assert m["MSSD"] == 1
    assert m["avg_min"] == pytest.approx(4 / 3)
    m = set_metrics(SignalSet.from_positions([0, 1, 3]), probe=5)
    assert m["d_l"] == 2.0


def test_set_metrics_member_probe_excluded():
    m = set_metrics(SignalSet.from_positions([0, 1, 3]), probe=3)
    assert m["d_l"] == 2.0


def test_set_metrics_too_small():
    with pytest.raises(SetTooSmall):
        set_metrics(SignalSet.from_positions([5]))


def test_fpo_collinear_four():
    bp = fpo_bsp([0, 1, 2, 3])
    halves = {frozenset(bp.first.positions.tolist()), frozenset(bp.second.positions.tolist())}
    assert halves == {frozenset({0, 2}), frozenset({1, 3})}
    assert mssd_sq(bp.first.positions) == 4
    assert mssd_sq(bp.second.positions) == 4


def test_fpo_square_corners():
    bp = fpo_bsp([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j])
    assert mssd_sq(bp.first.positions) == 8
    assert mssd_sq(bp.second.positions) == 8


def test_fpo_size_errors():
    with pytest.raises(OddSize):
        fpo_bsp([0, 1, 2, 3, 7])
    with pytest.raises(SetTooSmall):
        fpo_bsp([0, 1])


def test_fpo_partition_invariants_and_monotone_objective():
    rng = np.random.default_rng(17)
    for _ in range(20):
        pts = rng.integers(-25, 26, size=(30, 2))
        pos = np.unique(pts[:, 0] + 1j * pts[:, 1])[:8]
        if len(pos) < 8:
            continue
        bp = fpo_bsp(pos)
        a = set(bp.first.ids.tolist())
        b = set(bp.second.ids.tolist())
        assert len(a) == len(b) == 4
        assert not (a & b)
        assert a | b == set(range(8))
        after = objective(pos, sorted(a), sorted(b))
        before = objective(pos, *bp.phase1_rows)
        assert after >= before
        assert after <= brute_best_objective(pos)


def test_fpo_index_kinds_agree():
    rng = np.random.default_rng(29)
    for _ in range(6):
        pts = rng.integers(-30, 31, size=(40, 2))
        pos = np.unique(pts[:, 0] + 1j * pts[:, 1])[:12]
        if len(pos) < 12:
            continue
        a = fpo_bsp(pos, index_kind="exhaustive")
        b = fpo_bsp(pos, index_kind="delaunay")
        assert np.array_equal(a.first.positions, b.first.positions)
        assert np.array_equal(a.second.positions, b.second.positions)


def test_tree_structure():
    tree = build_partition_tree(list(range(8)), 3)
    assert [len(level) for level in tree.levels] == [1, 2, 4, 8]
    assert sum(len(level) for level in tree.levels) == 15
    for level in tree.levels:
        for node in level:
            if node.left is not None:
                ids = set(node.sset.ids.tolist())
                li = set(node.left.sset.ids.tolist())
                ri = set(node.right.sset.ids.tolist())
                assert li | ri == ids and not (li & ri)
                assert len(li) == len(ri)
                assert min(li) == min(ids)  # left child carries the lowest id
    for leaf in tree.levels[-1]:
        assert len(leaf.sset) == 1


def test_tree_size_error():
    with pytest.raises(SizeNotPowerOfTwo):
        build_partition_tree(list(range(6)), 3)


def test_subcarrier_level_sizes():
    tree = build_partition_tree(list(range(16)), 4)
    nodes = tree.subcarrier_nodes(4)
    assert len(nodes) == 4
    assert all(len(n.sset) == 4 for n in nodes)


def test_labeling_bijection_and_descent():
    rng = np.random.default_rng(3)
    pts = rng.integers(-40, 41, size=(30, 2))
    pos = np.unique(pts[:, 0] + 1j * pts[:, 1])[:8]
    tree = build_partition_tree(pos, 3)
    lab = build_labeling(tree, 2)
    assert lab.bits_per_label == 2
    for k, node in enumerate(tree.subcarrier_nodes(2)):
        assert sorted(lab.point_by_bits[k].tolist()) == sorted(node.sset.ids.tolist())
        # all-zero label walks left edges to the leftmost leaf
        leftmost = node
        while leftmost.left is not None:
            leftmost = leftmost.left
        assert lab.point_by_bits[k, 0] == leftmost.sset.ids[0]
        # labels differing in the last bit are sibling leaves
        parents = {frozenset(n.sset.ids.tolist()) for n in tree.levels[-2]}
        for pair in lab.point_by_bits[k].reshape(-1, 2):
            assert frozenset(pair.tolist()) in parents
        # inverse map consistency
        for b in range(4):
            assert lab.bits_by_point[k][int(lab.point_by_bits[k, b])] == b


def test_labeling_incomplete_tree():
    stub = PartitionNode(SignalSet.from_positions([0, 1, 2, 3]), 0, 0)
    with pytest.raises(IncompleteTree):
        build_labeling(PartitionTree(stub, 2), 2)
    tree = build_partition_tree(list(range(8)), 3)
    with pytest.raises(IncompleteTree):
        build_labeling(tree, 16)


def enumerate_error_events(diagram, table, max_len):
    """Brute-force event list [(length, accumulated sq distance)]."""
    events = []

    def extend(a, b, acc, depth):
        if depth > max_len:
            return
        for u1 in range(diagram.n_inputs):
            for u2 in range(diagram.n_inputs):
                c1 = int(diagram.coded[a, u1])
                c2 = int(diagram.coded[b, u2])
                na = int(diagram.next_state[a, u1])
                nb = int(diagram.next_state[b, u2])
                d = acc + float(table[c1, c2])
                if na == nb:
                    events.append((depth, d))
                else:
                    extend(na, nb, d, depth + 1)

    for s in range(diagram.n_states):
        for u1 in range(diagram.n_inputs):
            for u2 in range(diagram.n_inputs):
                if u1 == u2:
                    continue
                c1 = int(diagram.coded[s, u1])
                c2 = int(diagram.coded[s, u2])
                na = int(diagram.next_state[s, u1])
                nb = int(diagram.next_state[s, u2])
                d = float(table[c1, c2])
                if na == nb:
                    events.append((1, d))
                else:
                    extend(na, nb, d, 2)
    return events


def test_distance_profile_toy_matches_enumeration():
    rng = np.random.default_rng(9)
    pts = rng.integers(-20, 21, size=(40, 2))
    pos = np.unique(pts[:, 0] + 1j * pts[:, 1])[:8]
    tree = build_partition_tree(pos, 3)
    lab = build_labeling(tree, 2)
    diagram = build_code(1, 1, ["1", "3"])
    prof = distance_profile(tree, 1, diagram, lab, depth=6)
    assert prof.delta_min_sq is UNBOUNDED  # one-bit labels leave no parallel branches
    assert prof.d_free_sq == prof.delta_free_sq

    from tcmnoma.partition import branch_distance_tables

    tables = branch_distance_tables(lab, 1)
    oracle = min(
        min(d for _, d in enumerate_error_events(diagram, t, 6)) for t in tables
    )
    assert prof.delta_free_sq == oracle


def test_distance_profile_with_uncoded_bits():
    rng = np.random.default_rng(31)
    pts = rng.integers(-30, 31, size=(60, 2))
    pos = np.unique(pts[:, 0] + 1j * pts[:, 1])[:16]
    tree = build_partition_tree(pos, 4)
    lab = build_labeling(tree, 2)
    diagram = build_code(1, 1, ["1", "3"])
    prof = distance_profile(tree, 1, diagram, lab, depth=6)
    assert prof.delta_min_sq is not UNBOUNDED
    assert prof.d_free_sq == min(prof.delta_min_sq, prof.delta_free_sq)
    assert prof.delta_min_sq == min_subset_mssd(lab, 1)
    # independent oracle: labels sharing a coded prefix sit in blocks of two
    pb = lab.pos_by_bits
    oracle = min(
        abs(pb[k, 2 * i] - pb[k, 2 * i + 1]) ** 2
        for k in range(pb.shape[0])
        for i in range(pb.shape[1] // 2)
    )
    assert prof.delta_min_sq == pytest.approx(oracle)


def test_distance_profile_depth_warning():
    pos = np.array([0, 1, 2, 3, 5, 8, 9, 12], dtype=np.complex128)
    tree = build_partition_tree(pos, 3)
    lab = build_labeling(tree, 2)
    diagram = build_code(1, 1, ["1", "3"])
    with pytest.warns(DepthExceeded):
        prof = distance_profile(tree, 1, diagram, lab, depth=1)
    assert not prof.certified


def test_renders_smoke():
    tree = build_partition_tree(list(range(4)), 2)
    lab = build_labeling(tree, 2)
    listing = render_tree_listing(tree)
    assert "level 0 node 0:" in listing
    table = render_labeling_table(lab)
    assert "subcarrier 1 0 ->" in table
