"""Bipartite set partitioning, partition trees, labelings, distance profiles.

The bipartition routine follows a two-phase scheme: a greedy seeding pass
over the sorted pair list, then farthest-point swap sweeps until a full
sweep makes no change.  All distance comparisons run on exact integer
squared distances whenever the positions are Gaussian integers (shaped
sets always are); nearest-neighbor values obtained through an index are
recovered to exact integers by rounding the squared result, which is
lossless for squared distances below 2^50.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .constellation import SignalSet
from .errors import (
    DepthExceeded,
    IncompleteTree,
    InvalidDimensions,
    OddSize,
    SetTooSmall,
    SizeNotPowerOfTwo,
    TcmNomaError,
)
from .neighbors import make_index


class Unbounded:
    """Distance value larger than every number; compares only to itself."""

    __slots__ = ()

    def __gt__(self, other):
        return not isinstance(other, Unbounded)

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return isinstance(other, Unbounded)

    def __eq__(self, other):
        return isinstance(other, Unbounded)

    def __hash__(self):
        return hash("unbounded-distance")

    def __repr__(self):
        return "UNBOUNDED"


UNBOUNDED = Unbounded()


def _coerce_set(s) -> SignalSet:
    if isinstance(s, SignalSet):
        return s
    return SignalSet.from_positions(s)


def _int_arrays(positions):
    """(xs, ys) as int64 when all positions are Gaussian integers, else None."""
    re = np.real(positions)
    im = np.imag(positions)
    xs = np.rint(re)
    ys = np.rint(im)
    if np.array_equal(xs, re) and np.array_equal(ys, im) and np.abs(positions).max(initial=0.0) < (1 << 20):
        return xs.astype(np.int64), ys.astype(np.int64)
    return None


def _pair_sq(positions, exact):
    """Full squared-distance matrix; int64 in exact mode, float64 otherwise."""
    if exact is not None:
        xs, ys = exact
        dx = xs[:, None] - xs[None, :]
        dy = ys[:, None] - ys[None, :]
        return dx * dx + dy * dy
    d = positions[:, None] - positions[None, :]
    return d.real * d.real + d.imag * d.imag


def mssd_sq(positions):
    """Minimum squared pairwise distance; UNBOUNDED for sets smaller than 2."""
    positions = np.asarray(positions, dtype=np.complex128)
    n = positions.size
    if n < 2:
        return UNBOUNDED
    exact = _int_arrays(positions)
    m = _pair_sq(positions, exact)
    np.fill_diagonal(m, np.iinfo(np.int64).max if exact is not None else np.inf)
    v = m.min()
    return int(v) if exact is not None else float(v)


def _nn_sq_rows(positions):
    """Per-member squared distance to its nearest other member."""
    positions = np.asarray(positions, dtype=np.complex128)
    exact = _int_arrays(positions)
    m = _pair_sq(positions, exact)
    np.fill_diagonal(m, np.iinfo(np.int64).max if exact is not None else np.inf)
    return m.min(axis=1)


def _avg_min(positions) -> float:
    return float(np.sqrt(_nn_sq_rows(positions).astype(np.float64)).mean())


def set_metrics(sset, probe=None):
    """Nearest-neighbor statistics of a point set.

    Returns a dict with ``MSSD`` (squared), ``avg_min`` (plain distance),
    and ``d_l`` when a probe is given.  The probe is excluded from its own
    neighbor search by position, whether or not it is a member.
    """
    sset = _coerce_set(sset)
    if len(sset) < 2:
        raise SetTooSmall(f"need at least 2 points, got {len(sset)}")
    out = {
        "MSSD": mssd_sq(sset.positions),
        "avg_min": _avg_min(sset.positions),
    }
    if probe is not None:
        z = complex(getattr(probe, "position", probe))
        others = sset.positions[sset.positions != z]
        if others.size == 0:
            raise SetTooSmall("probe has no differing member to compare against")
        d = others - z
        out["d_l"] = float(np.sqrt((d.real * d.real + d.imag * d.imag).min()))
    return out


@dataclass(frozen=True)
class Bipartition:
    first: SignalSet
    second: SignalSet
    sweeps: int = 0
    phase1_rows: tuple = ()  # row-index halves going into the sweep phase


class _Subset:
    """One side of the bipartition: member ids, a live index, a running MSSD."""

    def __init__(self, kind):
        self.ids = set()
        self.index = make_index(kind)
        self.mssd = UNBOUNDED

    def nn_sq(self, z, exact):
        d = self.index.search(z)
        v = d * d
        return int(round(v)) if exact else v

    def nn_sq_many(self, zs, exact):
        d = self.index.search_many(zs)
        v = d * d
        if exact:
            return np.rint(v).astype(np.int64)
        return v

    def add(self, i, z, exact):
        if self.ids:
            self.mssd = min(self.mssd, self.nn_sq(z, exact))
        self.ids.add(i)
        self.index.insert(z)

    def drop(self, i, z):
        # running MSSD becomes stale on removal; callers recompute when needed
        self.ids.discard(i)
        self.index.remove(z)


def fpo_bsp(sset, index_kind: str = "exhaustive", max_sweeps: int = 100, trace=None) -> Bipartition:
    """Split a set into two equal halves with large within-half spacing.

    Phase 1 seeds the halves with the closest pair and greedily places the
    remaining points while walking the distance-sorted pair list.  Phase 2
    repeatedly offers each member of the lower-spacing half a replacement
    from the other half, accepting a swap only when it strictly raises the
    replaced point's neighbor distance, keeps the second half's minimum
    spacing, and strictly raises the first half's mean neighbor distance.

    trace, when a list, receives one (first_before, second_before,
    first_after, second_after) row-id tuple per accepted swap, so the
    acceptance conditions can be re-derived externally.
    """
    sset = _coerce_set(sset)
    n = len(sset)
    if n < 4:
        raise SetTooSmall(f"need at least 4 points, got {n}")
    if n % 2:
        raise OddSize(f"cannot halve {n} points")
    z = sset.positions
    exact_arrays = _int_arrays(z)
    exact = exact_arrays is not None
    half = n // 2

    pair_m = _pair_sq(z, exact_arrays)
    iu, ju = np.triu_indices(n, k=1)
    order = np.lexsort((ju, iu, pair_m[iu, ju]))
    pairs_i = iu[order]
    pairs_j = ju[order]

    def pair_d(a, b):
        v = pair_m[a, b]
        return int(v) if exact else float(v)

    s1 = _Subset(index_kind)
    s2 = _Subset(index_kind)
    placed = set()

    def place(i, sub):
        # cap at half so a greedy branch cannot overfill a side
        if len(sub.ids) >= half:
            sub = s2 if sub is s1 else s1
        sub.add(int(i), complex(z[i]), exact)
        placed.add(int(i))

    place(pairs_i[0], s1)
    place(pairs_j[0], s2)

    for t in range(1, pairs_i.size):
        if len(s1.ids) == half or len(s2.ids) == half:
            break
        u, v = int(pairs_i[t]), int(pairs_j[t])
        u_in, v_in = u in placed, v in placed
        if u_in and v_in:
            continue
        if pair_d(u, v) > max(s1.mssd, s2.mssd):
            for w in (u, v):
                if w in placed:
                    continue
                dw1 = s1.nn_sq(complex(z[w]), exact)
                dw2 = s2.nn_sq(complex(z[w]), exact)
                place(w, s1 if dw1 >= dw2 else s2)
        elif not u_in and not v_in:
            a1 = s1.nn_sq(complex(z[u]), exact)
            a2 = s2.nn_sq(complex(z[u]), exact)
            b1 = s1.nn_sq(complex(z[v]), exact)
            b2 = s2.nn_sq(complex(z[v]), exact)
            if min(a1, b2) >= min(a2, b1):
                place(u, s1)
                place(v, s2)
            else:
                place(u, s2)
                place(v, s1)
        else:
            w = v if u_in else u
            place(w, s2 if (u if u_in else v) in s1.ids else s1)

    leftovers = [i for i in range(n) if i not in placed]
    for i in leftovers:
        place(i, s1 if len(s1.ids) < half else s2)

    # the lower-MSSD half sweeps first so spacing evens out
    if mssd_from_ids(z, s2.ids) < mssd_from_ids(z, s1.ids):
        s1, s2 = s2, s1
    phase1_rows = (tuple(sorted(s1.ids)), tuple(sorted(s2.ids)))

    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        changed = False
        for l in sorted(s1.ids):
            zl = complex(z[l])
            d_max = s1.nn_sq(zl, exact)
            delta_min = mssd_from_ids(z, s2.ids)
            d_l_to_s2 = s2.nn_sq(zl, exact)
            cands = sorted(s2.ids)
            s1.drop(l, zl)
            s2.add(l, zl, exact)
            best = l
            if d_l_to_s2 >= delta_min and cands:
                cz = z[np.array(cands, dtype=np.int64)]
                d_cand = s1.nn_sq_many(cz, exact)
                top = d_cand.max()
                if top > d_max:
                    pick = cands[int(np.argmax(d_cand))]
                    old_ids = sorted(s1.ids | {l})
                    new_ids = sorted(s1.ids | {pick})
                    if _avg_min(z[np.array(new_ids)]) > _avg_min(z[np.array(old_ids)]):
                        best = pick
            bz = complex(z[best])
            s2.drop(best, bz)
            s1.add(best, bz, exact)
            if best != l:
                changed = True
                new1 = mssd_from_ids(z, s1.ids)
                old1 = mssd_from_ids(z, (s1.ids - {best}) | {l})
                new2 = mssd_from_ids(z, s2.ids)
                assert new1 >= old1, "first-half MSSD regressed on swap"
                assert new2 >= delta_min, "second-half MSSD regressed on swap"
                if trace is not None:
                    trace.append(
                        (
                            tuple(sorted((s1.ids - {best}) | {l})),
                            tuple(sorted((s2.ids - {l}) | {best})),
                            tuple(sorted(s1.ids)),
                            tuple(sorted(s2.ids)),
                        )
                    )
        if not changed:
            break
    else:
        raise TcmNomaError(f"no convergence within {max_sweeps} sweeps")

    return Bipartition(
        first=sset.take(sorted(s1.ids)),
        second=sset.take(sorted(s2.ids)),
        sweeps=sweeps,
        phase1_rows=phase1_rows,
    )


def mssd_from_ids(z, ids):
    return mssd_sq(z[np.array(sorted(ids), dtype=np.int64)])


# -- partition tree ---------------------------------------------------------


class PartitionNode:
    __slots__ = ("sset", "level", "offset", "left", "right")

    def __init__(self, sset, level, offset):
        self.sset = sset
        self.level = level
        self.offset = offset
        self.left = None
        self.right = None

    def is_leaf(self):
        return self.left is None and self.right is None


class PartitionTree:
    """Complete binary tree of nested equal-size subsets."""

    def __init__(self, root: PartitionNode, depth: int):
        self.root = root
        self.depth = depth
        self.levels = [[root]]
        frontier = [root]
        while frontier:
            nxt = []
            for node in frontier:
                for child in (node.left, node.right):
                    if child is not None:
                        nxt.append(child)
            if nxt:
                self.levels.append(nxt)
            frontier = nxt

    def node(self, level: int, i: int) -> PartitionNode:
        return self.levels[level][i]

    def subcarrier_nodes(self, n_subcarriers: int):
        p = n_subcarriers.bit_length() - 1
        if 1 << p != n_subcarriers or p >= len(self.levels):
            raise IncompleteTree(f"no level with {n_subcarriers} nodes")
        return self.levels[p]


def _default_splitter(index_kind):
    def split(sset):
        bp = fpo_bsp(sset, index_kind=index_kind)
        return bp.first, bp.second

    return split


def build_partition_tree(a0, depth: int, splitter=None, index_kind: str = "exhaustive") -> PartitionTree:
    """Recursively halve a 2^depth-point set down to singleton leaves.

    The splitter maps a SignalSet to two halves; the child holding the
    lowest original point id always becomes the left child.
    """
    a0 = _coerce_set(a0)
    if len(a0) != 1 << depth:
        raise SizeNotPowerOfTwo(f"|set| = {len(a0)} != 2^{depth}")
    if splitter is None:
        splitter = _default_splitter(index_kind)

    root = PartitionNode(a0, 0, 0)
    frontier = [root]
    for level in range(1, depth + 1):
        nxt = []
        for node in frontier:
            sset = node.sset
            if len(sset) == 2:
                first, second = sset.take([0]), sset.take([1])
            else:
                first, second = splitter(sset)
            if min(second.ids) < min(first.ids):
                first, second = second, first
            node.left = PartitionNode(first, level, 2 * node.offset)
            node.right = PartitionNode(second, level, 2 * node.offset + 1)
            nxt.extend((node.left, node.right))
        frontier = nxt
    return PartitionTree(root, depth)


# -- labeling ---------------------------------------------------------------


@dataclass(frozen=True)
class LabelingTable:
    n_subcarriers: int
    bits_per_label: int
    point_by_bits: np.ndarray  # (K, 2^bits) point ids
    pos_by_bits: np.ndarray  # (K, 2^bits) positions
    bits_by_point: tuple  # per subcarrier: id -> bits


def build_labeling(tree: PartitionTree, n_subcarriers: int) -> LabelingTable:
    """Per-subcarrier bijection between bit labels and leaf points.

    Label bits descend the subcarrier's subtree most-significant first,
    0 to the left child; the all-zero label lands on the leftmost leaf.
    """
    if len(tree.levels) != tree.depth + 1:
        raise IncompleteTree("tree not complete to its declared depth")
    for leaf in tree.levels[-1]:
        if len(leaf.sset) != 1:
            raise IncompleteTree("leaves are not singletons")
    subnodes = tree.subcarrier_nodes(n_subcarriers)
    p = n_subcarriers.bit_length() - 1
    bits = tree.depth - p
    width = 1 << bits

    point_by_bits = np.empty((n_subcarriers, width), dtype=np.int64)
    pos_by_bits = np.empty((n_subcarriers, width), dtype=np.complex128)
    bits_by_point = []
    for k, node in enumerate(subnodes):
        leaves = []

        def collect(nd):
            if nd.is_leaf():
                leaves.append(nd)
                return
            collect(nd.left)
            collect(nd.right)

        collect(node)
        if len(leaves) != width:
            raise IncompleteTree(f"subcarrier {k} has {len(leaves)} leaves, want {width}")
        inv = {}
        for b, leaf in enumerate(leaves):
            pid = int(leaf.sset.ids[0])
            point_by_bits[k, b] = pid
            pos_by_bits[k, b] = leaf.sset.positions[0]
            inv[pid] = b
        bits_by_point.append(inv)
    return LabelingTable(n_subcarriers, bits, point_by_bits, pos_by_bits, tuple(bits_by_point))


# -- distance profile -------------------------------------------------------


@dataclass(frozen=True)
class DistanceProfile:
    delta_min_sq: object  # number or UNBOUNDED
    delta_free_sq: object
    d_free_sq: object
    certified: bool


def _group_min_sq(pos_groups):
    """Min squared distance between every pair of position groups.

    pos_groups: (G, M) complex.  Returns (G, G) with zero diagonal.
    """
    flat = pos_groups.reshape(-1)
    d = flat[:, None] - flat[None, :]
    d2 = d.real * d.real + d.imag * d.imag
    g, m = pos_groups.shape
    blocks = d2.reshape(g, m, g, m)
    return blocks.min(axis=(1, 3))


def min_subset_mssd(labeling: LabelingTable, r: int):
    """Min MSSD over the coded-prefix subsets, over subcarriers."""
    bits = labeling.bits_per_label
    if not 1 <= r + 1 <= bits:
        raise InvalidDimensions(f"r={r} incompatible with {bits}-bit labels")
    uncoded = bits - (r + 1)
    if uncoded == 0:
        return UNBOUNDED
    best = UNBOUNDED
    groups = labeling.pos_by_bits.reshape(labeling.n_subcarriers, 1 << (r + 1), 1 << uncoded)
    for k in range(labeling.n_subcarriers):
        for gi in range(groups.shape[1]):
            best = min(best, mssd_sq(groups[k, gi]))
    return best


def branch_distance_tables(labeling: LabelingTable, r: int) -> np.ndarray:
    """Per-subcarrier matrices of min squared distance between coded-prefix subsets."""
    bits = labeling.bits_per_label
    uncoded = bits - (r + 1)
    groups = labeling.pos_by_bits.reshape(labeling.n_subcarriers, 1 << (r + 1), 1 << uncoded)
    return np.stack([_group_min_sq(groups[k]) for k in range(labeling.n_subcarriers)])


def distance_profile(tree: PartitionTree, r: int, diagram, labeling: LabelingTable, depth: int | None = None) -> DistanceProfile:
    """Distance figures of the combined labeling and trellis code.

    delta_min_sq covers parallel transitions (uncoded bits), delta_free_sq
    the shortest trellis error events, d_free_sq their minimum.  A depth
    warning is issued when the bounded event search cannot certify the
    free term.
    """
    from .trellis import free_distance

    delta_min = min_subset_mssd(labeling, r)
    tables = branch_distance_tables(labeling, r)
    if depth is None:
        depth = 3 * diagram.code.registers
    free = UNBOUNDED
    certified = True
    for k in range(labeling.n_subcarriers):
        val, cert = free_distance(diagram, tables[k], depth)
        certified = certified and cert
        if val is not None:
            free = min(free, val)
    if not certified:
        warnings.warn(DepthExceeded(f"free-distance search not certified at depth {depth}"))
    return DistanceProfile(
        delta_min_sq=delta_min,
        delta_free_sq=free,
        d_free_sq=min(delta_min, free),
        certified=certified,
    )


# -- plain-text exports -----------------------------------------------------


def render_tree_listing(tree: PartitionTree) -> str:
    lines = []
    for level, nodes in enumerate(tree.levels):
        for i, node in enumerate(nodes):
            ids = " ".join(str(int(x)) for x in node.sset.ids)
            lines.append(f"level {level} node {i}: {ids}")
    return "\n".join(lines) + "\n"


def render_labeling_table(labeling: LabelingTable) -> str:
    lines = []
    for k in range(labeling.n_subcarriers):
        for b in range(labeling.point_by_bits.shape[1]):
            bstr = format(b, f"0{labeling.bits_per_label}b")
            lines.append(f"subcarrier {k + 1} {bstr} -> {int(labeling.point_by_bits[k, b])}")
    return "\n".join(lines) + "\n"
