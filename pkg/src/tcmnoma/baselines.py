"""Comparison schemes: orthogonal Gray-mapped PSK tones and the lattice-set
variant of the joint TCM pipeline.

The orthogonal baseline gives every tone to a single user at the matched
bits-per-tone rate with minimum-distance detection.  The lattice variant
keeps the whole transmit and detection chain but replaces each subcarrier's
designed signal set with a standard 2D cross constellation of size
2^(q*d_f+1), partitioned by the conventional alternating-coset rule.
"""

import itertools

import numpy as np

from .constellation import SignalSet, cross_constellation, mean_position_energy
from .design import DesignArtifact
from .encoder import flush_plan
from .errors import InvalidDimensions
from .mapping import build_mapping
from .partition import (
    LabelingTable,
    build_labeling,
    build_partition_tree,
    branch_distance_tables,
    distance_profile,
    mssd_sq,
)
from .trellis import build_code, search_polynomials

__all__ = [
    "gray_psk_points",
    "psk_map",
    "psk_detect",
    "make_conventional_splitter",
    "build_lattice_design",
]


# -- orthogonal Gray PSK tones ----------------------------------------------


def gray_psk_points(bits_per_tone: int = 3) -> np.ndarray:
    """Unit-circle points indexed by label; adjacent points differ in one bit."""
    m = 1 << bits_per_tone
    gray = np.arange(m) ^ (np.arange(m) >> 1)
    pts = np.empty(m, dtype=np.complex128)
    angles = np.exp(2j * np.pi * np.arange(m) / m)
    pts[gray] = angles
    return pts


def psk_map(bits, bits_per_tone: int = 3) -> np.ndarray:
    """Pack a 0/1 stream (length divisible by bits_per_tone) into symbols."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size % bits_per_tone:
        raise InvalidDimensions(f"{bits.size} bits do not fill {bits_per_tone}-bit tones")
    words = bits.reshape(-1, bits_per_tone)
    labels = np.zeros(words.shape[0], dtype=np.int64)
    for i in range(bits_per_tone):
        labels = (labels << 1) | words[:, i]
    return gray_psk_points(bits_per_tone)[labels]


def psk_detect(y, h, bits_per_tone: int = 3) -> np.ndarray:
    """Per-symbol minimum-distance labels, unpacked to a bit stream."""
    y = np.asarray(y, dtype=np.complex128)
    h = np.asarray(h, dtype=np.complex128)
    pts = gray_psk_points(bits_per_tone)
    d = y[:, None] - h[:, None] * pts[None, :]
    labels = np.argmin(d.real**2 + d.imag**2, axis=1)
    out = np.empty((labels.size, bits_per_tone), dtype=np.int64)
    for i in range(bits_per_tone):
        out[:, i] = (labels >> (bits_per_tone - 1 - i)) & 1
    return out.reshape(-1)


# -- conventional set partitioning over a 2D lattice ------------------------


def _coset_halves(sset: SignalSet, level: int):
    z = sset.positions
    x = np.round(z.real - z.real[0]).astype(np.int64)
    y = np.round(z.imag - z.imag[0]).astype(np.int64)
    if ((x | y) & 1).any():
        raise InvalidDimensions("offsets are not on the even sub-lattice")
    x >>= 1
    y >>= 1
    for _ in range(level):
        if ((x + y) & 1).any():
            raise InvalidDimensions("offsets are not on the rotated sub-lattice")
        x, y = (x + y) >> 1, (y - x) >> 1
    cls = (x + y) & 1
    first = np.flatnonzero(cls == 0)
    second = np.flatnonzero(cls == 1)
    if first.size != second.size:
        raise InvalidDimensions("coset split is uneven on this subset")
    return sset.take(first), sset.take(second)


def _best_balanced_split(sset: SignalSet):
    """Exhaustive equal-size bipartition maximizing the worse subset MSSD."""
    n = len(sset)
    best = None
    best_key = None
    for rest in itertools.combinations(range(1, n), n // 2 - 1):
        rows = (0,) + rest
        other = tuple(i for i in range(n) if i not in rows)
        a, b = sset.take(list(rows)), sset.take(list(other))
        key = min(mssd_sq(a.positions), mssd_sq(b.positions))
        if best_key is None or key > best_key:
            best_key = key
            best = (a, b)
    return best


def make_conventional_splitter(root_size: int):
    """Alternating-coset splitter for sets living on odd integer coordinates.

    Tree depth comes from the subset size relative to the root, so the rule
    works on boundary-clipped shapes (cross constellations) where the
    subset's own minimum distance no longer indicates the level.  Deep in the
    tree, clipped shapes stop being unions of the finer cosets; small subsets
    then fall back to the exhaustive max-min-distance balanced split.
    """

    def split(sset: SignalSet):
        level = (root_size // len(sset)).bit_length() - 1
        try:
            return _coset_halves(sset, level)
        except InvalidDimensions:
            if len(sset) > 8:
                raise
            return _best_balanced_split(sset)

    return split


def build_lattice_design(
    K: int = 4,
    N: int = 2,
    J: int = 6,
    preset="paper-fig1",
    q: int = 2,
    r: int = 3,
    registers: int = 4,
    parity_octal=None,
    depth: int | None = None,
) -> DesignArtifact:
    """Design bundle with every subcarrier carrying the same cross lattice."""
    mapping = build_mapping(K, N, J, preset=preset)
    bits = q * mapping.d_f + 1
    if not 1 <= r + 1 <= bits:
        raise InvalidDimensions(f"r={r} incompatible with {bits}-bit labels")

    base = cross_constellation(1 << bits)
    sset = SignalSet.from_positions(base.points)
    tree = build_partition_tree(sset, bits, splitter=make_conventional_splitter(len(sset)))
    one = build_labeling(tree, 1)
    labeling = LabelingTable(
        n_subcarriers=K,
        bits_per_label=one.bits_per_label,
        point_by_bits=np.repeat(one.point_by_bits, K, axis=0),
        pos_by_bits=np.repeat(one.pos_by_bits, K, axis=0),
        bits_by_point=one.bits_by_point * K,
    )

    searched = parity_octal is None
    if searched:
        result = search_polynomials(r, registers, branch_distance_tables(labeling, r), depth=depth)
        parity_octal = result.parity_octal
    parity_octal = tuple(str(p) for p in parity_octal)
    diagram = build_code(r, registers, parity_octal)

    profile = distance_profile(tree, r, diagram, labeling, depth=depth)
    return DesignArtifact(
        mapping=mapping,
        signal_set=sset,
        tree=tree,
        labeling=labeling,
        diagram=diagram,
        profile=profile,
        parity_octal=parity_octal,
        searched=searched,
        mean_energy=mean_position_energy(sset),
        flush_units=flush_plan(diagram).m,
    )
