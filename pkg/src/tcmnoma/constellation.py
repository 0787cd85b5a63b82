"""Multi-dimensional constellations on the integer lattice.

Base constellations use odd-integer coordinates (+-1, +-3, ...), so every
point position is a Gaussian integer and position equality is exact.  Energy
normalization happens only at the channel boundary.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

import numpy as np

from .errors import SetTooSmall, TargetTooLarge


@dataclass(frozen=True)
class BaseConstellation:
    """2D base constellation; points pairwise distinct, zero mean."""

    M: int
    points: np.ndarray

    def __post_init__(self):
        self.points.setflags(write=False)


@dataclass(frozen=True)
class MDPoint:
    """One multi-dimensional point: d_f 2D components plus their 2D sum."""

    index: int
    components: tuple[complex, ...]
    position: complex


def square_qam(M: int) -> BaseConstellation:
    """Square M-QAM on the odd-integer grid, ordered by (re, im) ascending."""
    side = isqrt(M)
    if side * side != M or side % 2:
        raise ValueError(f"M={M} is not an even-side square")
    axis = np.arange(-(side - 1), side, 2)
    re, im = np.meshgrid(axis, axis, indexing="ij")
    return BaseConstellation(M=M, points=(re + 1j * im).reshape(-1))


def cross_constellation(size: int) -> BaseConstellation:
    """2D lattice constellation of size 2^(2m+1) (cross shape; 4x2 for size 8)."""
    if size == 8:
        re, im = np.meshgrid(np.arange(-3, 4, 2), np.arange(-1, 2, 2), indexing="ij")
        return BaseConstellation(M=8, points=(re + 1j * im).reshape(-1))
    m = (size.bit_length() - 1) // 2
    if size != 1 << (2 * m + 1) or m < 2:
        raise ValueError(f"size {size} is not 2^(2m+1) with m >= 2 (or 8)")
    side = 3 << (m - 1)
    corner = 1 << (m - 2)
    axis = np.arange(-(side - 1), side, 2)
    re, im = np.meshgrid(axis, axis, indexing="ij")
    thr = side + 1 - 2 * corner
    keep = ~((np.abs(re) >= thr) & (np.abs(im) >= thr))
    return BaseConstellation(M=size, points=(re[keep] + 1j * im[keep]).reshape(-1))


def md_position(components) -> complex:
    """Position of an MD point: the 2D sum of its components."""
    return complex(sum(components))


class SignalSet:
    """A finite list of MD points with stable integer ids.

    Args:
        comps: (n, d_f) complex array, one row per point.
        ids: optional stable point ids; defaults to 0..n-1.  Subsets built
            during partitioning keep the parent ids.
    """

    def __init__(self, comps: np.ndarray, ids: np.ndarray | None = None):
        comps = np.asarray(comps, dtype=np.complex128)
        if comps.ndim != 2:
            raise ValueError("comps must be (n, d_f)")
        self.comps = comps
        self.d_f = comps.shape[1]
        if ids is None:
            ids = np.arange(comps.shape[0], dtype=np.int64)
        self.ids = np.asarray(ids, dtype=np.int64)
        self._positions = None

    @classmethod
    def from_positions(cls, positions, ids=None) -> "SignalSet":
        pos = np.asarray(positions, dtype=np.complex128).reshape(-1, 1)
        return cls(pos, ids)

    @property
    def positions(self) -> np.ndarray:
        if self._positions is None:
            self._positions = self.comps.sum(axis=1)
            self._positions.setflags(write=False)
        return self._positions

    def __len__(self) -> int:
        return self.comps.shape[0]

    def point(self, row: int) -> MDPoint:
        return MDPoint(
            index=int(self.ids[row]),
            components=tuple(complex(c) for c in self.comps[row]),
            position=complex(self.positions[row]),
        )

    def points(self):
        return [self.point(i) for i in range(len(self))]

    def take(self, rows) -> "SignalSet":
        """Subset by row selection, keeping ids."""
        rows = np.asarray(rows)
        return SignalSet(self.comps[rows], self.ids[rows])

    def is_integer(self) -> bool:
        return bool(
            np.all(self.comps.real == np.round(self.comps.real))
            and np.all(self.comps.imag == np.round(self.comps.imag))
        )


@dataclass(frozen=True)
class MotherSet:
    """Lazy Cartesian power of a base constellation.

    Point index runs in mixed radix with the first component most
    significant, so chunk enumeration by leading component is contiguous.
    """

    base: BaseConstellation
    d_f: int

    @property
    def size(self) -> int:
        return self.base.M ** self.d_f

    def component_rows(self, start: int, stop: int) -> np.ndarray:
        """Materialize rows [start, stop) of the full product."""
        idx = np.arange(start, stop, dtype=np.int64)
        shape = (self.base.M,) * self.d_f
        cols = np.unravel_index(idx, shape)
        return np.stack([self.base.points[c] for c in cols], axis=1)

    def iter_chunks(self, max_rows: int = 1 << 18):
        for start in range(0, self.size, max_rows):
            stop = min(start + max_rows, self.size)
            yield start, self.component_rows(start, stop)

    def materialize(self, limit: int = 1 << 20) -> SignalSet:
        if self.size > limit:
            raise MemoryError(f"mother of size {self.size} exceeds limit {limit}")
        return SignalSet(self.component_rows(0, self.size))


def build_mother(base: BaseConstellation, d_f: int) -> MotherSet:
    """The d_f-fold Cartesian power of a base constellation."""
    if d_f < 1:
        raise ValueError("d_f must be >= 1")
    return MotherSet(base=base, d_f=d_f)


def _variance_key(comps_re: np.ndarray, comps_im: np.ndarray) -> np.ndarray:
    # Exact integer surrogate for component variance: sum |d_f*a_i - S|^2
    # equals d_f^2 * sum |a_i - mean|^2, monotone in the sample variance.
    d_f = comps_re.shape[1]
    s_re = comps_re.sum(axis=1, keepdims=True)
    s_im = comps_im.sum(axis=1, keepdims=True)
    dre = d_f * comps_re - s_re
    dim = d_f * comps_im - s_im
    return (dre * dre + dim * dim).sum(axis=1)


def dedup_positions(source, min_size: int | None = None) -> SignalSet:
    """Collapse position collisions, keeping the max-variance point per position.

    Variance ties keep the lowest point index.  Output points are re-indexed
    0..n-1 in ascending source-index order; positions are pairwise distinct.

    Args:
        source: a MotherSet or an integer-lattice SignalSet.
        min_size: if given, raise SetTooSmall when fewer positions survive
            (the base constellation must then be rebuilt larger).
    """
    if isinstance(source, MotherSet):
        chunks = source.iter_chunks()
        d_f = source.d_f
    else:
        if not source.is_integer():
            raise ValueError("dedup requires integer-lattice components")
        chunks = [(0, source.comps)]
        d_f = source.d_f

    # best[poskey] = (varkey, source_index)
    best: dict[int, tuple[int, int]] = {}
    span = None
    for start, comps in chunks:
        cre = np.round(comps.real).astype(np.int64)
        cim = np.round(comps.imag).astype(np.int64)
        if span is None:
            # Upper bound on |position coordinate|, same for all chunks.
            span = int(max(np.abs(cre).max(initial=0), np.abs(cim).max(initial=0))) * d_f + 1
            span = max(span, 1)
        pos_re = cre.sum(axis=1)
        pos_im = cim.sum(axis=1)
        poskey = (pos_re + span) * (2 * span + 1) + (pos_im + span)
        varkey = _variance_key(cre, cim)
        idx = np.arange(start, start + comps.shape[0], dtype=np.int64)
        order = np.lexsort((idx, -varkey, poskey))
        pk = poskey[order]
        first = np.ones(len(pk), dtype=bool)
        first[1:] = pk[1:] != pk[:-1]
        for o in order[first]:
            key = int(poskey[o])
            cand = (int(varkey[o]), int(idx[o]))
            cur = best.get(key)
            if cur is None or cand[0] > cur[0] or (cand[0] == cur[0] and cand[1] < cur[1]):
                best[key] = cand

    survivors = sorted(i for _, i in best.values())
    if min_size is not None and len(survivors) < min_size:
        raise SetTooSmall(
            f"{len(survivors)} distinct positions < required {min_size}; "
            "rebuild the mother constellation with a larger base"
        )
    if isinstance(source, MotherSet):
        rows = [source.component_rows(i, i + 1)[0] for i in survivors]
        comps = np.array(rows, dtype=np.complex128)
    else:
        comps = source.comps[survivors]
    return SignalSet(comps)


def _nn_sq_dist(positions: np.ndarray, alive: np.ndarray) -> np.ndarray:
    """For each alive point, squared distance to its nearest alive other."""
    pos = positions[alive]
    d2 = np.abs(pos[:, None] - pos[None, :]) ** 2
    np.fill_diagonal(d2, np.inf)
    out = np.full(len(positions), np.inf)
    out[alive] = d2.min(axis=1)
    return out


def _ratio_keys(set_is_int, nn_d2, energy):
    """Exact removal-order keys: (ratio, -index) with zero-energy = keep last."""
    if set_is_int:
        return [
            (Fraction(int(round(n)), int(round(e))) if e > 0 else Fraction(1 << 62))
            for n, e in zip(nn_d2, energy)
        ]
    return [n / e if e > 0 else np.inf for n, e in zip(nn_d2, energy)]


def shape(sig_set: SignalSet, target_size: int, mode: str = "dynamic") -> SignalSet:
    """Remove points until target_size remain.

    The removal criterion is (min squared 2D distance to the remaining
    points) / (squared position magnitude); the smallest ratio goes first.
    Dynamic mode (default) re-evaluates after each removal; static mode
    ranks once on the full set.  Equal ratios remove the highest index
    first; a zero-magnitude position counts as unbounded ratio (kept).
    """
    n = len(sig_set)
    if target_size > n:
        raise TargetTooLarge(f"target {target_size} > set size {n}")
    if mode not in ("dynamic", "static"):
        raise ValueError(f"unknown shaping mode {mode!r}")
    if target_size == n:
        return sig_set.take(np.arange(n))

    positions = sig_set.positions
    exact = sig_set.is_integer()
    energy = np.abs(positions) ** 2
    if exact:
        pr = np.round(positions.real).astype(np.int64)
        pi = np.round(positions.imag).astype(np.int64)
        energy = (pr * pr + pi * pi).astype(np.float64)

    alive = np.ones(n, dtype=bool)
    if mode == "static":
        nn_d2 = _nn_sq_dist(positions, alive)
        keys = _ratio_keys(exact, nn_d2, energy)
        order = sorted(range(n), key=lambda i: (keys[i], -i))
        for i in order[: n - target_size]:
            alive[i] = False
        return sig_set.take(np.flatnonzero(alive))

    d2 = np.abs(positions[:, None] - positions[None, :]) ** 2
    if exact:
        dre = pr[:, None] - pr[None, :]
        dim = pi[:, None] - pi[None, :]
        d2 = (dre * dre + dim * dim).astype(np.float64)
    np.fill_diagonal(d2, np.inf)
    nn_d2 = d2.min(axis=1)
    ratio = np.where(energy > 0, nn_d2 / np.where(energy > 0, energy, 1), np.inf)

    for _ in range(n - target_size):
        live = np.flatnonzero(alive)
        m = ratio[live].min()
        cand = live[ratio[live] <= m * (1 + 1e-9)] if np.isfinite(m) else live
        if exact and len(cand) > 1:
            keys = _ratio_keys(True, nn_d2[cand], energy[cand])
            kmin = min(keys)
            cand = cand[[k == kmin for k in keys]]
        else:
            cand = cand[ratio[cand] == ratio[cand].min()]
        victim = int(cand.max())  # highest index among exact ties
        alive[victim] = False
        # Only points whose nearest neighbor was the victim need refreshing.
        stale = np.flatnonzero(alive & (d2[:, victim] <= nn_d2))
        d2[:, victim] = np.inf
        d2[victim, :] = np.inf
        for i in stale:
            nn_d2[i] = d2[i, alive].min()
            ratio[i] = nn_d2[i] / energy[i] if energy[i] > 0 else np.inf
    return sig_set.take(np.flatnonzero(alive))


def mean_position_energy(sig_set: SignalSet) -> float:
    """Analytic mean of |position|^2 over the set."""
    z = sig_set.positions
    return float((z.real * z.real + z.imag * z.imag).mean())


def write_point_table(sig_set: SignalSet, stream) -> None:
    """Plain-text export: id, component coordinates, position. Exact integers."""

    def fmt(x: float) -> str:
        return str(int(x)) if x == int(x) else repr(x)

    cols = ["id"]
    for i in range(sig_set.d_f):
        cols += [f"c{i}_re", f"c{i}_im"]
    cols += ["pos_re", "pos_im"]
    stream.write("\t".join(cols) + "\n")
    for row in range(len(sig_set)):
        vals = [str(int(sig_set.ids[row]))]
        for c in sig_set.comps[row]:
            vals += [fmt(c.real), fmt(c.imag)]
        p = sig_set.positions[row]
        vals += [fmt(p.real), fmt(p.imag)]
        stream.write("\t".join(vals) + "\n")
