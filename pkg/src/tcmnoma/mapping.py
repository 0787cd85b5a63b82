"""User-to-subcarrier assignment matrices.

A mapping matrix is a binary K x J grid: rows are subcarriers, columns are
users.  Entry (k, j) = 1 means user j transmits a nonzero element on
subcarrier k.  Users and subcarriers are 1-based in every public interface.
"""

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .errors import IndexOutOfRange, InvalidDimensions, InvalidPreset

# 4x6 reference grid: 4 subcarriers, 6 users, 2 subcarriers per user,
# 3 users per subcarrier.
PRESETS = {
    "paper-fig1": [
        [1, 1, 0, 0, 0, 1],
        [1, 0, 0, 1, 1, 0],
        [0, 1, 1, 1, 0, 0],
        [0, 0, 1, 0, 1, 1],
    ],
}


@dataclass(frozen=True)
class MappingMatrix:
    """Validated user-to-subcarrier assignment.

    Attributes:
        K: subcarrier count.
        J: user count.
        N: nonzero elements per user codeword (column weight).
        d_f: users per subcarrier (max row weight; equals every row weight
            for regular grids such as the bundled preset).
        entries: K x J uint8 grid.
    """

    K: int
    J: int
    N: int
    d_f: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def row_weights(self) -> tuple[int, ...]:
        return tuple(int(w) for w in self.entries.sum(axis=1))

    def occupied_subcarriers(self, j: int) -> tuple[int, ...]:
        """Return the 1-based subcarriers carrying user j, ascending."""
        if not 1 <= j <= self.J:
            raise IndexOutOfRange(f"user {j} not in 1..{self.J}")
        return tuple(int(k) + 1 for k in np.flatnonzero(self.entries[:, j - 1]))


def build_mapping(K: int, N: int, J: int, preset=None) -> MappingMatrix:
    """Build a mapping matrix.

    Without a preset the columns are the first J N-subsets of {1..K} in
    lexicographic order.  A preset (explicit grid or a name from PRESETS)
    overrides enumeration; presets are validated for column weight N and
    equal row weights only.

    Raises:
        InvalidDimensions: J exceeds C(K, N) or N not in 1..K.
        InvalidPreset: preset grid shape/weights are wrong.
    """
    if not 1 <= N <= K:
        raise InvalidDimensions(f"need 1 <= N <= K, got N={N}, K={K}")
    if J < 1:
        raise InvalidDimensions(f"need at least one user, got J={J}")
    if isinstance(preset, str):
        try:
            preset = PRESETS[preset]
        except KeyError:
            raise InvalidPreset(f"unknown preset name {preset!r}") from None
    if preset is not None:
        grid = np.asarray(preset, dtype=np.uint8)
        if grid.shape != (K, J):
            raise InvalidPreset(f"preset shape {grid.shape} != ({K}, {J})")
        if not np.isin(grid, (0, 1)).all():
            raise InvalidPreset("preset entries must be 0/1")
        col_w = grid.sum(axis=0)
        bad = np.flatnonzero(col_w != N)
        if bad.size:
            raise InvalidPreset(
                f"column {bad[0] + 1} has weight {col_w[bad[0]]}, expected {N}"
            )
        row_w = grid.sum(axis=1)
        if len(set(row_w.tolist())) != 1:
            raise InvalidPreset(f"rows have unequal weights {row_w.tolist()}")
        return MappingMatrix(K=K, J=J, N=N, d_f=int(row_w[0]), entries=grid)

    if J > comb(K, N):
        raise InvalidDimensions(f"J={J} exceeds C({K},{N})={comb(K, N)}")
    grid = np.zeros((K, J), dtype=np.uint8)
    for j, rows in enumerate(combinations(range(K), N)):
        if j == J:
            break
        grid[list(rows), j] = 1
    d_f = int(grid.sum(axis=1).max())
    return MappingMatrix(K=K, J=J, N=N, d_f=d_f, entries=grid)


def users_on_subcarrier(F: MappingMatrix, k: int) -> tuple[int, ...]:
    """Return the 1-based users occupying subcarrier k, ascending."""
    if not 1 <= k <= F.K:
        raise IndexOutOfRange(f"subcarrier {k} not in 1..{F.K}")
    return tuple(int(j) + 1 for j in np.flatnonzero(F.entries[k - 1]))
