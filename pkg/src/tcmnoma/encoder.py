"""Transmit pipeline: per-subcarrier sequence assembly, trellis encoding,
point mapping, superposition, and register flush.

Each subcarrier runs one instance of the shared convolutional code.  A time
unit assembles the q-bit slices of the d_f users sharing the subcarrier
(ascending user order, first user most significant), feeds the top r bits
through the encoder, and carries the rest uncoded; the coded label selects
one point of the subcarrier's signal set and the transmitted element is that
point's 2D position.  After the payload, a computed per-state flush sequence
drives every encoder back to state zero; flush symbols are transmitted but
carry no payload.
"""

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange, InvalidDimensions, NonRealizable
from .mapping import MappingMatrix, users_on_subcarrier
from .partition import LabelingTable
from .trellis import TrellisDiagram


@dataclass(frozen=True)
class Frame:
    """Per-user payload: one q-bit word per user per time unit."""

    q: int
    words: np.ndarray  # (n_users, units) ints in [0, 2^q)

    @property
    def n_users(self) -> int:
        return self.words.shape[0]

    @property
    def units(self) -> int:
        return self.words.shape[1]


def random_frame(n_users: int, units: int, q: int, rng) -> Frame:
    return Frame(q, rng.integers(0, 1 << q, size=(n_users, units), dtype=np.int64))


def bit_errors(sent: np.ndarray, decoded: np.ndarray, q: int) -> int:
    """Hamming distance between two word arrays, counted in bits."""
    x = np.bitwise_xor(np.asarray(sent, dtype=np.int64), np.asarray(decoded, dtype=np.int64))
    total = 0
    for _ in range(q):
        total += int((x & 1).sum())
        x >>= 1
    return total


def assemble_sequence(mapping: MappingMatrix, frame: Frame, k: int, t: int) -> int:
    """Concatenated q-bit words of the users on subcarrier k (1-based) at unit t.

    Ascending user order, first user most significant.
    """
    if not 0 <= t < frame.units:
        raise IndexOutOfRange(f"unit {t} outside 0..{frame.units - 1}")
    word = 0
    for j in users_on_subcarrier(mapping, k):
        word = (word << frame.q) | int(frame.words[j - 1, t])
    return word


class FlushPlan:
    """Shortest input sequences driving every encoder state to zero.

    Zero inputs do not flush a feedback encoder in general, so the tail is
    solved per state on the transition graph; ties pick the smallest input.
    State zero holds under input zero, letting early-flushed subcarriers idle.
    """

    def __init__(self, diagram: TrellisDiagram):
        self._nxt = diagram.next_state
        n_states, n_inputs = self._nxt.shape
        # BFS backward from zero by layers
        dist = np.full(n_states, -1, dtype=np.int64)
        dist[0] = 0
        d = 0
        grown = True
        while grown:
            d += 1
            grown = False
            for s in range(n_states):
                if dist[s] >= 0:
                    continue
                for u in range(n_inputs):
                    if dist[int(self._nxt[s, u])] == d - 1:
                        dist[s] = d
                        grown = True
                        break
        if (dist < 0).any():
            bad = int(np.flatnonzero(dist < 0)[0])
            raise NonRealizable(f"state {bad} cannot reach state 0")
        self.m = int(dist.max())
        self.dist = dist
        # first flush input per state: smallest u stepping one layer down
        step = np.zeros(n_states, dtype=np.int64)
        for s in range(1, n_states):
            for u in range(n_inputs):
                if dist[int(self._nxt[s, u])] == dist[s] - 1:
                    step[s] = u
                    break
        self.step = step

    def sequence(self, state: int) -> tuple:
        """Flush inputs from the given state, padded with zeros to length m."""
        out = []
        s = int(state)
        while s != 0:
            u = int(self.step[s])
            out.append(u)
            s = int(self._nxt[s, u])
        out.extend([0] * (self.m - len(out)))
        return tuple(out)


def flush_plan(diagram: TrellisDiagram) -> FlushPlan:
    return FlushPlan(diagram)


def tcm_encode_unit(b: int, state: int, diagram: TrellisDiagram, labeling: LabelingTable, k: int):
    """Encode one assembled sequence on subcarrier k (1-based).

    Returns (next_state, c, point_id, position): c prefixes the parity bit
    and the r systematic bits onto the uncoded remainder of b.
    """
    r = diagram.code.input_bits
    bits = labeling.bits_per_label
    uncoded = bits - (r + 1)
    u = b >> uncoded
    low = b & ((1 << uncoded) - 1)
    ns = int(diagram.next_state[state, u])
    coded = int(diagram.coded[state, u])
    c = (coded << uncoded) | low
    return ns, c, int(labeling.point_by_bits[k - 1, c]), complex(labeling.pos_by_bits[k - 1, c])


@dataclass
class TxFrame:
    positions: np.ndarray  # (units, K) superimposed elements
    tone_words: np.ndarray  # (units, K) assembled input sequences
    labels: np.ndarray  # (units, K) coded labels
    point_ids: np.ndarray  # (units, K)
    components: np.ndarray | None  # (units, K, d_f) per-user elements
    payload_units: int
    flush_units: int
    final_states: np.ndarray  # (K,)


def transmit_frame(
    frame: Frame,
    mapping: MappingMatrix,
    diagram: TrellisDiagram,
    labeling: LabelingTable,
    signal_set=None,
) -> TxFrame:
    """Run the full transmit chain over payload plus flush units.

    signal_set, when given, must be the designed set behind the labeling; it
    supplies the per-user 2D components for diagnostics.
    """
    K = mapping.K
    q = frame.q
    d_f = mapping.d_f
    r = diagram.code.input_bits
    bits = labeling.bits_per_label
    if bits != q * d_f + 1:
        raise InvalidDimensions(f"labeling carries {bits}-bit labels, need {q * d_f + 1}")
    if labeling.n_subcarriers != K:
        raise InvalidDimensions(f"labeling spans {labeling.n_subcarriers} subcarriers, need {K}")
    uncoded = bits - (r + 1)
    plan = flush_plan(diagram)
    eta, m = frame.units, plan.m
    total = eta + m

    positions = np.zeros((total, K), dtype=np.complex128)
    tone_words = np.zeros((total, K), dtype=np.int64)
    labels = np.zeros((total, K), dtype=np.int64)
    point_ids = np.zeros((total, K), dtype=np.int64)
    comps = None
    id_row = None
    if signal_set is not None:
        comps = np.zeros((total, K, d_f), dtype=np.complex128)
        # labels carry stable point ids, not rows of the shaped set
        id_row = {int(i): row for row, i in enumerate(signal_set.ids)}

    states = [0] * K
    for t in range(total):
        for k in range(1, K + 1):
            if t < eta:
                b = assemble_sequence(mapping, frame, k, t)
            else:
                b = int(plan.step[states[k - 1]]) << uncoded
            ns, c, pid, pos = tcm_encode_unit(b, states[k - 1], diagram, labeling, k)
            states[k - 1] = ns
            positions[t, k - 1] = pos
            tone_words[t, k - 1] = b
            labels[t, k - 1] = c
            point_ids[t, k - 1] = pid
            if comps is not None:
                comps[t, k - 1] = signal_set.comps[id_row[pid]]
    return TxFrame(
        positions=positions,
        tone_words=tone_words,
        labels=labels,
        point_ids=point_ids,
        components=comps,
        payload_units=eta,
        flush_units=m,
        final_states=np.array(states, dtype=np.int64),
    )
