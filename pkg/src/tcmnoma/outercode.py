"""Optional per-user outer code: rate-1/2 convolutional (133, 171 octal),
constraint length 7, zero-tail terminated, hard-decision Viterbi decoding.
"""

import numpy as np

G0 = 0o133
G1 = 0o171
MEMORY = 6

_W = np.arange(1 << (MEMORY + 1))
_PAR0 = np.array([bin(int(w) & G0).count("1") & 1 for w in _W], dtype=np.int64)
_PAR1 = np.array([bin(int(w) & G1).count("1") & 1 for w in _W], dtype=np.int64)

# butterfly wiring: state s' = w >> 1 with window w = (input << MEMORY) | s
_SP = np.arange(1 << MEMORY)
_PREV0 = (_SP & ((1 << (MEMORY - 1)) - 1)) << 1
_PREV1 = _PREV0 | 1
_BIN = _SP >> (MEMORY - 1)
_W0 = (_BIN << MEMORY) | _PREV0
_W1 = (_BIN << MEMORY) | _PREV1


def conv_encode(bits) -> np.ndarray:
    """Encode and terminate; returns 2*(n + MEMORY) coded bits."""
    bits = np.asarray(bits, dtype=np.int64)
    padded = np.concatenate([bits, np.zeros(MEMORY, dtype=np.int64)])
    out = np.empty(2 * padded.size, dtype=np.int64)
    s = 0
    for i, b in enumerate(padded):
        w = (int(b) << MEMORY) | s
        out[2 * i] = _PAR0[w]
        out[2 * i + 1] = _PAR1[w]
        s = w >> 1
    return out


def viterbi_decode(coded) -> np.ndarray:
    """Hard-decision decode of a terminated stream; returns the info bits."""
    coded = np.asarray(coded, dtype=np.int64)
    if coded.size % 2:
        raise ValueError("coded stream length must be even")
    steps = coded.size // 2
    if steps <= MEMORY:
        raise ValueError("stream shorter than the termination tail")
    n_states = 1 << MEMORY

    metric = np.full(n_states, np.inf)
    metric[0] = 0.0
    prev = np.empty((steps, n_states), dtype=np.int64)
    for t in range(steps):
        r0, r1 = int(coded[2 * t]), int(coded[2 * t + 1])
        bm0 = (_PAR0[_W0] ^ r0) + (_PAR1[_W0] ^ r1)
        bm1 = (_PAR0[_W1] ^ r0) + (_PAR1[_W1] ^ r1)
        c0 = metric[_PREV0] + bm0
        c1 = metric[_PREV1] + bm1
        take1 = c1 < c0
        metric = np.where(take1, c1, c0)
        prev[t] = np.where(take1, _PREV1, _PREV0)

    bits = np.empty(steps, dtype=np.int64)
    s = 0
    for t in range(steps - 1, -1, -1):
        bits[t] = s >> (MEMORY - 1)
        s = int(prev[t, s])
    return bits[: steps - MEMORY]
