"""Joint multi-user sequence detection.

Three detectors share one metric, the squared Euclidean distance between the
received sample and the channel-scaled candidate position, summed over
subcarriers and time units:

- mlsd_exhaustive enumerates every payload hypothesis and re-encodes it; the
  exact maximum-likelihood reference, usable only at toy sizes.
- viterbi_optimal runs dynamic programming over all super states (the K-tuple
  of component encoder states); exact, tractable while K*V stays small.
- decode_two_layer is the reduced-complexity detector: per survivor and per
  subcarrier an inner layer gates candidate points by distance, the outer
  layer assembles cross-consistent branches over subcarriers and keeps the
  best survivors per unit.

All three decode the payload units and the flush tail; tail branches are
restricted to the transmitter's computed flush schedule, so the hypothesis
spaces agree and the detectors coincide whenever the optimum is unique.
"""

from dataclasses import dataclass

import numpy as np

from ._kernel import KERNEL_KIND, decode_unit  # noqa: F401  (re-exported)
from .encoder import Frame, flush_plan, transmit_frame
from .errors import InvalidDimensions, StateSpaceTooLarge, TooLarge
from .mapping import MappingMatrix, users_on_subcarrier
from .partition import LabelingTable
from .trellis import TrellisDiagram


def _derive_q(mapping: MappingMatrix, labeling: LabelingTable) -> int:
    bits = labeling.bits_per_label
    q, rem = divmod(bits - 1, mapping.d_f)
    if rem or q < 1:
        raise InvalidDimensions(f"{bits}-bit labels do not split into d_f={mapping.d_f} slices")
    return q


def _slice_tables(mapping: MappingMatrix, q: int):
    """Per subcarrier: 0-based user ids (ascending) and their bit shifts."""
    K, d_f = mapping.K, mapping.d_f
    users = np.empty((K, d_f), dtype=np.int64)
    shifts = np.empty((K, d_f), dtype=np.int64)
    for k in range(1, K + 1):
        occ = users_on_subcarrier(mapping, k)
        for i, j in enumerate(occ):
            users[k - 1, i] = j - 1
            shifts[k - 1, i] = (d_f - 1 - i) * q
    return users, shifts


def cross_check(tone_words, mapping: MappingMatrix, q: int) -> bool:
    """True iff every user's q-bit slice agrees across its subcarriers."""
    users, shifts = _slice_tables(mapping, q)
    qmask = (1 << q) - 1
    seen = {}
    for k in range(mapping.K):
        w = int(tone_words[k])
        for j, sh in zip(users[k], shifts[k]):
            val = (w >> int(sh)) & qmask
            if int(j) in seen:
                if seen[int(j)] != val:
                    return False
            else:
                seen[int(j)] = val
    return True


def _pack_states(comp_states, v_bits: int):
    comp_states = np.asarray(comp_states, dtype=np.int64)
    K = comp_states.shape[-1]
    out = np.zeros(comp_states.shape[:-1], dtype=np.int64)
    for k in range(K):
        out |= comp_states[..., k] << ((K - 1 - k) * v_bits)
    return out


def _unpack_states(packed, K: int, v_bits: int):
    packed = np.asarray(packed, dtype=np.int64)
    mask = (1 << v_bits) - 1
    out = np.empty(packed.shape + (K,), dtype=np.int16)
    for k in range(K):
        out[..., k] = (packed >> ((K - 1 - k) * v_bits)) & mask
    return out


def _extract_user_words(tone_bits, mapping: MappingMatrix, q: int, eta: int) -> np.ndarray:
    """Per-user payload words from packed per-unit tone words.

    Each user reads from its lowest-index occupied subcarrier; qualified
    paths carry identical slices on the others.
    """
    users, shifts = _slice_tables(mapping, q)
    K, d_f = mapping.K, mapping.d_f
    bits_per_tone = q * d_f
    qmask = (1 << q) - 1
    out = np.zeros((mapping.J, eta), dtype=np.int64)
    src = {}
    for k in range(K):
        for i in range(d_f):
            j = int(users[k, i])
            if j not in src:
                src[j] = (K - 1 - k) * bits_per_tone + int(shifts[k, i])
    for t in range(eta):
        packed = int(tone_bits[t])
        for j, sh in src.items():
            out[j, t] = (packed >> sh) & qmask
    return out


@dataclass
class BranchStats:
    """Per payload unit: qualified branch counts and inner-layer diagnostics."""

    pre_dedup: np.ndarray  # raw cross-consistent extensions
    post_dedup: np.ndarray  # after duplicate removal, before the survivor cap
    gated_fallbacks: np.ndarray  # (survivor, tone) pairs that fell back to nearest
    retries: int  # units re-run without the radius gate


@dataclass
class DecodeResult:
    words: np.ndarray  # (J, eta) q-bit payload words
    metric: float
    terminated_at_zero: bool
    stats: BranchStats | None = None
    tie: bool = False


class _Setup:
    """Shared decoder precomputation for one (mapping, diagram, labeling) triple."""

    def __init__(self, mapping, diagram, labeling):
        self.mapping = mapping
        self.diagram = diagram
        self.labeling = labeling
        self.q = _derive_q(mapping, labeling)
        self.K = mapping.K
        self.d_f = mapping.d_f
        self.r = diagram.code.input_bits
        self.v_bits = diagram.code.registers
        self.bits_per_tone = self.q * self.d_f
        self.uncoded = self.bits_per_tone - self.r
        if self.uncoded < 0:
            raise InvalidDimensions(f"r={self.r} exceeds {self.bits_per_tone} input bits per tone")
        self.label_table, self.next_table = diagram.decoder_tables(self.uncoded)
        self.pos_by_label = np.ascontiguousarray(labeling.pos_by_bits)
        self.slice_user, self.slice_shift = _slice_tables(mapping, self.q)
        self.plan = flush_plan(diagram)

    def check_grid(self, y, realization):
        y = np.asarray(y, dtype=np.complex128)
        h = np.asarray(realization.gains, dtype=np.complex128)
        if y.shape != h.shape or y.ndim != 2 or y.shape[1] != self.K:
            raise InvalidDimensions(f"received grid {y.shape} vs gains {h.shape} and K={self.K}")
        eta = y.shape[0] - self.plan.m
        if eta < 0:
            raise InvalidDimensions(f"{y.shape[0]} units cannot hold a {self.plan.m}-unit flush tail")
        return y, h, eta

    def flush_step(self, comp_states):
        """Tail tone words and next states for an array of component states."""
        u = self.plan.step[comp_states]
        words = u << self.uncoded
        labels = np.empty_like(words)
        nxt = np.empty_like(comp_states)
        for k in range(self.K):
            labels[..., k] = self.label_table[comp_states[..., k], words[..., k]]
            nxt[..., k] = self.next_table[comp_states[..., k], words[..., k]]
        return words, labels, nxt


def mlsd_exhaustive(y, mapping, diagram, labeling, realization) -> DecodeResult:
    """Exact maximum-likelihood detection by full payload enumeration.

    Ties within a 1e-9 relative band are flagged so differential tests can
    exclude non-unique optima.
    """
    setup = _Setup(mapping, diagram, labeling)
    y, h, eta = setup.check_grid(y, realization)
    J, q = mapping.J, setup.q
    total_bits = J * q * eta
    if total_bits > 24:
        raise TooLarge(f"2^{total_bits} hypotheses exceed the enumeration guard")
    word_bits = J * q
    wmask = (1 << word_bits) - 1
    qmask = (1 << q) - 1

    best = np.inf
    second = np.inf
    best_words = None
    for hyp in range(1 << total_bits):
        words = np.zeros((J, eta), dtype=np.int64)
        for t in range(eta):
            w = (hyp >> ((eta - 1 - t) * word_bits)) & wmask
            for j in range(J):
                words[j, t] = (w >> ((J - 1 - j) * q)) & qmask
        tx = transmit_frame(Frame(q, words), mapping, diagram, labeling)
        d = y - h * tx.positions
        metric = float((d.real * d.real + d.imag * d.imag).sum())
        if metric < best:
            second = best
            best = metric
            best_words = words
        elif metric < second:
            second = metric
    tie = np.isfinite(second) and (second - best) <= 1e-9 * (1.0 + abs(best))
    return DecodeResult(words=best_words, metric=best, terminated_at_zero=True, tie=bool(tie))


def _user_word_tones(setup: _Setup):
    """Tone words b^(k)(w) for every joint user word w, (K, 2^{Jq})."""
    J, q, K = setup.mapping.J, setup.q, setup.K
    qmask = (1 << q) - 1
    n_w = 1 << (J * q)
    w = np.arange(n_w, dtype=np.int64)
    tones = np.zeros((K, n_w), dtype=np.int64)
    for k in range(K):
        for i in range(setup.d_f):
            j = int(setup.slice_user[k, i])
            slice_val = (w >> ((J - 1 - j) * q)) & qmask
            tones[k] |= slice_val << int(setup.slice_shift[k, i])
    return tones


def viterbi_optimal(y, mapping, diagram, labeling, realization) -> DecodeResult:
    """Exact joint detection over the full super-state trellis."""
    setup = _Setup(mapping, diagram, labeling)
    y, h, eta = setup.check_grid(y, realization)
    K, v = setup.K, setup.v_bits
    J, q = mapping.J, setup.q
    if K * v > 20:
        raise StateSpaceTooLarge(f"2^{K * v} super states exceed the guard")
    n_super = 1 << (K * v)
    n_w = 1 << (J * q)
    if n_super * n_w * (eta + setup.plan.m) > 1 << 26:
        raise StateSpaceTooLarge("super-trellis sweep too large to enumerate")

    comp = _unpack_states(np.arange(n_super), K, v).astype(np.int64)  # (NS, K)
    tones = _user_word_tones(setup)  # (K, W)
    labels = np.empty((K, n_super, n_w), dtype=np.int64)
    nxt = np.empty((K, n_super, n_w), dtype=np.int64)
    for k in range(K):
        labels[k] = setup.label_table[comp[:, k][:, None], tones[k][None, :]]
        nxt[k] = setup.next_table[comp[:, k][:, None], tones[k][None, :]]
    next_super = np.zeros((n_super, n_w), dtype=np.int64)
    for k in range(K):
        next_super |= nxt[k] << ((K - 1 - k) * v)

    dp = np.full(n_super, np.inf)
    dp[0] = 0.0
    hist_prev = []
    hist_word = []

    for t in range(eta):
        d2 = np.zeros((n_super, n_w), dtype=np.float64)
        for k in range(K):
            pos = setup.pos_by_label[k][labels[k]]
            d = y[t, k] - h[t, k] * pos
            d2 += d.real * d.real + d.imag * d.imag
        cand = dp[:, None] + d2
        flat = cand.ravel()
        tgt = next_super.ravel()
        finite = np.isfinite(flat)
        order = np.lexsort((np.arange(flat.size)[finite], flat[finite]))
        rows = np.flatnonzero(finite)[order]
        new_dp = np.full(n_super, np.inf)
        prev_arr = np.full(n_super, -1, dtype=np.int64)
        word_arr = np.full(n_super, -1, dtype=np.int64)
        # first hit per target in metric order wins
        first_rows = rows[np.unique(tgt[rows], return_index=True)[1]]
        for rr in first_rows:
            s_prev, w = divmod(int(rr), n_w)
            s_next = int(tgt[rr])
            new_dp[s_next] = float(cand[s_prev, w])
            prev_arr[s_next] = s_prev
            word_arr[s_next] = w
        dp = new_dp
        hist_prev.append(prev_arr)
        hist_word.append(word_arr)

    for tau in range(setup.plan.m):
        words_tail, labels_tail, nxt_tail = setup.flush_step(comp)
        d2 = np.zeros(n_super, dtype=np.float64)
        for k in range(K):
            pos = setup.pos_by_label[k][labels_tail[:, k]]
            d = y[eta + tau, k] - h[eta + tau, k] * pos
            d2 += d.real * d.real + d.imag * d.imag
        cand = dp + d2
        tgt = _pack_states(nxt_tail, v)
        new_dp = np.full(n_super, np.inf)
        prev_arr = np.full(n_super, -1, dtype=np.int64)
        word_arr = np.full(n_super, -1, dtype=np.int64)
        order = np.argsort(cand, kind="stable")
        for s_prev in order:
            if not np.isfinite(cand[s_prev]):
                break
            s_next = int(tgt[s_prev])
            if prev_arr[s_next] < 0:
                new_dp[s_next] = float(cand[s_prev])
                prev_arr[s_next] = int(s_prev)
                word_arr[s_next] = -2  # tail marker; tone words recomputed on traceback
        dp = new_dp
        hist_prev.append(prev_arr)
        hist_word.append(word_arr)

    terminated = bool(np.isfinite(dp[0]))
    final = 0 if terminated else int(np.argmin(dp))
    metric = float(dp[final])

    path_words = []
    s = final
    for t in range(eta + setup.plan.m - 1, -1, -1):
        path_words.append(int(hist_word[t][s]))
        s = int(hist_prev[t][s])
    path_words.reverse()

    tone_bits = np.zeros(eta, dtype=np.int64)
    for t in range(eta):
        w = path_words[t]
        packed = 0
        for k in range(K):
            packed |= int(tones[k][w]) << ((K - 1 - k) * setup.bits_per_tone)
        tone_bits[t] = packed
    words = _extract_user_words(tone_bits, mapping, q, eta)
    return DecodeResult(words=words, metric=metric, terminated_at_zero=terminated)


@dataclass
class CandidateSlice:
    """Inner-layer candidates for one (survivor state, subcarrier, sample)."""

    words: np.ndarray  # input sequences b
    labels: np.ndarray  # coded labels c
    positions: np.ndarray  # candidate points (channel-unscaled)
    d2: np.ndarray  # squared distances to the received sample
    next_states: np.ndarray
    gated_out: bool  # true when the radius gate was empty and fallback applied


def inner_candidates(y_k, comp_state, diagram, labeling, a, sigma2, h_k, k: int = 1) -> CandidateSlice:
    """Distance-gated feasible points on subcarrier k (1-based) from one state.

    Keeps points with |y - h*pos| <= a*sigma2; an empty gate falls back to
    the single nearest feasible point.
    """
    r = diagram.code.input_bits
    bits = labeling.bits_per_label
    uncoded = bits - (r + 1)
    label_table, next_table = diagram.decoder_tables(uncoded)
    labels = label_table[comp_state]
    pos = labeling.pos_by_bits[k - 1][labels]
    d = y_k - h_k * pos
    d2 = d.real * d.real + d.imag * d.imag
    thr = a * sigma2
    if np.isfinite(thr):
        sel = np.flatnonzero(d2 <= thr * thr)
    else:
        sel = np.arange(d2.shape[0])
    gated_out = sel.size == 0
    if gated_out:
        sel = np.array([int(np.argmin(d2))])
    return CandidateSlice(
        words=sel.astype(np.int64),
        labels=labels[sel].astype(np.int64),
        positions=pos[sel],
        d2=d2[sel],
        next_states=next_table[comp_state][sel].astype(np.int64),
        gated_out=bool(gated_out),
    )


def decode_two_layer(
    y,
    mapping,
    diagram,
    labeling,
    realization,
    lam: int = 25,
    a: float = 5.0,
    paper_literal: bool = False,
    collect_stats: bool = True,
) -> DecodeResult:
    """Reduced-complexity joint detection with at most lam survivors.

    Per unit, the compiled kernel enumerates cross-consistent branch
    extensions of every survivor, gating inner candidates to the a*sigma2
    radius (empty gates fall back to the nearest point; a fully empty unit is
    retried without the gate).  Extensions sort by (metric, branch bits,
    survivor) and dedup to one survivor per super state (paper_literal
    instead drops only identical (state, branch) duplicates).  The flush tail
    follows the transmitter's schedule; the shortest zero-state survivor wins.
    """
    if lam < 1:
        raise InvalidDimensions("need at least one survivor")
    setup = _Setup(mapping, diagram, labeling)
    y, h, eta = setup.check_grid(y, realization)
    K, v = setup.K, setup.v_bits
    sigma2 = float(realization.sigma2)
    thr = a * sigma2
    gate2 = thr * thr if np.isfinite(thr) else -1.0

    metrics = np.zeros(1, dtype=np.float64)
    states = np.zeros((1, K), dtype=np.int16)
    hist_prev = []
    hist_bits = []
    pre_counts = np.zeros(eta, dtype=np.int64)
    post_counts = np.zeros(eta, dtype=np.int64)
    gated = np.zeros(eta, dtype=np.int64)
    retries = 0

    for t in range(eta):
        ext_metric, ext_bits, ext_next, ext_prev, n_gated = decode_unit(
            metrics,
            states,
            y[t],
            h[t],
            setup.pos_by_label,
            setup.label_table,
            setup.next_table,
            setup.slice_user,
            setup.slice_shift,
            setup.q,
            mapping.J,
            gate2,
            setup.bits_per_tone,
            v,
        )
        if ext_metric.size == 0:
            retries += 1
            ext_metric, ext_bits, ext_next, ext_prev, n_gated = decode_unit(
                metrics,
                states,
                y[t],
                h[t],
                setup.pos_by_label,
                setup.label_table,
                setup.next_table,
                setup.slice_user,
                setup.slice_shift,
                setup.q,
                mapping.J,
                -1.0,
                setup.bits_per_tone,
                v,
            )
        order = np.lexsort((ext_prev, ext_bits, ext_metric))
        if paper_literal:
            prev_super = _pack_states(states[ext_prev], v)
            key = (prev_super << (K * setup.bits_per_tone)) | ext_bits
        else:
            key = ext_next
        ks = key[order]
        sidx = np.argsort(ks, kind="stable")
        first = np.empty(ks.size, dtype=bool)
        first[:1] = True
        first[1:] = ks[sidx][1:] != ks[sidx][:-1]
        kept = order[np.sort(sidx[first])][:lam]

        pre_counts[t] = ext_metric.size
        post_counts[t] = int(first.sum())
        gated[t] = n_gated

        metrics = ext_metric[kept]
        states = _unpack_states(ext_next[kept], K, v)
        hist_prev.append(ext_prev[kept])
        hist_bits.append(ext_bits[kept])

    for tau in range(setup.plan.m):
        t = eta + tau
        words_tail, labels_tail, nxt_tail = setup.flush_step(states.astype(np.int64))
        d2 = np.zeros(metrics.shape[0], dtype=np.float64)
        packed_bits = np.zeros(metrics.shape[0], dtype=np.int64)
        for k in range(K):
            pos = setup.pos_by_label[k][labels_tail[:, k]]
            d = y[t, k] - h[t, k] * pos
            d2 += d.real * d.real + d.imag * d.imag
            packed_bits |= words_tail[:, k].astype(np.int64) << ((K - 1 - k) * setup.bits_per_tone)
        metrics = metrics + d2
        states = nxt_tail.astype(np.int16)
        hist_prev.append(np.arange(metrics.shape[0], dtype=np.int64))
        hist_bits.append(packed_bits)

    at_zero = np.flatnonzero((states == 0).all(axis=1))
    terminated = at_zero.size > 0
    pool = at_zero if terminated else np.arange(metrics.shape[0])
    winner = int(pool[int(np.argmin(metrics[pool]))])

    total = eta + setup.plan.m
    tone_bits = np.zeros(total, dtype=np.int64)
    row = winner
    for t in range(total - 1, -1, -1):
        tone_bits[t] = int(hist_bits[t][row])
        row = int(hist_prev[t][row])

    words = _extract_user_words(tone_bits, mapping, setup.q, eta)
    stats = None
    if collect_stats:
        stats = BranchStats(pre_counts, post_counts, gated, retries)
    return DecodeResult(
        words=words,
        metric=float(metrics[winner]),
        terminated_at_zero=terminated,
        stats=stats,
    )


def branch_cdf(stats_list, which: str = "post"):
    """Empirical CDF of qualified-branch counts over all recorded units.

    Returns (counts, probs): Pr(count <= c) at each distinct c.
    """
    field = {"pre": "pre_dedup", "post": "post_dedup"}[which]
    vals = np.concatenate([np.asarray(getattr(s, field)) for s in stats_list])
    if vals.size == 0:
        raise InvalidDimensions("no recorded units")
    counts = np.unique(vals)
    probs = np.searchsorted(np.sort(vals), counts, side="right") / vals.size
    return counts, probs
