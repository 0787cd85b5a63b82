"""Systematic feedback convolutional code, its trellis, and distance searches.

Realization: registers s_1..s_V, state integer bit j-1 holding s_j.  With
feedback polynomial h0 and input polynomials h1..hr (integer bit m is the
coefficient of D^m),

    parity   y0     = s_1 xor sum_i h_i[0] * u_i
    update   s_j'   = s_{j+1} xor h0[j] * y0 xor sum_i h_i[j] * u_i

(s_{V+1} = 0).  The r+1 coded bits are parity first, then the r inputs
unchanged, packed most-significant first into an integer.  The polynomial
list passed around is (h1, .., hr, h0): feedback last.
"""

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegreeTooHigh, DepthExceeded, InvalidDimensions, NonRealizable


def _parse_poly(v) -> int:
    if isinstance(v, str):
        return int(v, 8)
    return int(v)


@dataclass(frozen=True)
class ConvCode:
    input_bits: int  # r
    registers: int  # V
    parity_octal: tuple  # (h1, .., hr, h0) octal strings, feedback last

    @property
    def input_polys(self):
        return tuple(_parse_poly(s) for s in self.parity_octal[:-1])

    @property
    def feedback_poly(self):
        return _parse_poly(self.parity_octal[-1])


class TrellisDiagram:
    """Transition tables of a ConvCode plus the inverse (output -> branches) index."""

    def __init__(self, code: ConvCode):
        self.code = code
        r, reg = code.input_bits, code.registers
        n_states, n_inputs = 1 << reg, 1 << r
        h0 = code.feedback_poly
        hin = code.input_polys

        nxt = np.empty((n_states, n_inputs), dtype=np.int16)
        cod = np.empty((n_states, n_inputs), dtype=np.int16)
        for s in range(n_states):
            for u in range(n_inputs):
                y0 = s & 1
                for i in range(r):
                    ui = (u >> (r - 1 - i)) & 1
                    y0 ^= (hin[i] & 1) * ui
                ns = 0
                for j in range(1, reg + 1):
                    bit = (s >> j) & 1
                    bit ^= ((h0 >> j) & 1) * y0
                    for i in range(r):
                        ui = (u >> (r - 1 - i)) & 1
                        bit ^= ((hin[i] >> j) & 1) * ui
                    ns |= bit << (j - 1)
                nxt[s, u] = ns
                cod[s, u] = (y0 << r) | u
        self.next_state = nxt
        self.coded = cod
        # branches grouped by coded output: list of (state, input) per label
        inv = [[] for _ in range(1 << (r + 1))]
        for s in range(n_states):
            for u in range(n_inputs):
                inv[int(cod[s, u])].append((s, u))
        self.branches_by_output = tuple(tuple(b) for b in inv)

    @property
    def n_states(self):
        return self.next_state.shape[0]

    @property
    def n_inputs(self):
        return self.next_state.shape[1]

    def decoder_tables(self, uncoded_bits: int):
        """Full-label tables over all (state, input-word) combinations.

        The input word carries r coded bits (high) and uncoded_bits passthrough
        bits (low); the label appends the passthrough bits below the r+1 coded
        bits.  Returns (label_table, next_table), both (n_states, 2^{r+uncoded}).
        """
        r = self.code.input_bits
        n_words = 1 << (r + uncoded_bits)
        words = np.arange(n_words, dtype=np.int64)
        u = words >> uncoded_bits
        low = words & ((1 << uncoded_bits) - 1)
        label = (self.coded[:, u].astype(np.int64) << uncoded_bits) | low[None, :]
        nxt = self.next_state[:, u]
        return (
            np.ascontiguousarray(label, dtype=np.int16),
            np.ascontiguousarray(nxt, dtype=np.int16),
        )


def build_code(r: int, registers: int, parity_octal) -> TrellisDiagram:
    """Validate polynomials and expand the transition tables.

    parity_octal lists r+1 octal strings, feedback polynomial last; the
    feedback term must have its constant and degree-V coefficients set.
    """
    if r < 1 or registers < 1:
        raise InvalidDimensions(f"need r >= 1 and registers >= 1, got {r}, {registers}")
    polys = [_parse_poly(v) for v in parity_octal]
    if len(polys) != r + 1:
        raise InvalidDimensions(f"need {r + 1} polynomials, got {len(polys)}")
    for v in polys:
        if v >> (registers + 1):
            raise DegreeTooHigh(f"polynomial {v:o} (octal) exceeds degree {registers}")
    h0 = polys[-1]
    if not (h0 & 1) or not ((h0 >> registers) & 1):
        raise NonRealizable(
            f"feedback polynomial {h0:o} (octal) must have constant and degree-{registers} terms"
        )
    code = ConvCode(r, registers, tuple(format(v, "o") for v in polys))
    diagram = TrellisDiagram(code)
    # systematic property, by construction but asserted over the whole table
    u_grid = np.arange(1 << r, dtype=np.int16)[None, :]
    assert np.array_equal(diagram.coded & ((1 << r) - 1), np.broadcast_to(u_grid, diagram.coded.shape))
    # state update is GF(2)-linear in (state, input); the flush solver relies on it
    nxt = diagram.next_state
    assert np.array_equal(nxt, nxt[:, :1] ^ nxt[:1, :] ^ nxt[0, 0])
    return diagram


def encode_step(diagram: TrellisDiagram, state: int, u: int):
    return int(diagram.next_state[state, u]), int(diagram.coded[state, u])


# -- pair-state distance searches -------------------------------------------


class _PairGraph:
    """Stacked transition structure over ordered input pairs, shared by searches."""

    def __init__(self, diagram: TrellisDiagram):
        nxt = diagram.next_state.astype(np.int64)
        cod = diagram.coded.astype(np.int64)
        n_states, n_inputs = nxt.shape
        u1, u2 = np.meshgrid(np.arange(n_inputs), np.arange(n_inputs), indexing="ij")
        u1 = u1.ravel()
        u2 = u2.ravel()
        self.n_states = n_states
        self.offdiag = u1 != u2  # (Q,)
        self.c1 = cod[:, u1]  # (S, Q)
        self.c2 = cod[:, u2]
        na = nxt[:, u1]  # (S, Q)
        nb = nxt[:, u2]
        # pair (a, b) stepping with combo q lands on (na[a, q], nb[b, q])
        self.closed = na[:, None, :] == nb[None, :, :]  # (S, S, Q)
        self.target = na[:, None, :] * n_states + nb[None, :, :]

    def step_table(self, table):
        # (S, S, Q) branch distances for the pair step
        return table[self.c1[:, None, :], self.c2[None, :, :]]


def free_distance(diagram: TrellisDiagram, table, depth: int, graph: _PairGraph | None = None):
    """Min accumulated branch distance over error events of length <= depth.

    table[c1, c2] is the squared distance between the label subsets selected
    by coded outputs c1 and c2.  Events start at a common state with distinct
    inputs and end at the first state merge; a one-step merge counts.
    Returns (best, certified): best is None when no event closed within
    depth; certified means no longer event can beat the returned value.
    """
    if graph is None:
        graph = _PairGraph(diagram)
    table = np.asarray(table, dtype=np.float64)
    n = graph.n_states
    step = graph.step_table(table)  # (S, S, Q)

    diag = np.arange(n)
    first = step[diag, diag, :]  # (S, Q) branch pair from a common state
    first_closed = graph.closed[diag, diag, :]
    live = graph.offdiag[None, :] & np.ones((n, 1), dtype=bool)

    best = np.inf
    closed0 = live & first_closed
    if closed0.any():
        best = float(first[closed0].min())

    metric = np.full(n * n, np.inf)
    open0 = live & ~first_closed
    if open0.any():
        tgt = graph.target[diag, diag, :][open0]
        np.minimum.at(metric, tgt, first[open0])
    metric = metric.reshape(n, n)

    settled = False
    for _ in range(depth - 1):
        lo = float(metric.min())
        if not np.isfinite(lo) or lo >= best:
            settled = True
            break
        cand = metric[:, :, None] + step
        cm = cand[graph.closed]
        if cm.size:
            best = min(best, float(cm.min()))
        flat = np.full(n * n, np.inf)
        keep = ~graph.closed & np.isfinite(cand)
        np.minimum.at(flat, graph.target[keep], cand[keep])
        new_metric = np.minimum(metric, flat.reshape(n, n))
        if np.array_equal(new_metric, metric):
            # Bellman fixed point: the closure fold this round already used
            # the final metric, so no longer event can beat best
            settled = True
            break
        metric = new_metric

    open_min = float(metric.min())
    certified = settled or not np.isfinite(open_min) or open_min >= best
    if not np.isfinite(best):
        return None, False
    value = int(best) if float(best).is_integer() else float(best)
    return value, bool(certified)


def _product_single(diagram, table, path_len, graph=None):
    """(shortest event length, min product of nonzero branch distances, truncated)."""
    if graph is None:
        graph = _PairGraph(diagram)
    table = np.asarray(table, dtype=np.float64)
    n = graph.n_states
    step = graph.step_table(table)
    factor = np.where(step > 0.0, step, 1.0)

    diag = np.arange(n)
    first = step[diag, diag, :]
    first_f = np.where(first > 0.0, first, 1.0)
    first_closed = graph.closed[diag, diag, :]
    live = graph.offdiag[None, :] & np.ones((n, 1), dtype=bool)

    closed0 = live & first_closed
    if closed0.any():
        return 1, float(first_f[closed0].min()), False

    prod = np.full(n * n, np.inf)
    open0 = live & ~first_closed
    if open0.any():
        np.minimum.at(prod, graph.target[diag, diag, :][open0], first_f[open0])
    prod = prod.reshape(n, n)

    for length in range(2, path_len + 1):
        if not np.isfinite(prod).any():
            return None, None, False  # every path closed earlier at some length? unreachable
        cand = prod[:, :, None] * factor
        cm = cand[graph.closed & np.isfinite(cand)]
        if cm.size:
            return length, float(cm.min()), False
        flat = np.full(n * n, np.inf)
        keep = ~graph.closed & np.isfinite(cand)
        np.minimum.at(flat, graph.target[keep], cand[keep])
        prod = flat.reshape(n, n)
    return None, None, True


def product_distance(diagram: TrellisDiagram, labeling, path_len: int):
    """Fading figures of merit: shortest error event and its distance product.

    labeling may be a LabelingTable (aggregated over subcarriers) or a single
    branch-distance table.  The product multiplies only nonzero branch
    distances.  Truncation at path_len is reported via a warning.
    """
    if isinstance(labeling, np.ndarray):
        tables = labeling[None, :, :]
    else:
        from .partition import branch_distance_tables

        tables = branch_distance_tables(labeling, diagram.code.input_bits)
    graph = _PairGraph(diagram)
    results = [_product_single(diagram, t, path_len, graph) for t in tables]
    lens = [x[0] for x in results if x[0] is not None]
    if not lens:
        warnings.warn(DepthExceeded(f"no error event closed within {path_len} steps"))
        return {
            "shortest_error_event_len": None,
            "min_product_of_branch_sq_distances": None,
            "truncated": True,
        }
    shortest = min(lens)
    prods = [x[1] for x in results if x[0] == shortest]
    truncated = any(x[2] for x in results)
    if truncated:
        warnings.warn(DepthExceeded(f"some event searches truncated at {path_len} steps"))
    return {
        "shortest_error_event_len": shortest,
        "min_product_of_branch_sq_distances": min(prods),
        "truncated": truncated,
    }


# -- polynomial search ------------------------------------------------------


@dataclass(frozen=True)
class PolySearchResult:
    parity_octal: tuple
    value: object  # min over subcarriers of the free-distance term
    certified: bool


def search_polynomials(r: int, registers: int, branch_tables, depth: int | None = None) -> PolySearchResult:
    """Pick the parity set maximizing the min free-distance term over subcarriers.

    Candidate feedback polynomials have constant and degree-V terms fixed;
    input polynomials have them fixed at zero.  Ties resolve to the
    lexicographically smallest (h1, .., hr, h0) tuple, so iteration order
    settles them.
    """
    if depth is None:
        depth = 3 * registers
    tables = np.asarray(branch_tables, dtype=np.float64)
    if tables.ndim == 2:
        tables = tables[None, :, :]
    mids = range(1 << max(registers - 1, 0))
    in_vals = [m << 1 for m in mids]
    h0_vals = [1 | (m << 1) | (1 << registers) for m in mids]

    best_val = -np.inf
    best_tuple = None
    best_cert = False
    for combo in itertools.product(*([in_vals] * r), h0_vals):
        diagram = build_code(r, registers, [format(v, "o") for v in combo])
        graph = _PairGraph(diagram)
        running = np.inf
        certified = True
        for t in tables:
            val, cert = free_distance(diagram, t, depth, graph)
            certified = certified and cert
            if val is not None:
                running = min(running, float(val))
            if running <= best_val:
                break
        if running > best_val:
            best_val = running
            best_tuple = tuple(format(v, "o") for v in combo)
            best_cert = certified
    value = int(best_val) if np.isfinite(best_val) and float(best_val).is_integer() else best_val
    return PolySearchResult(parity_octal=best_tuple, value=value, certified=best_cert)
