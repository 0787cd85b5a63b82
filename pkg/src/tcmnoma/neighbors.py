"""Dynamic planar nearest-neighbor indices.

Two interchangeable implementations of one semantic contract: ``search``
returns the exact distance from a probe to the nearest indexed point whose
position differs from the probe (self-exclusion), ``EmptyIndex`` if there
is none.

``ExhaustiveIndex`` (default) scans cached coordinate arrays.
``DelaunayIndex`` (opt-in) maintains an incremental Delaunay triangulation
with one infinite vertex and exact integer predicates; member queries look
only at Delaunay neighbors, non-member queries at the conflict-cavity
boundary.  Both compute squared distances in the same float64 arithmetic,
so equal inputs give bit-equal results.
"""

import math

import numpy as np

from .errors import DuplicateInsert, EmptyIndex, MissingRemove

INF_VERTEX = None  # infinite vertex marker in triangles


class ExhaustiveIndex:
    """Exhaustive-scan index over exact point positions."""

    def __init__(self, points=()):
        self._members: dict[complex, None] = {}
        self._dirty = True
        self._re = self._im = self._keys = None
        for p in points:
            self.insert(p)

    def __len__(self):
        return len(self._members)

    def __contains__(self, p):
        return complex(p) in self._members

    @property
    def members(self):
        return list(self._members)

    def insert(self, p) -> None:
        key = complex(p)
        if key in self._members:
            raise DuplicateInsert(f"{key} already indexed")
        self._members[key] = None
        self._dirty = True

    def remove(self, p) -> None:
        key = complex(p)
        if key not in self._members:
            raise MissingRemove(f"{key} not indexed")
        del self._members[key]
        self._dirty = True

    def _arrays(self):
        if self._dirty:
            keys = np.array(list(self._members), dtype=np.complex128)
            self._keys = keys
            self._re = np.ascontiguousarray(keys.real)
            self._im = np.ascontiguousarray(keys.imag)
            self._dirty = False
        return self._keys, self._re, self._im

    def search(self, p) -> float:
        key = complex(p)
        keys, re, im = self._arrays()
        if keys is None or keys.size == 0:
            raise EmptyIndex("no indexed points")
        dre = re - key.real
        dim = im - key.imag
        d2 = dre * dre + dim * dim
        valid = keys != key
        if not valid.any():
            raise EmptyIndex(f"no indexed point differs from probe {key}")
        return math.sqrt(float(d2[valid].min()))

    def search_many(self, probes) -> np.ndarray:
        probes = np.asarray(probes, dtype=np.complex128)
        keys, re, im = self._arrays()
        if keys is None or keys.size == 0:
            raise EmptyIndex("no indexed points")
        dre = re[None, :] - probes.real[:, None]
        dim = im[None, :] - probes.imag[:, None]
        d2 = dre * dre + dim * dim
        d2[keys[None, :] == probes[:, None]] = np.inf
        out = d2.min(axis=1)
        if np.isinf(out).any():
            raise EmptyIndex("a probe has no differing indexed point")
        return np.sqrt(out)


def _ikey(p) -> tuple[int, int]:
    x, y = p.real, p.imag
    xi, yi = int(round(x)), int(round(y))
    if x != xi or y != yi or abs(xi) >= (1 << 20) or abs(yi) >= (1 << 20):
        raise ValueError("DelaunayIndex requires integer coordinates < 2^20")
    return xi, yi


def _orient(a, b, c) -> int:
    # exact sign of the cross product, Python ints
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (v > 0) - (v < 0)


def _incircle(a, b, c, d) -> int:
    # sign > 0 iff d strictly inside the circumcircle of CCW (a, b, c)
    ax, ay = a[0] - d[0], a[1] - d[1]
    bx, by = b[0] - d[0], b[1] - d[1]
    cx, cy = c[0] - d[0], c[1] - d[1]
    a2 = ax * ax + ay * ay
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    v = (
        a2 * (bx * cy - by * cx)
        - b2 * (ax * cy - ay * cx)
        + c2 * (ax * by - ay * bx)
    )
    return (v > 0) - (v < 0)


def _canon(tri):
    # rotate so the lexicographically smallest vertex (INF last) is first
    def rank(v):
        return (1, 0, 0) if v is INF_VERTEX else (0, v[0], v[1])

    rots = [tri, (tri[1], tri[2], tri[0]), (tri[2], tri[0], tri[1])]
    return min(rots, key=lambda t: rank(t[0]))


class DelaunayIndex:
    """Incremental Delaunay triangulation index (integer coordinates).

    Triangles are CCW vertex triples; hull edges close up through a single
    infinite vertex.  Collinear or tiny sets fall back to a plain scan until
    a general-position triangulation exists.
    """

    def __init__(self, points=()):
        self._members: dict[tuple[int, int], None] = {}
        self._tris: set = set()
        self._apex: dict = {}  # directed edge (a, b) -> c for CCW (a, b, c)
        self._adj: dict = {}
        self._degenerate = True
        self._arr_dirty = True
        self._fin_list = []
        self._fin_coords = None
        self._inf_list = []
        self._inf_coords = None
        for p in points:
            self.insert(p)

    # -- bookkeeping ------------------------------------------------------

    def __len__(self):
        return len(self._members)

    def __contains__(self, p):
        return _ikey(complex(p)) in self._members

    @property
    def members(self):
        return [complex(x, y) for x, y in self._members]

    @property
    def triangles(self):
        return set(self._tris)

    def _add_tri(self, tri):
        tri = _canon(tri)
        self._tris.add(tri)
        a, b, c = tri
        self._apex[(a, b)] = c
        self._apex[(b, c)] = a
        self._apex[(c, a)] = b
        for u, v in ((a, b), (b, c), (c, a)):
            self._adj.setdefault(u, set()).add(v)
            self._adj.setdefault(v, set()).add(u)
        self._arr_dirty = True

    def _remove_tri(self, tri):
        tri = _canon(tri)
        self._tris.remove(tri)
        a, b, c = tri
        del self._apex[(a, b)]
        del self._apex[(b, c)]
        del self._apex[(c, a)]
        # adjacency entries survive while any triangle still uses the edge
        for u, v in ((a, b), (b, c), (c, a)):
            if (u, v) not in self._apex and (v, u) not in self._apex:
                self._adj[u].discard(v)
                self._adj[v].discard(u)
        self._arr_dirty = True

    def _tri_arrays(self):
        if self._arr_dirty:
            fin, inf = [], []
            for tri in self._tris:
                if INF_VERTEX in tri:
                    while tri[2] is not INF_VERTEX:
                        tri = (tri[1], tri[2], tri[0])
                    inf.append(tri)
                else:
                    fin.append(tri)
            self._fin_list = fin
            self._inf_list = inf
            self._fin_coords = np.array(
                [[*t[0], *t[1], *t[2]] for t in fin], dtype=np.int64
            ).reshape(-1, 6)
            self._inf_coords = np.array(
                [[*t[0], *t[1]] for t in inf], dtype=np.int64
            ).reshape(-1, 4)
            self._arr_dirty = False
        return self._fin_list, self._fin_coords, self._inf_list, self._inf_coords

    # -- predicates over all triangles, float prefilter + exact fallback --

    def _conflicts(self, key):
        fin, fc, inf, ic = self._tri_arrays()
        out = []
        if fc.shape[0]:
            px, py = key
            ax = (fc[:, 0] - px).astype(np.float64)
            ay = (fc[:, 1] - py).astype(np.float64)
            bx = (fc[:, 2] - px).astype(np.float64)
            by = (fc[:, 3] - py).astype(np.float64)
            cx = (fc[:, 4] - px).astype(np.float64)
            cy = (fc[:, 5] - py).astype(np.float64)
            a2 = ax * ax + ay * ay
            b2 = bx * bx + by * by
            c2 = cx * cx + cy * cy
            m0 = bx * cy - by * cx
            m1 = ax * cy - ay * cx
            m2 = ax * by - ay * bx
            det = a2 * m0 - b2 * m1 + c2 * m2
            perm = (
                a2 * (np.abs(bx * cy) + np.abs(by * cx))
                + b2 * (np.abs(ax * cy) + np.abs(ay * cx))
                + c2 * (np.abs(ax * by) + np.abs(ay * bx))
            )
            bound = 1e-13 * perm
            sure_in = det > bound
            unsure = np.abs(det) <= bound
            for idx in np.flatnonzero(sure_in):
                out.append(fin[idx])
            for idx in np.flatnonzero(unsure):
                t = fin[idx]
                if _incircle(t[0], t[1], t[2], key) > 0:
                    out.append(t)
        if ic.shape[0]:
            px, py = key
            ux, uy = ic[:, 0], ic[:, 1]
            vx, vy = ic[:, 2], ic[:, 3]
            cross = (vx - ux) * (py - uy) - (vy - uy) * (px - ux)
            hit = cross > 0
            on_line = cross == 0
            if on_line.any():
                d1 = (px - ux) * (vx - ux) + (py - uy) * (vy - uy)
                d2 = (px - vx) * (ux - vx) + (py - vy) * (uy - vy)
                hit |= on_line & (d1 > 0) & (d2 > 0)
            for idx in np.flatnonzero(hit):
                u, v = inf[idx][0], inf[idx][1]
                out.append((u, v, INF_VERTEX))
        return out

    # -- construction modes ----------------------------------------------

    def _try_triangulate(self):
        """Leave degenerate mode once a non-collinear triple exists."""
        keys = sorted(self._members)
        if len(keys) < 3:
            return
        base = None
        for i in range(2, len(keys)):
            if _orient(keys[0], keys[1], keys[i]) != 0:
                base = i
                break
        if base is None:
            return
        self._tris.clear()
        self._apex.clear()
        self._adj.clear()
        a, b, c = keys[0], keys[1], keys[base]
        if _orient(a, b, c) < 0:
            b, c = c, b
        self._degenerate = False
        for tri in ((a, b, c), (b, a, INF_VERTEX), (c, b, INF_VERTEX), (a, c, INF_VERTEX)):
            self._add_tri(tri)
        for i, k in enumerate(keys):
            if i not in (0, 1, base):
                self._insert_triangulated(k)

    def _rebuild(self):
        self._degenerate = True
        self._tris.clear()
        self._apex.clear()
        self._adj.clear()
        self._arr_dirty = True
        self._try_triangulate()

    def _insert_triangulated(self, key):
        conflicts = self._conflicts(key)
        if not conflicts:
            raise RuntimeError("empty conflict region; triangulation invariant broken")
        boundary = []
        cavity_edges = set()
        for a, b, c in conflicts:
            cavity_edges.update(((a, b), (b, c), (c, a)))
        for a, b in cavity_edges:
            if (b, a) not in cavity_edges:
                boundary.append((a, b))
        for tri in conflicts:
            self._remove_tri(tri)
        for a, b in boundary:
            self._add_tri((a, b, key))

    # -- public mutations --------------------------------------------------

    def insert(self, p) -> None:
        key = _ikey(complex(p))
        if key in self._members:
            raise DuplicateInsert(f"{complex(p)} already indexed")
        self._members[key] = None
        if self._degenerate:
            self._try_triangulate()
        else:
            self._insert_triangulated(key)

    def remove(self, p) -> None:
        key = _ikey(complex(p))
        if key not in self._members:
            raise MissingRemove(f"{complex(p)} not indexed")
        del self._members[key]
        if self._degenerate:
            return
        if len(self._members) < 3:
            self._rebuild()
            return
        if INF_VERTEX in self._adj.get(key, ()):  # hull vertex
            self._rebuild()
            return
        ring = self._link_ring(key)
        for u in ring:
            self._remove_tri((key, u, self._ring_next(ring, u)))
        self._fill_ring(ring)

    def _link_ring(self, key):
        nbrs = [v for v in self._adj[key] if v is not INF_VERTEX]
        start = min(nbrs)
        ring = [start]
        cur = start
        while True:
            nxt = self._apex[(key, cur)]
            if nxt == start:
                break
            ring.append(nxt)
            cur = nxt
        return ring

    @staticmethod
    def _ring_next(ring, u):
        return ring[(ring.index(u) + 1) % len(ring)]

    def _fill_ring(self, ring):
        ring = list(ring)
        while len(ring) > 3:
            m = len(ring)
            clipped = False
            for i in range(m):
                a, b, c = ring[i - 1], ring[i], ring[(i + 1) % m]
                if _orient(a, b, c) <= 0:
                    continue
                others = [v for v in ring if v not in (a, b, c)]
                if any(_incircle(a, b, c, v) > 0 for v in others):
                    continue
                self._add_tri((a, b, c))
                ring.pop(i)
                clipped = True
                break
            if not clipped:  # cocircular stalemate: take first convex ear
                for i in range(m):
                    a, b, c = ring[i - 1], ring[i], ring[(i + 1) % m]
                    if _orient(a, b, c) > 0:
                        self._add_tri((a, b, c))
                        ring.pop(i)
                        break
        self._add_tri(tuple(ring))

    # -- queries -----------------------------------------------------------

    def _scan_min(self, key):
        best = None
        for x, y in self._members:
            if (x, y) == key:
                continue
            dx = float(x - key[0])
            dy = float(y - key[1])
            d2 = dx * dx + dy * dy
            if best is None or d2 < best:
                best = d2
        if best is None:
            raise EmptyIndex(f"no indexed point differs from probe {key}")
        return math.sqrt(best)

    def _min_over(self, key, candidates):
        best = None
        for x, y in candidates:
            dx = float(x - key[0])
            dy = float(y - key[1])
            d2 = dx * dx + dy * dy
            if best is None or d2 < best:
                best = d2
        if best is None:
            raise EmptyIndex(f"no neighbor candidates for probe {key}")
        return math.sqrt(best)

    def search(self, p) -> float:
        key = _ikey(complex(p))
        if not self._members or (len(self._members) == 1 and key in self._members):
            raise EmptyIndex("no indexed point differs from probe")
        if self._degenerate:
            return self._scan_min(key)
        if key in self._members:
            cands = [v for v in self._adj[key] if v is not INF_VERTEX]
            return self._min_over(key, cands)
        cands = set()
        for a, b, c in self._conflicts(key):
            cands.update(v for v in (a, b, c) if v is not INF_VERTEX)
        if not cands:  # probe coincides with no conflict region (shouldn't happen)
            return self._scan_min(key)
        return self._min_over(key, cands)

    def search_many(self, probes) -> np.ndarray:
        return np.array([self.search(p) for p in np.asarray(probes, dtype=np.complex128)])


INDEX_KINDS = {"exhaustive": ExhaustiveIndex, "delaunay": DelaunayIndex}


def make_index(kind: str = "exhaustive", points=()):
    try:
        cls = INDEX_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown index kind {kind!r}") from None
    return cls(points)
