"""Contracting square-hexagon lattices, their perfect matchings and height fields.

Coordinates
-----------
Every vertex is stored as ``(k, X)`` where ``k ≥ 1`` is the row (row ``k`` sits
at height ``k/2``) and ``X`` is *twice* the horizontal coordinate, so that the
half-integer positions of the lattice become plain integers.  Odd rows carry
white vertices and even rows black vertices; row 1 is the bottom boundary with
whites at ``x = Ω_i - 1/2``.

Between a white row ``2s-1`` and the black row ``2s`` above it the edges are
vertical when ``c_s = 1`` and a pair of diagonals (square faces) when
``c_s = 0``; the NE-SW diagonal of such a pair carries ``y_s``.  Between a black
row ``2s`` and the white row ``2s+1`` there are always two diagonals, and the
NE-SW one carries ``x_s``.
"""

from __future__ import annotations

import math
from collections import deque
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .partitions import Signature, is_horizontal_strip, is_vertical_strip
from .schur import WeightModel

__all__ = [
    "LatticeSpec",
    "Lattice",
    "Edge",
    "MatchingRecord",
    "HeightField",
    "DualGraph",
    "boundary_signature",
    "build_lattice",
    "matching_to_signatures",
    "signatures_to_matching",
    "enumerate_matchings",
    "chain_is_valid",
    "height_field",
    "limit_height",
    "staircase_omega",
]

VERTICAL, DIAGONAL_NE, DIAGONAL_NW = "v", "ne", "nw"


def staircase_omega(m: int, N: int) -> tuple[int, ...]:
    """Boundary positions keeping one vertex out of every ``m``."""
    return tuple(1 + m * i for i in range(N))


def boundary_signature(Omega: Sequence[int]) -> Signature:
    """``ω = (Ω_N - N, ..., Ω_1 - 1)``."""
    N = len(Omega)
    return Signature(Omega[N - 1 - j] - (N - j) for j in range(N))


@dataclass(frozen=True)
class LatticeSpec:
    """Boundary positions ``Ω``, row pattern ``c`` and periodic weights."""

    N: int
    Omega: tuple[int, ...]
    c: tuple[int, ...]
    model: WeightModel

    def __post_init__(self) -> None:
        object.__setattr__(self, "Omega", tuple(int(v) for v in self.Omega))
        object.__setattr__(self, "c", tuple(int(v) for v in self.c))
        if self.N < 1:
            raise ValueError("N must be positive")
        if len(self.Omega) != self.N:
            raise ValueError(f"Omega must have N={self.N} entries")
        if self.Omega[0] != 1:
            raise ValueError("Omega must start at 1")
        if any(b <= a for a, b in zip(self.Omega, self.Omega[1:])):
            raise ValueError("Omega must be strictly increasing")
        if len(self.c) != self.N or any(v not in (0, 1) for v in self.c):
            raise ValueError("c must be a 0/1 vector of length N")
        if self.c != self.model.c_pattern(self.N):
            raise ValueError(
                f"row pattern {self.c} disagrees with the square-row residues {self.model.I2} "
                f"of the period-{self.model.n} weight model"
            )

    @classmethod
    def build(
        cls,
        Omega: Sequence[int],
        c: Sequence[int] | None = None,
        x: Sequence[float] | None = None,
        y: Mapping[int, float] | None = None,
        m: int | None = None,
    ) -> "LatticeSpec":
        """Convenience constructor.

        Without explicit weights every row gets its own residue (``n = N``) with
        unit weights, and rows with ``c_i = 0`` get ``y_i = 1``.
        """
        N = len(Omega)
        if c is None:
            if y is None:
                c = (1,) * N
            else:
                n = len(x) if x is not None else N
                c = tuple(0 if ((t - 1) % n + 1) in y else 1 for t in range(1, N + 1))
        c = tuple(c)
        if x is None:
            x = (1.0,) * N
        n = len(x)
        if y is None:
            y = {((t - 1) % n + 1): 1.0 for t in range(1, N + 1) if c[t - 1] == 0}
        return cls(N, tuple(Omega), c, WeightModel(n, tuple(x), dict(y), m))

    @property
    def omega(self) -> Signature:
        return boundary_signature(self.Omega)

    def to_dict(self) -> dict:
        return {"N": self.N, "Omega": list(self.Omega), "c": list(self.c), **self.model.to_dict()}


@dataclass(frozen=True)
class Edge:
    white: int
    black: int
    weight: float
    kind: str
    #: ``"x"``, ``"y"`` or ``"1"``: which weight family the edge carries
    family: str
    #: level ``s`` whose weight the edge carries (``x_s`` or ``y_s``)
    level: int


@dataclass(frozen=True)
class MatchingRecord:
    """A perfect matching together with its interlacing signature chain."""

    edges: frozenset[int]
    signatures: tuple[Signature, ...]
    weight: float

    def to_json(self, lattice: "Lattice") -> dict:
        pairs = []
        for e in sorted(self.edges):
            edge = lattice.edges[e]
            w, b = lattice.whites[edge.white], lattice.blacks[edge.black]
            pairs.append([[w[0], w[1] / 2], [b[0], b[1] / 2]])
        return {"edges": pairs, "signatures": [list(s) for s in self.signatures], "weight": self.weight}


@dataclass
class DualGraph:
    """Faces of the whole-plane lattice around the vertices of a finite region."""

    #: face centroids as exact ``(x, y)`` pairs in lattice units
    centroids: list[tuple[Fraction, Fraction]]
    #: ``(left, right, kind, lattice_edge_or_-1)`` per dual edge; ``left`` is to
    #: the left of the white→black orientation of the crossed edge
    dual_edges: list[tuple[int, int, str, int]]
    #: for each region vertex, indices of the incident dual edges
    vertex_cycles: list[list[int]]
    boundary: np.ndarray
    root: int
    #: BFS order ``(dual_edge, from_face, to_face)`` reaching every face from the root
    tree: list[tuple[int, int, int]] = field(default_factory=list)


@dataclass(frozen=True)
class HeightField:
    values: np.ndarray
    dual: DualGraph

    def as_rows(self) -> list[tuple[float, float, int]]:
        return [(float(cx), float(cy), int(h)) for (cx, cy), h in zip(self.dual.centroids, self.values)]


class Lattice:
    """The realized finite graph ``R(Ω, c)``."""

    def __init__(self, spec: LatticeSpec):
        self.spec = spec
        self.N = spec.N
        self.rows: dict[int, list[int]] = {}
        self._build_rows()
        self.whites: list[tuple[int, int]] = [(k, X) for k in sorted(self.rows) if k % 2 == 1 for X in self.rows[k]]
        self.blacks: list[tuple[int, int]] = [(k, X) for k in sorted(self.rows) if k % 2 == 0 for X in self.rows[k]]
        self.white_index = {v: i for i, v in enumerate(self.whites)}
        self.black_index = {v: i for i, v in enumerate(self.blacks)}
        self.edges: list[Edge] = []
        self.edge_index: dict[tuple[int, int], int] = {}
        self._build_edges()
        self.white_edges: list[list[int]] = [[] for _ in self.whites]
        self.black_edges: list[list[int]] = [[] for _ in self.blacks]
        for idx, e in enumerate(self.edges):
            self.white_edges[e.white].append(idx)
            self.black_edges[e.black].append(idx)

    # -- construction -------------------------------------------------------
    def _build_rows(self) -> None:
        spec = self.spec
        self.rows[1] = [2 * o - 1 for o in spec.Omega]
        whole_row = list(range(1, 2 * spec.Omega[-1], 2))  # the whole-plane bottom row span
        del whole_row
        for s in range(1, spec.N + 1):
            whites = self.rows[2 * s - 1]
            if not whites:
                self.rows[2 * s] = []
                self.rows[2 * s + 1] = []
                continue
            lo, hi = whites[0], whites[-1]
            if spec.c[s - 1] == 1:
                blacks = list(range(lo, hi + 1, 2))
            else:
                blacks = list(range(lo - 1, hi + 2, 2))
            self.rows[2 * s] = blacks
            self.rows[2 * s + 1] = [b + 1 for b in blacks[:-1]]
        self.num_rows = max(k for k, v in self.rows.items() if v)

    def _add_edge(self, w: tuple[int, int], b: tuple[int, int], weight: float, kind: str, family: str, level: int) -> None:
        if w in self.white_index and b in self.black_index:
            wi, bi = self.white_index[w], self.black_index[b]
            self.edge_index[(wi, bi)] = len(self.edges)
            self.edges.append(Edge(wi, bi, weight, kind, family, level))

    def _build_edges(self) -> None:
        model = self.spec.model
        for s in range(1, self.N + 1):
            ys = model.y_at(s)
            for a in self.rows.get(2 * s - 1, []):
                if self.spec.c[s - 1] == 1:
                    self._add_edge((2 * s - 1, a), (2 * s, a), 1.0, VERTICAL, "1", s)
                else:
                    self._add_edge((2 * s - 1, a), (2 * s, a - 1), 1.0, DIAGONAL_NW, "1", s)
                    self._add_edge((2 * s - 1, a), (2 * s, a + 1), float(ys), DIAGONAL_NE, "y", s)
            xs = model.x_at(s)
            for b in self.rows.get(2 * s, []):
                self._add_edge((2 * s + 1, b - 1), (2 * s, b), 1.0, DIAGONAL_NW, "1", s)
                self._add_edge((2 * s + 1, b + 1), (2 * s, b), float(xs), DIAGONAL_NE, "x", s)

    # -- basic queries ------------------------------------------------------
    @property
    def num_vertices(self) -> int:
        return len(self.whites) + len(self.blacks)

    def row_vertices(self, k: int) -> list[tuple[int, int]]:
        return [(k, X) for X in self.rows.get(k, [])]

    def partner_map(self, matching: Iterable[int]) -> tuple[dict[int, int], dict[int, int]]:
        w2b: dict[int, int] = {}
        b2w: dict[int, int] = {}
        for e in matching:
            edge = self.edges[e]
            if edge.white in w2b or edge.black in b2w:
                raise ValueError("not a matching: a vertex is covered twice")
            w2b[edge.white] = edge.black
            b2w[edge.black] = edge.white
        return w2b, b2w

    def is_perfect(self, matching: Iterable[int]) -> bool:
        try:
            w2b, b2w = self.partner_map(matching)
        except ValueError:
            return False
        return len(w2b) == len(self.whites) and len(b2w) == len(self.blacks)

    def matching_weight(self, matching: Iterable[int]) -> float:
        return math.prod(self.edges[e].weight for e in matching)

    @cached_property
    def dual(self) -> DualGraph:
        return _build_dual(self)


def build_lattice(spec: LatticeSpec) -> Lattice:
    """Realize the finite lattice for ``spec``."""
    lattice = Lattice(spec)
    if len(lattice.whites) != len(lattice.blacks):  # pragma: no cover - construction invariant
        raise ValueError("white and black vertex counts differ")
    return lattice


# ---------------------------------------------------------------------------
# matchings <-> signatures


def _row_labels(lattice: Lattice, w2b: dict[int, int], b2w: dict[int, int], k: int) -> list[bool]:
    """``True`` for V-vertices of row ``k``."""
    labels = []
    for v in lattice.row_vertices(k):
        if k % 2 == 1:
            partner = lattice.blacks[w2b[lattice.white_index[v]]]
            labels.append(partner[0] == k + 1)
        else:
            partner = lattice.whites[b2w[lattice.black_index[v]]]
            labels.append(partner[0] == k - 1)
    return labels


def _labels_to_signature(labels: Sequence[bool], offset: int = 0) -> Signature:
    parts = []
    lam = offset
    for is_v in labels:
        if is_v:
            parts.append(lam)
        else:
            lam += 1
    return Signature(reversed(parts))


def matching_to_signatures(lattice: Lattice, matching: Iterable[int]) -> tuple[Signature, ...]:
    """Signature chain ``(μ^(N), ν^(N), μ^(N-1), ..., ν^(1), μ^(0))`` of a perfect matching."""
    matching = list(matching)
    if not lattice.is_perfect(matching):
        raise ValueError("matching is not perfect")
    w2b, b2w = lattice.partner_map(matching)
    seq: list[Signature] = []
    for k in range(1, 2 * lattice.N + 2):
        if k == 1:
            # removed boundary positions count as Λ-vertices
            kept = set(lattice.spec.Omega)
            labels = [p in kept for p in range(1, lattice.spec.Omega[-1] + 1)]
        else:
            labels = _row_labels(lattice, w2b, b2w, k)
        seq.append(_labels_to_signature(labels))
    return tuple(seq)


def chain_is_valid(seq: Sequence[Sequence[int]], spec: LatticeSpec) -> int | None:
    """Return ``None`` for a valid chain, otherwise the first offending position."""
    N = spec.N
    if len(seq) != 2 * N + 1:
        return 0
    if tuple(seq[0]) != tuple(spec.omega):
        return 0
    for k in range(N):
        mu, nu, nxt = seq[2 * k], seq[2 * k + 1], seq[2 * k + 2]
        if len(mu) != N - k or len(nu) != N - k or len(nxt) != N - k - 1:
            return 2 * k
        if any(v < 0 for v in (*mu, *nu, *nxt)):
            return 2 * k
        if spec.c[k] == 1:
            if tuple(nu) != tuple(mu):
                return 2 * k + 1
        elif not is_vertical_strip(mu, nu):
            return 2 * k + 1
        if not is_horizontal_strip(nxt, nu):
            return 2 * k + 2
    return None


def signatures_to_matching(lattice: Lattice, seq: Sequence[Sequence[int]]) -> frozenset[int]:
    """Inverse of :func:`matching_to_signatures`."""
    bad = chain_is_valid(seq, lattice.spec)
    if bad is not None:
        raise ValueError(f"signature chain violates the interlacing constraints at position {bad}")
    up: dict[int, set[int]] = {}
    for k in range(1, 2 * lattice.N + 2):
        verts = lattice.rows.get(k, [])
        sig = seq[k - 1]
        p = len(sig)
        if k == 1:
            up[k] = set(verts)
            continue
        idx = {sig[j - 1] + p - j for j in range(1, p + 1)}
        if idx and max(idx) >= len(verts):
            raise ValueError(f"signature at position {k - 1} does not fit its row")
        v_marked = {verts[i] for i in idx}
        # V: whites go up, blacks go down
        up[k] = v_marked if k % 2 == 1 else set(verts) - v_marked
    edges: set[int] = set()
    for k in range(1, 2 * lattice.N + 1):
        lower = sorted(up[k])
        upper_down = sorted(set(lattice.rows.get(k + 1, [])) - up[k + 1])
        used: set[int] = set()
        avail = set(upper_down)
        for a in lower:
            partner = None
            for b in (a - 1, a, a + 1):
                if b in avail and b not in used and _edge_between(lattice, k, a, b) is not None:
                    partner = b
                    break
            if partner is None:
                raise ValueError(f"no consistent matching between rows {k} and {k + 1}")
            used.add(partner)
            edges.add(_edge_between(lattice, k, a, partner))
        if used != avail:
            raise ValueError(f"unmatched vertices between rows {k} and {k + 1}")
    return frozenset(edges)


def _edge_between(lattice: Lattice, k: int, a: int, b: int) -> int | None:
    lo, hi = (k, a), (k + 1, b)
    if k % 2 == 1:
        w, bl = lo, hi
    else:
        w, bl = hi, lo
    wi, bi = lattice.white_index.get(w), lattice.black_index.get(bl)
    if wi is None or bi is None:
        return None
    return lattice.edge_index.get((wi, bi))


# ---------------------------------------------------------------------------
# brute force enumeration


def enumerate_matchings(lattice: Lattice, max_vertices: int = 60) -> list[MatchingRecord]:
    """All perfect matchings of a small lattice (oracle)."""
    if lattice.num_vertices > max_vertices:
        raise ValueError(f"lattice has {lattice.num_vertices} vertices; enumeration guard is {max_vertices}")
    order = sorted(
        [("w", i, lattice.whites[i]) for i in range(len(lattice.whites))]
        + [("b", i, lattice.blacks[i]) for i in range(len(lattice.blacks))],
        key=lambda t: (t[2][0], t[2][1]),
    )
    w_used = [False] * len(lattice.whites)
    b_used = [False] * len(lattice.blacks)
    chosen: list[int] = []
    found: list[frozenset[int]] = []

    def first_free(start: int) -> int:
        for pos in range(start, len(order)):
            color, i, _ = order[pos]
            if not (w_used[i] if color == "w" else b_used[i]):
                return pos
        return len(order)

    def rec(start: int) -> None:
        pos = first_free(start)
        if pos == len(order):
            found.append(frozenset(chosen))
            return
        color, i, _ = order[pos]
        incident = lattice.white_edges[i] if color == "w" else lattice.black_edges[i]
        for e in incident:
            edge = lattice.edges[e]
            if w_used[edge.white] or b_used[edge.black]:
                continue
            w_used[edge.white] = b_used[edge.black] = True
            chosen.append(e)
            rec(pos + 1)
            chosen.pop()
            w_used[edge.white] = b_used[edge.black] = False

    rec(0)
    return [MatchingRecord(m, matching_to_signatures(lattice, m), lattice.matching_weight(m)) for m in found]


# ---------------------------------------------------------------------------
# height function


def _build_dual(lattice: Lattice) -> DualGraph:
    spec = lattice.spec
    N = spec.N
    k_lo, k_hi = -3, 2 * N + 4
    x_lo, x_hi = -10, 2 * spec.Omega[-1] + 10

    def c_of(s: int) -> int:
        return spec.c[s - 1] if 1 <= s <= N else 1

    parity = {1: 1}
    for k in range(2, k_hi + 1):
        if k % 2 == 0:
            parity[k] = parity[k - 1] if c_of(k // 2) == 1 else 1 - parity[k - 1]
        else:
            parity[k] = 1 - parity[k - 1]
    for k in range(0, k_lo - 1, -1):
        if k % 2 == 0:
            parity[k] = 1 - parity[k + 1]
        else:
            s = (k + 1) // 2
            parity[k] = parity[k + 1] if c_of(s) == 1 else 1 - parity[k + 1]
    verts = {
        (k, X)
        for k in range(k_lo, k_hi + 1)
        for X in range(x_lo, x_hi + 1)
        if X % 2 == parity[k]
    }
    adj: dict[tuple[int, int], list[tuple[int, int]]] = {v: [] for v in verts}
    kind_of: dict[frozenset, str] = {}

    def link(u: tuple[int, int], v: tuple[int, int], kind: str) -> None:
        if u in verts and v in verts:
            adj[u].append(v)
            adj[v].append(u)
            kind_of[frozenset((u, v))] = kind

    for k, X in verts:
        if k % 2 == 1:  # white, edges up to the black row k+1
            s = (k + 1) // 2
            if c_of(s) == 1:
                link((k, X), (k + 1, X), VERTICAL)
            else:
                link((k, X), (k + 1, X - 1), DIAGONAL_NW)
                link((k, X), (k + 1, X + 1), DIAGONAL_NE)
        else:  # black, edges up to the white row k+1
            link((k, X), (k + 1, X - 1), DIAGONAL_NW)
            link((k, X), (k + 1, X + 1), DIAGONAL_NE)

    def angle(u: tuple[int, int], v: tuple[int, int]) -> float:
        return math.atan2(v[0] - u[0], v[1] - u[1])  # (dy, dx) in half units

    for v in adj:
        adj[v].sort(key=lambda w: angle(v, w))
    pos_in = {v: {w: i for i, w in enumerate(adj[v])} for v in adj}

    face_of: dict[tuple[tuple[int, int], tuple[int, int]], int] = {}
    faces: list[list[tuple[int, int]]] = []
    for u in adj:
        for v in adj[u]:
            if (u, v) in face_of:
                continue
            fid = len(faces)
            cyc = []
            a, b = u, v
            while (a, b) not in face_of:
                face_of[(a, b)] = fid
                cyc.append(a)
                nbrs = adj[b]
                # neighbour of b immediately clockwise from a: traces the face on the left
                j = (pos_in[b][a] - 1) % len(nbrs)
                a, b = b, nbrs[j]
            faces.append(cyc)

    region = {v for v in lattice.whites} | {v for v in lattice.blacks}
    on_patch_edge = {v for v in verts if v[0] in (k_lo, k_hi) or v[1] in (x_lo, x_lo + 1, x_hi - 1, x_hi)}
    used_faces: dict[int, int] = {}
    dual_edges: list[tuple[int, int, str, int]] = []
    vertex_cycles: dict[tuple[int, int], list[int]] = {v: [] for v in region}

    def local(fid: int) -> int:
        if fid not in used_faces:
            if any(v in on_patch_edge for v in faces[fid]) or len(faces[fid]) > 6:
                raise RuntimeError("dual patch too small around the region")
            used_faces[fid] = len(used_faces)
        return used_faces[fid]

    seen_edges = set()
    for v in sorted(region):
        for w in adj[v]:
            key = frozenset((v, w))
            if key in seen_edges:
                continue
            seen_edges.add(key)
            white, black = (v, w) if v[0] % 2 == 1 else (w, v)
            left = local(face_of[(white, black)])
            right = local(face_of[(black, white)])
            e_idx = -1
            if white in lattice.white_index and black in lattice.black_index:
                e_idx = lattice.edge_index.get((lattice.white_index[white], lattice.black_index[black]), -1)
            d = len(dual_edges)
            dual_edges.append((left, right, kind_of[key], e_idx))
            for u in (white, black):
                if u in vertex_cycles:
                    vertex_cycles[u].append(d)

    inv = {loc: fid for fid, loc in used_faces.items()}
    centroids = []
    boundary = np.zeros(len(inv), dtype=bool)
    for loc in range(len(inv)):
        cyc = faces[inv[loc]]
        cx = sum(Fraction(X, 2) for _, X in cyc) / len(cyc)
        cy = sum(Fraction(k, 2) for k, _ in cyc) / len(cyc)
        centroids.append((cx, cy))
        boundary[loc] = any(u not in region for u in cyc)
    # pin the face order: (row, then column) lexicographic
    order = sorted(range(len(centroids)), key=lambda i: (centroids[i][1], centroids[i][0]))
    remap = {old: new for new, old in enumerate(order)}
    centroids = [centroids[i] for i in order]
    boundary = boundary[order]
    dual_edges = [(remap[a], remap[b], kind, e) for a, b, kind, e in dual_edges]
    root = 0

    adjacency: list[list[tuple[int, int]]] = [[] for _ in centroids]
    for d, (a, b, _, _) in enumerate(dual_edges):
        adjacency[a].append((d, b))
        adjacency[b].append((d, a))
    tree = []
    seen = {root}
    queue = deque([root])
    while queue:
        f = queue.popleft()
        for d, g in adjacency[f]:
            if g not in seen:
                seen.add(g)
                tree.append((d, f, g))
                queue.append(g)
    if len(seen) != len(centroids):  # pragma: no cover - construction invariant
        raise RuntimeError("dual graph is disconnected")
    cycles = [vertex_cycles[v] for v in lattice.whites] + [vertex_cycles[v] for v in lattice.blacks]
    return DualGraph(centroids, dual_edges, cycles, boundary, root, tree)


def _increment(kind: str, present: bool) -> int:
    """Height change from the right face to the left face of a white→black edge."""
    if kind == VERTICAL:
        return -2 if present else 2
    return -3 if present else 1


def height_field(lattice: Lattice, matching: Iterable[int], check: bool = True) -> HeightField:
    """Height function on the dual vertices, anchored at the smallest face."""
    present = set(matching)
    if not lattice.is_perfect(present):
        raise ValueError("matching is not perfect")
    dual = lattice.dual
    h = np.zeros(len(dual.centroids), dtype=np.int64)
    for d, f, g in dual.tree:
        left, right, kind, e = dual.dual_edges[d]
        inc = _increment(kind, e in present)
        h[g] = h[f] + (inc if g == left else -inc)
    if check:
        for left, right, kind, e in dual.dual_edges:
            if h[left] - h[right] != _increment(kind, e in present):
                raise RuntimeError("height increments are inconsistent")
    return HeightField(h, dual)


def face_increment_sums(lattice: Lattice, matching: Iterable[int]) -> list[int]:
    """Sum of height increments around each region vertex (all zero for a perfect matching)."""
    present = set(matching)
    dual = lattice.dual
    sums = []
    n_white = len(lattice.whites)
    for idx, cyc in enumerate(dual.vertex_cycles):
        is_white = idx < n_white
        total = 0
        for d in cyc:
            _, _, kind, e = dual.dual_edges[d]
            inc = _increment(kind, e in present)
            # going counterclockwise around a white vertex crosses each edge
            # from its right face to its left face; around a black vertex the
            # orientation is reversed
            total += inc if is_white else -inc
        sums.append(total)
    return sums


def limit_height(chi: float, kappa: float, model: WeightModel) -> float:
    """Limit of ``h([χN], [κN]) / N`` for a uniform boundary."""
    from .asymptotics import cdf

    if not 0 <= kappa < 1:
        raise ValueError("kappa must lie in [0, 1)")
    u = (chi - kappa * model.r / (2 * model.n)) / (1 - kappa)
    return 2 * (2 * (1 - kappa) * cdf(u, kappa, model) - 2 * chi + 2 * kappa)
