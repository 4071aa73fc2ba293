"""Kasteleyn matrices for contracting lattices, exact sampling, and the torus curve.

On the finite lattice the sign rule is the torus one: every NE-SW edge of a
``x``-row is multiplied by ``-1``.  A square face (two rows with ``c = 0``)
then carries exactly one minus sign and a hexagonal face two, which is the
Kasteleyn condition for a planar bipartite graph.  The condition is verified
face by face when the matrix is built; if it ever fails, a gauge repair over
GF(2) flips the signs of a set of edges so that every bounded face is
Kasteleyn-flat.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .lattice import Lattice, MatchingRecord, matching_to_signatures
from .schur import WeightModel

__all__ = [
    "KasteleynMatrix",
    "SpectralCurve",
    "kasteleyn_matrix",
    "torus_curve",
    "torus_kasteleyn",
    "torus_determinant",
    "edge_inclusion_probability",
    "inclusion_probabilities",
    "determinantal_sample",
    "determinantal_samples",
    "DeterminantalSampler",
]


@dataclass(frozen=True)
class KasteleynMatrix:
    """Signed weighted adjacency matrix, rows indexed by whites, columns by blacks."""

    matrix: np.ndarray
    signs: np.ndarray  # per lattice edge, ±1
    lattice: Lattice

    def log_abs_det(self) -> float:
        if self.matrix.shape[0] == 0:
            return 0.0
        sign, logdet = np.linalg.slogdet(self.matrix)
        if sign == 0:
            return -math.inf
        return float(logdet)

    def abs_det(self) -> float:
        return math.exp(self.log_abs_det())


def _face_sign_defects(lattice: Lattice, signs: np.ndarray) -> list[tuple[list[int], int]]:
    """Bounded faces of the region whose sign product violates the Kasteleyn rule.

    Returns ``(edges, parity)`` pairs where parity is 1 when the face is bad.
    """
    dual = lattice.dual
    # faces all of whose boundary edges belong to the region
    edges_of_face: dict[int, list[int]] = {}
    boundary_face = set()
    for left, right, _, e in dual.dual_edges:
        for f in (left, right):
            if e < 0:
                boundary_face.add(f)
            else:
                edges_of_face.setdefault(f, []).append(e)
    out = []
    for f, edges in edges_of_face.items():
        if f in boundary_face or dual.boundary[f]:
            continue
        deg = len(edges)
        negatives = sum(1 for e in edges if signs[e] < 0)
        # for a face of degree 2k the product of signs must be (-1)^(k+1)
        want = (deg // 2 + 1) % 2
        out.append((edges, (negatives - want) % 2))
    return out


def _gauge_repair(lattice: Lattice, signs: np.ndarray) -> np.ndarray:
    """Flip edge signs so that every interior face satisfies the rule (GF(2) solve)."""
    faces = _face_sign_defects(lattice, signs)
    bad = [i for i, (_, p) in enumerate(faces) if p]
    if not bad:
        return signs
    n_edges = len(lattice.edges)
    rows = []
    rhs = []
    for edges, parity in faces:
        row = np.zeros(n_edges, dtype=np.uint8)
        row[edges] = 1
        rows.append(row)
        rhs.append(parity)
    A = np.array(rows, dtype=np.uint8)
    b = np.array(rhs, dtype=np.uint8)
    # Gaussian elimination over GF(2)
    A = A.copy()
    b = b.copy()
    pivots = []
    r = 0
    for col in range(n_edges):
        hit = np.nonzero(A[r:, col])[0]
        if len(hit) == 0:
            continue
        p = r + hit[0]
        A[[r, p]] = A[[p, r]]
        b[[r, p]] = b[[p, r]]
        for i in np.nonzero(A[:, col])[0]:
            if i != r:
                A[i] ^= A[r]
                b[i] ^= b[r]
        pivots.append(col)
        r += 1
        if r == A.shape[0]:
            break
    if np.any(b[r:]):  # pragma: no cover - faces are independent in a planar graph
        raise RuntimeError("Kasteleyn gauge repair failed")
    flip = np.zeros(n_edges, dtype=np.uint8)
    for i, col in enumerate(pivots):
        flip[col] = b[i]
    return np.where(flip == 1, -signs, signs)


def kasteleyn_matrix(lattice: Lattice, inject_sign_error: int | None = None, repair: bool = True) -> KasteleynMatrix:
    """Kasteleyn matrix of the finite lattice.

    ``inject_sign_error`` flips the sign of one edge after the gauge has been
    fixed; it exists for negative-control tests of the ``|det K| = Z`` check.
    """
    n_w, n_b = len(lattice.whites), len(lattice.blacks)
    if n_w != n_b:
        raise ValueError(f"{n_w} white vs {n_b} black vertices: no perfect matching exists")
    signs = np.array([-1.0 if e.family == "x" else 1.0 for e in lattice.edges])
    if repair and any(p for _, p in _face_sign_defects(lattice, signs)):
        signs = _gauge_repair(lattice, signs)
    if inject_sign_error is not None:
        signs = signs.copy()
        signs[inject_sign_error] *= -1
    K = np.zeros((n_w, n_b))
    for idx, e in enumerate(lattice.edges):
        K[e.white, e.black] = signs[idx] * e.weight
    return KasteleynMatrix(K, signs, lattice)


def edge_inclusion_probability(K: KasteleynMatrix, inverse: np.ndarray, edge: int) -> float:
    """``P(e ∈ M) = |K_{w,b} (K^{-1})_{b,w}|``, clamped to ``[0, 1]``."""
    e = K.lattice.edges[edge]
    p = abs(K.matrix[e.white, e.black] * inverse[e.black, e.white])
    if p > 1 + 1e-9:
        raise FloatingPointError(f"inclusion probability {p} exceeds one")
    return min(p, 1.0)


def inclusion_probabilities(K: KasteleynMatrix) -> np.ndarray:
    """Marginal probabilities of all lattice edges."""
    if K.matrix.shape[0] == 0:
        return np.zeros(0)
    inv = np.linalg.inv(K.matrix)
    return np.array([edge_inclusion_probability(K, inv, i) for i in range(len(K.lattice.edges))])


class DeterminantalSampler:
    """Exact sampler by sequential conditioning on the Kasteleyn inverse.

    White vertices are visited in a fixed order.  For the current white ``w``
    with inverse ``A = K_c^{-1}`` of the conditioned matrix, the edge
    ``(w, b)`` is chosen with probability ``K[w,b]·A[b,w]``; conditioning on it
    amounts to keeping only that entry in row ``w``, which is a rank-one update
    of ``K_c`` and hence of ``A``.  The inverse is recomputed from scratch
    every ``refactor_every`` updates to contain round-off.
    """

    def __init__(self, lattice: Lattice, refactor_every: int = 64, K: KasteleynMatrix | None = None):
        self.lattice = lattice
        self.K = K or kasteleyn_matrix(lattice)
        self.refactor_every = refactor_every
        if self.K.matrix.shape[0]:
            lu = scipy.linalg.lu_factor(self.K.matrix)
            self._inv0 = scipy.linalg.lu_solve(lu, np.eye(self.K.matrix.shape[0]))
        else:
            self._inv0 = np.zeros((0, 0))
        self._order = sorted(range(len(lattice.whites)), key=lambda i: lattice.whites[i])

    def sample(self, u: Sequence[float]) -> frozenset[int]:
        """One matching from one uniform per white vertex (inverse-CDF choices)."""
        return self.sample_batch(np.asarray(u, dtype=float)[None, :])[0]

    def sample_batch(self, U: np.ndarray) -> list[frozenset[int]]:
        """Independent matchings, one per row of ``U`` (shape ``(S, #whites)``)."""
        lat = self.lattice
        U = np.atleast_2d(np.asarray(U, dtype=float))
        S = U.shape[0]
        n = self.K.matrix.shape[0]
        if n == 0:
            return [frozenset()] * S
        Kc = np.broadcast_to(self.K.matrix, (S, n, n)).copy()
        A = np.broadcast_to(self._inv0, (S, n, n)).copy()
        idx = np.arange(S)
        chosen = np.empty((S, len(self._order)), dtype=np.int64)
        updates = 0
        for step, w in enumerate(self._order):
            cands = np.array(lat.white_edges[w])
            blacks = np.array([lat.edges[e].black for e in cands])
            probs = Kc[:, w, blacks] * A[:, blacks, w]  # (S, k)
            probs = np.clip(probs, 0.0, None)
            # round-off on edges that admit no completion
            probs[probs < 1e-13 * probs.max(axis=1, keepdims=True)] = 0.0
            total = probs.sum(axis=1)
            if not np.all(np.isfinite(total) & (total > 0)):
                raise FloatingPointError("conditioned Kasteleyn matrix became singular")
            cdf = np.cumsum(probs, axis=1)
            k = np.minimum((cdf <= U[:, step : step + 1] * total[:, None]).sum(axis=1), len(cands) - 1)
            while True:  # never land on a zero-probability edge at the top of the CDF
                zero = probs[idx, k] == 0
                if not zero.any():
                    break
                k[zero] -= 1
            chosen[:, step] = cands[k]
            b0 = blacks[k]
            # row w keeps only column b0: K' = K + e_w v^T, v = K'[w] - K[w]
            v = -Kc[:, w, :].copy()
            v[idx, b0] = 0.0
            Kc[:, w, :] += v
            updates += 1
            if updates >= self.refactor_every:
                A = np.linalg.inv(Kc)
                updates = 0
            else:
                Aw = A[:, :, w].copy()  # (S, n)
                vA = np.einsum("sn,snm->sm", v, A)
                denom = 1.0 + vA[:, w]
                A -= Aw[:, :, None] * (vA / denom[:, None])[:, None, :]
        return [frozenset(int(e) for e in row) for row in chosen]


def determinantal_sample(lattice: Lattice, seed: int, index: int = 0, sampler: DeterminantalSampler | None = None) -> MatchingRecord:
    """One exact Boltzmann sample, deterministic in ``(seed, index)``."""
    from .sampler import sample_uniforms

    sampler = sampler or DeterminantalSampler(lattice)
    edges = sampler.sample(sample_uniforms(seed, index, len(lattice.whites)))
    return MatchingRecord(edges, matching_to_signatures(lattice, edges), lattice.matching_weight(edges))


def determinantal_samples(lattice: Lattice, seed: int, count: int, start: int = 0, batch: int = 4096, memory: int = 2**28) -> list[MatchingRecord]:
    """Samples ``start .. start+count-1``; identical to repeated :func:`determinantal_sample`.

    Batches are capped so that one stacked ``(batch, n, n)`` array stays below
    ``memory`` bytes.
    """
    from .sampler import sample_uniforms

    sampler = DeterminantalSampler(lattice)
    k = len(lattice.whites)
    batch = max(1, min(batch, memory // max(1, 8 * k * k)))
    out: list[MatchingRecord] = []
    for b0 in range(start, start + count, batch):
        idx = range(b0, min(b0 + batch, start + count))
        U = np.stack([sample_uniforms(seed, i, k) for i in idx]) if k else np.zeros((len(idx), 0))
        for edges in sampler.sample_batch(U):
            out.append(MatchingRecord(edges, matching_to_signatures(lattice, edges), lattice.matching_weight(edges)))
    return out


# ---------------------------------------------------------------------------
# torus spectral curve


@dataclass(frozen=True)
class SpectralCurve:
    """``P(z, w) = ∏(z - x_i) - w ∏_{j∈I₂}(1 + y_j z)`` and ``R(z) = w`` on ``P = 0``."""

    numerator: np.ndarray  # coefficients of ∏(z - x_i), highest degree first
    denominator: np.ndarray  # coefficients of ∏(1 + y_j z)

    def P(self, z: complex, w: complex) -> complex:
        return np.polyval(self.numerator, z) - w * np.polyval(self.denominator, z)

    def R(self, z: complex) -> complex:
        return np.polyval(self.numerator, z) / np.polyval(self.denominator, z)

    def R_prime(self, z: complex) -> complex:
        num, den = self.numerator, self.denominator
        dn, dd = np.polyder(num), np.polyder(den)
        return (np.polyval(dn, z) * np.polyval(den, z) - np.polyval(num, z) * np.polyval(dd, z)) / np.polyval(den, z) ** 2


def torus_curve(model: WeightModel) -> SpectralCurve:
    """Spectral curve of the periodic lattice."""
    num = np.array([1.0])
    for xi in model.x:
        num = np.polymul(num, np.array([1.0, -xi]))
    den = np.array([1.0])
    for j in model.I2:
        den = np.polymul(den, np.array([model.y[j], 1.0]))
    return SpectralCurve(num, den)


def torus_kasteleyn(model: WeightModel, z: complex, w: complex) -> np.ndarray:
    """Kasteleyn matrix ``K(z, w)`` of the 1×n fundamental domain, built edge by edge.

    The domain has one white ``W_i`` and one black ``B_i`` per row residue.
    ``W_i–B_i`` is a vertical edge of weight 1 or, for ``i ∈ I₂``, a square
    pair ``1`` and ``y_i`` of which the ``y_i`` diagonal is crossed by the
    horizontal cycle (factor ``z``).  ``B_i–W_{i+1}`` is the
    pair of diagonals ``-x_i`` (Kasteleyn sign) and ``1`` (crossed, ``z``).  The
    vertical cycle crosses the row-1 edges; it carries ``(-1)^n w`` so that the
    curve takes the monic form for every period.
    """
    n = model.n
    K = np.zeros((n, n), dtype=complex)
    for i in range(n):
        yi = model.y.get(i + 1)
        level = (1.0 + yi * z) if yi is not None else 1.0
        if i == 0:
            level = level * w * (-1) ** n
        K[i, i] += level
        K[(i + 1) % n, i] += z - model.x[i]
    return K


def torus_determinant(model: WeightModel, z: complex, w: complex) -> complex:
    """``P(z, w)`` computed as ``±det K(z, w)`` of the explicit fundamental domain."""
    return complex((-1) ** (model.n - 1) * np.linalg.det(torus_kasteleyn(model, z, w)))
