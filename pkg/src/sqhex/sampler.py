"""Exact sampling of the interlacing signature chain.

The law of a uniformly weighted matching, read row by row from the bottom, is
a Markov chain on signatures.  Going up one level the chain first adds a
vertical strip (square rows only)

    st(μ → ν) = y^{|ν|-|μ|} s_ν(x) / (∏_j (1 + y x_j) s_μ(x))

and then removes a horizontal strip

    pr(ν → μ) = x_1^{|ν|-|μ|} s_μ(x_2, ..., x_t) / s_ν(x_1, ..., x_t),

with the weights taken from the suffix ``(x_{N-t+1}, ..., x_N)`` at level ``t``.

Two samplers are provided.  :func:`sample_chain` enumerates every kernel's
support and is meant as an oracle for small lattices.
:class:`CoordinateChainSampler` handles large lattices: both supports are
boxes of coordinates (a product of intervals for ``pr``, ``{μ_j, μ_j+1}`` for
``st``; non-signatures in the ``st`` box have two equal bialternant columns
and weigh zero).  The total weight of a box is therefore one determinant,
and coordinates can be drawn one at a time from Cramer's-rule conditionals
while a Sherman–Morrison update keeps the inverse current.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .lattice import Lattice, LatticeSpec, MatchingRecord, signatures_to_matching
from .partitions import Signature, interlacing_below, size, vertical_strips_above
from .schur import log_schur

__all__ = [
    "RowDistribution",
    "pr_kernel",
    "st_kernel",
    "sample_chain",
    "sample_chains",
    "p_statistic",
    "exact_row_distribution",
    "exact_chain_distribution",
    "CoordinateChainSampler",
    "sample_uniforms",
    "level_of_kappa",
]

#: maximal support size an enumeration kernel is allowed to touch
SUPPORT_GUARD = 10**6


@dataclass(frozen=True)
class RowDistribution:
    """A finite law on signatures."""

    support: tuple[Signature, ...]
    probs: np.ndarray

    def __post_init__(self) -> None:
        if len(self.support) != len(self.probs):
            raise ValueError("support and probabilities differ in length")

    @property
    def total(self) -> float:
        return float(math.fsum(self.probs))

    def sample(self, u: float) -> Signature:
        """Inverse-CDF draw from a uniform ``u ∈ [0, 1)``."""
        cdf = np.cumsum(self.probs)
        k = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
        return self.support[min(k, len(self.support) - 1)]

    def as_dict(self) -> dict[Signature, float]:
        return {s: float(p) for s, p in zip(self.support, self.probs)}


def _support_size_pr(nu: Sequence[int]) -> int:
    return math.prod(nu[j] - nu[j + 1] + 1 for j in range(len(nu) - 1))


def pr_kernel(nu: Sequence[int], x: Sequence[float]) -> RowDistribution:
    """Law of ``μ^(t-1)`` given ``ν^(t) = ν`` with weights ``x = (x_{N-t+1}, ..., x_N)``."""
    nu = Signature(nu)
    t = len(nu)
    if len(x) != t:
        raise ValueError("weight suffix must have the length of ν")
    if t == 0:
        raise ValueError("ν must have at least one part")
    if _support_size_pr(nu) > SUPPORT_GUARD:
        raise ValueError("support too large for enumeration; use CoordinateChainSampler")
    x1, rest = float(x[0]), list(x[1:])
    log_norm = log_schur(nu, x)
    support = tuple(interlacing_below(nu))
    logs = np.array([
        (size(nu) - size(mu)) * math.log(x1) + log_schur(mu, rest) - log_norm for mu in support
    ])
    return RowDistribution(support, np.exp(logs))


def st_kernel(mu: Sequence[int], y: float, x: Sequence[float]) -> RowDistribution:
    """Law of ``ν^(t)`` given ``μ^(t) = μ`` on a square row with weight ``y``."""
    mu = Signature(mu)
    if len(x) != len(mu):
        raise ValueError("weight suffix must have the length of μ")
    if not y > 0:
        raise ValueError("y must be positive")
    if 2 ** len(mu) > SUPPORT_GUARD:
        raise ValueError("support too large for enumeration; use CoordinateChainSampler")
    log_norm = log_schur(mu, x) + sum(math.log1p(y * xj) for xj in x)
    support = tuple(vertical_strips_above(mu))
    logs = np.array([(size(nu) - size(mu)) * math.log(y) + log_schur(nu, x) - log_norm for nu in support])
    return RowDistribution(support, np.exp(logs))


def p_statistic(parts: Sequence[int], k: int) -> int:
    """Power sum ``Σ_i (λ_i + L - i)^k`` of the particle positions of a row."""
    L = len(parts)
    return sum((int(parts[i - 1]) + L - i) ** k for i in range(1, L + 1))


def level_of_kappa(N: int, kappa: float) -> int:
    """Number of parts ``L = N - ⌊κN⌋`` of the signature observed at height κ."""
    return N - int(math.floor(kappa * N + 1e-12))


def sample_uniforms(seed: int, index: int, count: int) -> np.ndarray:
    """The stream of uniforms owned by sample ``index`` (counter-based, splittable)."""
    bitgen = np.random.Philox(np.random.SeedSequence([int(seed), int(index)]))
    return np.random.Generator(bitgen).random(count)


# ---------------------------------------------------------------------------
# enumeration-based chain sampler


class _KernelCache:
    def __init__(self, spec: LatticeSpec):
        self.spec = spec
        self.model = spec.model
        self.N = spec.N

        @lru_cache(maxsize=None)
        def pr(nu: Signature, t: int) -> RowDistribution:
            return pr_kernel(nu, self.model.xs(self.N)[self.N - t:])

        @lru_cache(maxsize=None)
        def st(mu: Signature, t: int) -> RowDistribution:
            i = self.N - t + 1
            return st_kernel(mu, self.model.y_at(i), self.model.xs(self.N)[self.N - t:])

        self.pr = pr
        self.st = st


_CACHES: dict[LatticeSpec, _KernelCache] = {}


def _cache_for(spec: LatticeSpec) -> _KernelCache:
    if spec not in _CACHES:
        _CACHES[spec] = _KernelCache(spec)
    return _CACHES[spec]


def _chain_from_uniforms(spec: LatticeSpec, u: np.ndarray) -> tuple[Signature, ...]:
    cache = _cache_for(spec)
    N = spec.N
    mu = spec.omega
    seq = [mu]
    step = 0
    for t in range(N, 0, -1):
        i = N - t + 1
        if spec.c[i - 1] == 0:
            nu = cache.st(mu, t).sample(u[step])
            step += 1
        else:
            nu = mu
        seq.append(nu)
        mu = cache.pr(nu, t).sample(u[step])
        step += 1
        seq.append(mu)
    return tuple(seq)


def sample_chain(lattice: Lattice | LatticeSpec, seed: int, index: int = 0) -> MatchingRecord:
    """One exact sample of the chain (and its matching), deterministic in ``(seed, index)``."""
    spec = getattr(lattice, "spec", lattice)
    lat = lattice if isinstance(lattice, Lattice) else None
    u = sample_uniforms(seed, index, 2 * spec.N)
    seq = _chain_from_uniforms(spec, u)
    if lat is None:
        from .lattice import build_lattice

        lat = build_lattice(spec)
    edges = signatures_to_matching(lat, seq)
    return MatchingRecord(edges, seq, lat.matching_weight(edges))


def sample_chains(spec: LatticeSpec, seed: int, count: int, start: int = 0) -> list[tuple[Signature, ...]]:
    """``count`` chains from the enumeration sampler (indices ``start .. start+count-1``)."""
    return [_chain_from_uniforms(spec, sample_uniforms(seed, start + k, 2 * spec.N)) for k in range(count)]


def exact_chain_distribution(spec: LatticeSpec, guard: int = 10**5) -> dict[tuple[Signature, ...], float]:
    """Exact law of the whole chain, by multiplying kernel probabilities."""
    cache = _cache_for(spec)
    N = spec.N
    out: dict[tuple[Signature, ...], float] = {}

    def rec(t: int, mu: Signature, seq: list[Signature], prob: float) -> None:
        if t == 0:
            out[tuple(seq)] = out.get(tuple(seq), 0.0) + prob
            if len(out) > guard:
                raise ValueError("chain enumeration guard exceeded")
            return
        i = N - t + 1
        if spec.c[i - 1] == 0:
            st = cache.st(mu, t)
            nus = list(zip(st.support, st.probs))
        else:
            nus = [(mu, 1.0)]
        for nu, p_nu in nus:
            pr = cache.pr(nu, t)
            for nxt, p_mu in zip(pr.support, pr.probs):
                rec(t - 1, nxt, seq + [nu, nxt], prob * p_nu * p_mu)

    rec(N, spec.omega, [spec.omega], 1.0)
    return out


def exact_row_distribution(lattice: Lattice | LatticeSpec, row: int) -> RowDistribution:
    """Exact marginal law of the signature on lattice row ``row`` (1 = bottom)."""
    spec = getattr(lattice, "spec", lattice)
    if not 1 <= row <= 2 * spec.N + 1:
        raise ValueError("row out of range")
    marg: dict[Signature, float] = {}
    for seq, p in exact_chain_distribution(spec).items():
        marg[seq[row - 1]] = marg.get(seq[row - 1], 0.0) + p
    support = tuple(sorted(marg, reverse=True))
    return RowDistribution(support, np.array([marg[s] for s in support]))


# ---------------------------------------------------------------------------
# coordinate sampler for large lattices

#: grouping ratios tried in turn when a batch step fails its self-check
#: (0 = one joint group, inf = every distinct value on its own)
BASIS_CASCADE = (0.0, math.inf, 0.5)

#: working precisions (decimal digits) of the multiprecision replay
EXACT_DPS = (120, 240, 480)


@lru_cache(maxsize=512)
def _orthonormal_rows(values: tuple[float, ...], window: tuple[int, int], group_ratio: float, dps: int = 80) -> np.ndarray:
    """Well-conditioned basis of the span of the bialternant rows, as functions of ``l = 0..lmax``.

    For a value ``c`` repeated ``k`` times the span of ``{l^r c^l : r < k}`` is
    the span of the confluent (derivative) rows.  Replacing the rows by any
    basis of their joint span multiplies every box determinant by the same
    constant, so the probabilities are unchanged.  Monomial rows are extremely
    ill-conditioned when two values are close (``0.9^l`` is nearly a
    low-degree polynomial on a range of a few dozen integers), so values
    within a factor ``group_ratio`` of the largest value of their group are
    orthonormalized together in high precision and only then rounded to
    extended precision.  Groups of very different magnitude are better left
    apart: their rows are graded, which pivoted elimination handles well.

    Orthonormality refers to the exponents ``window[0] <= l <= window[1]``
    that can actually occur; conditioning on a longer range costs digits at a
    rate exponential in the number of rows.  Functions carry a factor
    ``c_max^{-l}``, which is not a row operation; :func:`_box_kernel` folds
    ``log c_max`` into the column weights.
    """
    import mpmath

    lmin, lmax = window
    distinct: dict[float, int] = {}
    for v in values:
        distinct[v] = distinct.get(v, 0) + 1
    if not distinct:
        return np.zeros((0, lmax + 1), dtype=np.longdouble)
    groups: list[list[float]] = []
    for v in sorted(distinct, reverse=True):
        if groups and v >= group_ratio * groups[-1][0]:
            groups[-1].append(v)
        else:
            groups.append([v])
    rows: list[np.ndarray] = []
    with mpmath.workdps(dps):
        cmax = mpmath.mpf(max(distinct))
        mid = mpmath.mpf(lmin + lmax) / 2
        half = mpmath.mpf(lmax - lmin) / 2 if lmax > lmin else mpmath.mpf(1)

        def dot(a: list, b: list):
            return mpmath.fsum(a[l] * b[l] for l in range(lmin, lmax + 1))

        for group in groups:
            Q = []
            for v in group:
                ratio = mpmath.mpf(v) / cmax
                for r in range(distinct[v]):
                    Q.append([((l - mid) / half) ** r * ratio ** (l - lmin) for l in range(lmax + 1)])
            for _ in range(2):  # modified Gram–Schmidt, applied twice
                for j in range(len(Q)):
                    for i in range(j):
                        c = dot(Q[i], Q[j])
                        Q[j] = [b - c * a for a, b in zip(Q[i], Q[j])]
                    norm = mpmath.sqrt(dot(Q[j], Q[j]))
                    if norm == 0:
                        raise ValueError("degenerate bialternant rows")
                    Q[j] = [b / norm for b in Q[j]]
            for q in Q:
                hi = np.array([float(v) for v in q])
                lo = np.array([float(v - mpmath.mpf(h)) for v, h in zip(q, hi)])
                rows.append(hi.astype(np.longdouble) + lo.astype(np.longdouble))
    return np.array(rows, dtype=np.longdouble)


def _batched_inverse(M: np.ndarray) -> np.ndarray:
    """Gauss–Jordan inverse with partial pivoting of a stack of matrices.

    Works in the dtype of ``M`` (``numpy.linalg`` is limited to double), so it
    can run in extended precision.
    """
    S, R, _ = M.shape
    A = M.copy()
    X = np.broadcast_to(np.eye(R, dtype=M.dtype), (S, R, R)).copy()
    idx = np.arange(S)
    for k in range(R):
        piv = k + np.abs(A[:, k:, k]).argmax(axis=1)
        swap = piv != k
        if swap.any():
            s_idx, p_idx = idx[swap], piv[swap]
            for arr in (A, X):
                rows_k = arr[s_idx, k].copy()
                arr[s_idx, k] = arr[s_idx, p_idx]
                arr[s_idx, p_idx] = rows_k
        d = A[:, k, k].copy()
        d[d == 0] = np.finfo(M.dtype).tiny  # singular stacks are caught by the self-check
        A[:, k] /= d[:, None]
        X[:, k] /= d[:, None]
        f = A[:, :, k].copy()
        f[:, k] = 0
        A -= f[:, :, None] * A[:, k][:, None, :]
        X -= f[:, :, None] * X[:, k][:, None, :]
    return X


@dataclass
class _BoxKernel:
    """Static data of one kernel step.

    The weight of the box value ``a`` in column ``j`` is
    ``exp(log_base·a) · basis[:, a + offsets[j]]``.
    """

    values: tuple[float, ...]  # Schur variables of the step
    window: tuple[int, int]  # range of exponents l that can occur
    offsets: np.ndarray  # (L,) exponent offsets l = a + offset_j
    log_base: float  # physical column weight base^a
    kind: str

    @property
    def shift(self) -> float:
        return math.log(max(self.values)) if self.values else 0.0

    def basis(self, level: int) -> np.ndarray:
        return _orthonormal_rows(self.values, self.window, BASIS_CASCADE[level])


class CoordinateChainSampler:
    """Exact batched sampler of the signature chain for large ``N``.

    Every kernel step draws the coordinates of the new signature one at a
    time from their Cramer's-rule conditionals; see the module docstring.
    All linear algebra runs in extended precision on a basis of the
    bialternant rows that is orthonormalized in high precision.  Each sample
    checks that its conditionals are nonnegative and sum to one within
    ``check_tol``; failures are retried with the other bases of
    :data:`BASIS_CASCADE` and, as a last resort, replayed one at a time in
    multiprecision arithmetic with escalating precision (``fallbacks``
    counts those).

    ``levels`` lists the signature lengths ``t`` whose ``μ^(t)`` should be
    returned; sampling stops at the smallest one.
    """

    def __init__(self, spec: LatticeSpec, levels: Iterable[int] | None = None, check_tol: float = 1e-7):
        self.spec = spec
        self.N = spec.N
        self.levels = sorted(set(levels) if levels is not None else range(0, spec.N + 1), reverse=True)
        if any(not 0 <= t <= spec.N for t in self.levels):
            raise ValueError("levels must lie in 0..N")
        self.stop = min(self.levels)
        self.check_tol = check_tol
        self.fallbacks = 0
        self.retries = 0
        model = spec.model
        xs = model.xs(self.N)
        omega = spec.omega
        # every part stays within [ω_N, ω_1 + #square rows so far]
        top = omega[0] if omega else 0
        bottom = omega[-1] if omega else 0
        self.steps: list[tuple[int, _BoxKernel]] = []
        self.uniform_count = 0
        for t in range(self.N, self.stop, -1):
            i = self.N - t + 1
            suffix = tuple(xs[self.N - t:])
            if spec.c[i - 1] == 0:
                top += 1
                kern = _BoxKernel(suffix, (bottom, top + t - 1), np.arange(t - 1, -1, -1), math.log(model.y_at(i)), "st")
                self.steps.append((t, kern))
                self.uniform_count += t
            if t - 1 >= 1:
                kern = _BoxKernel(suffix[1:], (bottom, top + t - 2), np.arange(t - 2, -1, -1), -math.log(suffix[0]), "pr")
                self.uniform_count += t - 1
            else:
                kern = _BoxKernel((), (0, 0), np.zeros(0, dtype=np.int64), 0.0, "pr")
            self.steps.append((t, kern))

    # -- one batched box step ----------------------------------------------
    def _box_step(self, kern: _BoxKernel, lo: np.ndarray, hi: np.ndarray, U: np.ndarray, level: int = 0) -> np.ndarray:
        S, L = lo.shape
        if L == 0 or S == 0:
            return lo.copy()
        basis = kern.basis(level)
        ld = basis.dtype.type
        width = int((hi - lo).max()) + 1
        a = lo[:, :, None] + np.arange(width)[None, None, :]  # (S, L, W)
        valid = a <= hi[:, :, None]
        ls = np.where(valid, a + kern.offsets[None, :, None], 0)
        # (c/c_max)^l in the basis is compensated by c_max^a in the weights
        logw = ld(kern.log_base + kern.shift) * a.astype(basis.dtype)
        logw = np.where(valid, logw, -np.inf)
        logw -= logw.max(axis=2, keepdims=True)
        w = np.exp(logw)  # (S, L, W)
        phi = np.moveaxis(basis[:, ls], 0, -1) * w[..., None]  # (S, L, W, R)
        M = np.swapaxes(phi.sum(axis=2), 1, 2).copy()  # (S, R, L): column j = Σ_a w φ
        rscale = np.abs(M).max(axis=2, keepdims=True)
        rscale[rscale == 0] = 1
        M /= rscale
        phi /= np.swapaxes(rscale, 1, 2)[:, :, None, :]
        Minv = _batched_inverse(M)
        out = np.empty((S, L), dtype=np.int64)
        bad = np.zeros(S, dtype=bool)
        idx_s = np.arange(S)
        for j in range(L):
            p = np.einsum("swr,sr->sw", phi[:, j], Minv[:, j, :])
            p = np.where(valid[:, j], p, 0)
            tot = p.sum(axis=1)
            bad |= ~(np.abs(tot - 1) <= self.check_tol)
            bad |= (p < -self.check_tol * np.abs(p).max(axis=1, keepdims=True)).any(axis=1)
            p = np.clip(p, 0, None).astype(np.float64)
            cdf = np.cumsum(p, axis=1)
            pick = (cdf < U[:, j : j + 1] * cdf[:, -1:]).sum(axis=1)
            pick = np.minimum(pick, valid[:, j].sum(axis=1) - 1)
            out[:, j] = a[idx_s, j, pick]
            # Sherman–Morrison: column j of M becomes the chosen term alone
            v = phi[idx_s, j, pick]  # (S, R)
            q = np.einsum("srl,sl->sr", Minv, v - M[:, :, j])
            denom = 1 + q[:, j]
            bad |= ~(np.abs(denom) > 0)
            denom[~(np.abs(denom) > 0)] = 1
            Minv -= q[:, :, None] * (Minv[:, j, :] / denom[:, None])[:, None, :]
            M[:, :, j] = v
        if bad.any():
            sel = np.nonzero(bad)[0]
            if level + 1 < len(BASIS_CASCADE):
                self.retries += len(sel)
                out[sel] = self._box_step(kern, lo[sel], hi[sel], U[sel], level + 1)
            else:
                for s in sel:
                    out[s] = self._box_step_exact(kern, lo[s], hi[s], U[s])
                    self.fallbacks += 1
        return out

    def _box_step_exact(self, kern: _BoxKernel, lo: np.ndarray, hi: np.ndarray, U: np.ndarray) -> np.ndarray:
        """Multiprecision replay of one box step for a single sample.

        The working precision is doubled until the step's matrix is invertible.
        """
        for dps in EXACT_DPS:
            try:
                return self._box_step_mp(kern, lo, hi, U, dps)
            except ZeroDivisionError:
                continue
        raise ArithmeticError(f"box step singular at {EXACT_DPS[-1]} digits")

    def _box_step_mp(self, kern: _BoxKernel, lo: np.ndarray, hi: np.ndarray, U: np.ndarray, dps: int) -> np.ndarray:
        import mpmath

        with mpmath.workdps(dps):
            distinct: dict[float, int] = {}
            for v in kern.values:
                distinct[v] = distinct.get(v, 0) + 1
            cmax = mpmath.mpf(max(distinct)) if distinct else mpmath.mpf(1)
            rows = [(mpmath.mpf(v) / cmax, r) for v in sorted(distinct, reverse=True) for r in range(distinct[v])]
            # c^l carries c_max^l into the weights; centered powers span the same rows as l^r
            base = mpmath.exp(mpmath.mpf(kern.log_base)) * cmax
            L = len(lo)
            ls = [int(lo[j]) + int(kern.offsets[j]) for j in range(L)] + [int(hi[j]) + int(kern.offsets[j]) for j in range(L)]
            mid = mpmath.mpf(min(ls) + max(ls)) / 2 if ls else mpmath.mpf(0)
            half = max(mpmath.mpf(max(ls) - min(ls)) / 2, mpmath.mpf(1)) if ls else mpmath.mpf(1)

            def term(j: int, a: int) -> list:
                l = a + int(kern.offsets[j])
                return [base**a * ((l - mid) / half) ** r * c**l for c, r in rows]

            terms = [{a: term(j, a) for a in range(int(lo[j]), int(hi[j]) + 1)} for j in range(L)]
            M = mpmath.matrix(L, L)
            for j in range(L):
                col = [mpmath.fsum(t[r] for t in terms[j].values()) for r in range(L)]
                for r in range(L):
                    M[r, j] = col[r]
            Minv = mpmath.inverse(M)
            out = np.empty(L, dtype=np.int64)
            for j in range(L):
                cands = sorted(terms[j])
                weights = [max(mpmath.fsum(Minv[j, r] * terms[j][a][r] for r in range(L)), 0) for a in cands]
                cdf = np.cumsum([float(x) for x in weights])
                k = min(int((cdf < U[j] * cdf[-1]).sum()), len(cands) - 1)
                v = terms[j][cands[k]]
                d = mpmath.matrix([v[r] - M[r, j] for r in range(L)])
                q = Minv * d
                row = Minv[j, :]
                Minv = Minv - q * row / (1 + q[j])
                for r in range(L):
                    M[r, j] = v[r]
                out[j] = cands[k]
            return out

    # -- public API ----------------------------------------------------------
    def sample_batch(self, seed: int, indices: Sequence[int]) -> dict[int, np.ndarray]:
        """Signatures at the requested levels for the given sample indices."""
        return self._run(seed, indices, None)

    def full_chains(self, seed: int, indices: Sequence[int]) -> list[tuple[Signature, ...]]:
        """Whole chains ``(ω, ν^(N), μ^(N-1), ..., μ^(0))`` for the given indices.

        Requires the sampler to run down to level 0.
        """
        if self.stop != 0:
            raise ValueError("full chains need level 0 among the levels")
        rows: list[np.ndarray] = []
        self._run(seed, indices, rows)
        return [tuple(tuple(int(v) for v in r[s]) for r in rows) for s in range(len(indices))]

    def _run(self, seed: int, indices: Sequence[int], rows: list[np.ndarray] | None) -> dict[int, np.ndarray]:
        S = len(indices)
        U = np.stack([sample_uniforms(seed, k, self.uniform_count) for k in indices]) if S else np.zeros((0, self.uniform_count))
        mu = np.tile(np.array(self.spec.omega, dtype=np.int64), (S, 1))
        out: dict[int, np.ndarray] = {}
        if self.N in self.levels:
            out[self.N] = mu.copy()
        if rows is not None:
            rows.append(mu.copy())
        pos = 0
        for t, kern in self.steps:
            if kern.kind == "st":
                mu = self._box_step(kern, mu, mu + 1, U[:, pos : pos + t])
                pos += t
                if rows is not None:
                    rows.append(mu.copy())
                continue
            if rows is not None and self.spec.c[self.N - t] == 1:
                rows.append(mu.copy())
            if t - 1 >= 1:
                mu = self._box_step(kern, mu[:, 1:], mu[:, :-1], U[:, pos : pos + t - 1])
                pos += t - 1
            else:
                mu = np.zeros((S, 0), dtype=np.int64)
            if t - 1 in self.levels:
                out[t - 1] = mu.copy()
            if rows is not None:
                rows.append(mu.copy())
        return out

    def sample(self, seed: int, count: int, start: int = 0, batch: int = 2000) -> dict[int, np.ndarray]:
        """Signatures at the requested levels for samples ``start .. start+count-1``."""
        parts: dict[int, list[np.ndarray]] = {t: [] for t in self.levels}
        for b0 in range(start, start + count, batch):
            res = self.sample_batch(seed, range(b0, min(b0 + batch, start + count)))
            for t in self.levels:
                parts[t].append(res[t])
        return {t: np.concatenate(v, axis=0) for t, v in parts.items()}
