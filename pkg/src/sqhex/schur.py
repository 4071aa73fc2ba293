"""Rational Schur functions and the closed forms built from them.

Two evaluation routes are provided and deliberately kept independent:

* the *bialternant* ``det(x_i^{λ_j+N-j}) / Δ(x)``, cheap but ill-conditioned
  when two variables nearly coincide;
* the *branching* recursion ``s_λ(x_1..x_N) = Σ_{μ≺λ} x_1^{|λ|-|μ|} s_μ(x_2..x_N)``,
  a sum of positive terms that is exact up to rounding for any variables but
  whose cost grows with the number of Gelfand–Tsetlin patterns.

Everything is accumulated in the log domain so that strongly separated weights
(ratios like 1e-3 raised to large powers) neither overflow nor underflow.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np

from .partitions import Signature, interlacing_below, size

if TYPE_CHECKING:  # pragma: no cover
    from .lattice import Lattice, LatticeSpec

__all__ = [
    "WeightModel",
    "schur_eval",
    "log_schur",
    "schur_bialternant",
    "schur_branching",
    "staircase_schur",
    "schur_dimension",
    "partition_function",
    "gamma_factor",
]

#: relative gap below which the bialternant is considered ill-conditioned
TIE_THRESHOLD = 1e-6
#: above this many Gelfand–Tsetlin patterns the branching route is avoided
BRANCHING_BUDGET = 50_000


@dataclass(frozen=True)
class WeightModel:
    """Edge weights that repeat with period ``n`` along the rows.

    ``x[i-1]`` is the weight of the NE-SW edges of every row ``t ≡ i (mod n)``;
    ``y`` maps residues ``i ∈ I₂ ⊆ {1..n}`` to the weight of the square-row
    edges.  ``m`` is the optional staircase parameter of a uniform boundary.
    """

    n: int
    x: tuple[float, ...]
    y: Mapping[int, float] = field(default_factory=dict)
    m: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", {int(k): float(v) for k, v in dict(self.y).items()})
        if self.n < 1 or len(self.x) != self.n:
            raise ValueError(f"expected {self.n} x-weights, got {len(self.x)}")
        if any(not v > 0 for v in self.x):
            raise ValueError("x-weights must be positive")
        for k, v in self.y.items():
            if not 1 <= k <= self.n:
                raise ValueError(f"y residue {k} outside 1..{self.n}")
            if not v > 0:
                raise ValueError("y-weights must be positive")
        if self.m is not None and self.m < 1:
            raise ValueError("staircase parameter m must be >= 1")

    def __hash__(self) -> int:
        return hash((self.n, self.x, tuple(sorted(self.y.items())), self.m))

    @property
    def I2(self) -> tuple[int, ...]:
        return tuple(sorted(self.y))

    @property
    def r(self) -> int:
        return len(self.y)

    def residue(self, t: int) -> int:
        return (t - 1) % self.n + 1

    def x_at(self, t: int) -> float:
        """Weight ``x_t`` of lattice row ``t`` (1-based, periodic)."""
        return self.x[self.residue(t) - 1]

    def y_at(self, t: int) -> float | None:
        return self.y.get(self.residue(t))

    def xs(self, N: int) -> tuple[float, ...]:
        return tuple(self.x_at(t) for t in range(1, N + 1))

    def c_pattern(self, N: int) -> tuple[int, ...]:
        """The row pattern implied by ``I₂``: ``c_t = 0`` iff ``t mod n ∈ I₂``."""
        return tuple(0 if self.residue(t) in self.y else 1 for t in range(1, N + 1))

    def to_dict(self) -> dict:
        out: dict = {"n": self.n, "x": list(self.x), "y": {str(k): v for k, v in self.y.items()}}
        if self.m is not None:
            out["m"] = self.m
        return out


def _validate(lam: Sequence[int], x: Sequence[float]) -> tuple[Signature, np.ndarray]:
    lam = lam if isinstance(lam, Signature) else Signature(lam)
    xv = np.asarray(x, dtype=float)
    if len(lam) != len(xv):
        raise ValueError(f"need len(x) == len(λ), got {len(xv)} and {len(lam)}")
    if len(lam) and lam[-1] < 0:
        raise ValueError("rational Schur functions here are restricted to GT⁺")
    if np.any(~(xv > 0)):
        raise ValueError("Schur variables must be positive")
    return lam, xv


def schur_dimension(lam: Sequence[int]) -> int:
    """``s_λ(1, ..., 1)`` by the Weyl dimension formula (exact integer)."""
    lam = Signature(lam)
    N = len(lam)
    value = Fraction(1)
    for i in range(N):
        for j in range(i + 1, N):
            value *= Fraction(lam[i] - lam[j] + j - i, j - i)
    assert value.denominator == 1
    return int(value)


def _gt_pattern_count(lam: Sequence[int]) -> int:
    """Upper bound on the work of the branching recursion (``s_λ(1^N)``)."""
    return schur_dimension(lam)


def log_schur_bialternant(lam: Sequence[int], x: Sequence[float]) -> float:
    lam, xv = _validate(lam, x)
    N = len(lam)
    if N == 0:
        return 0.0
    exps = np.array([lam[j] + N - 1 - j for j in range(N)], dtype=float)
    scale = xv.max()
    u = xv / scale
    mat = u[:, None] ** exps[None, :]
    sign, logdet = np.linalg.slogdet(mat)
    diffs = u[:, None] - u[None, :]
    iu = np.triu_indices(N, 1)
    d = diffs[iu]
    dsign = np.prod(np.sign(d))
    if sign * dsign <= 0:
        raise FloatingPointError("bialternant lost its sign; variables too close")
    log_vdm = float(np.sum(np.log(np.abs(d))))
    return float(logdet - log_vdm + math.log(scale) * size(lam))


def schur_bialternant(lam: Sequence[int], x: Sequence[float]) -> float:
    return math.exp(log_schur_bialternant(lam, x))


def _logsumexp(values: list[float]) -> float:
    top = max(values)
    if top == -math.inf:
        return top
    return top + math.log(math.fsum(math.exp(v - top) for v in values))


def log_schur_branching(lam: Sequence[int], x: Sequence[float]) -> float:
    lam, xv = _validate(lam, x)
    logs = tuple(float(v) for v in np.log(xv))

    @lru_cache(maxsize=None)
    def rec(mu: tuple[int, ...], k: int) -> float:
        # log s_mu(x_k, ..., x_N) with len(mu) == N - k
        if not mu:
            return 0.0
        if len(mu) == 1:
            return mu[0] * logs[k]
        smu = sum(mu)
        terms = [
            (smu - sum(nu)) * logs[k] + rec(tuple(nu), k + 1)
            for nu in interlacing_below(Signature(mu))
        ]
        return _logsumexp(terms)

    return rec(tuple(lam), 0)


def schur_branching(lam: Sequence[int], x: Sequence[float]) -> float:
    return math.exp(log_schur_branching(lam, x))


def log_schur(lam: Sequence[int], x: Sequence[float], method: str = "auto") -> float:
    """Natural log of the rational Schur function ``s_λ(x)``.

    ``method`` is ``"bialternant"``, ``"branching"`` or ``"auto"``.  The automatic
    choice uses the closed form ``c^{|λ|}·dim(λ)`` for equal variables, the
    branching recursion whenever the pattern count is small (it is a sum of
    positive terms and therefore never cancels), and the bialternant for large
    well-separated inputs.
    """
    lam, xv = _validate(lam, x)
    if len(lam) == 0:
        return 0.0
    if method == "bialternant":
        return log_schur_bialternant(lam, xv)
    if method == "branching":
        return log_schur_branching(lam, xv)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if np.all(xv == xv[0]):
        return size(lam) * math.log(xv[0]) + math.log(schur_dimension(lam))
    if _gt_pattern_count(lam) <= BRANCHING_BUDGET:
        return log_schur_branching(lam, xv)
    gaps = np.abs(xv[:, None] - xv[None, :])[np.triu_indices(len(xv), 1)]
    if gaps.min() > TIE_THRESHOLD * xv.max():
        return log_schur_bialternant(lam, xv)
    return log_schur_branching(lam, xv)


def schur_eval(lam: Sequence[int], x: Sequence[float], method: str = "auto") -> float:
    """The rational Schur function ``s_λ(x_1, ..., x_N)`` for positive ``x``."""
    return math.exp(log_schur(lam, x, method))


def staircase_schur(m: int, N: int, x: Sequence[float]) -> float:
    """``∏_{i<j} (x_i^m - x_j^m)/(x_i - x_j)``, written as a polynomial so ties are harmless."""
    xv = [float(v) for v in x]
    if len(xv) != N:
        raise ValueError("need len(x) == N")
    if any(not v > 0 for v in xv):
        raise ValueError("Schur variables must be positive")
    logval = 0.0
    for i in range(N):
        for j in range(i + 1, N):
            a, b = xv[i], xv[j]
            logval += math.log(math.fsum(a**k * b ** (m - 1 - k) for k in range(m)))
    return math.exp(logval)


def gamma_factor(i: int, N: int, model: WeightModel) -> float:
    """Contribution ``∏_{t=i}^{N} (1 + y_i x_t)`` of a square row ``i``."""
    yi = model.y_at(i)
    if yi is None:
        raise ValueError(f"row {i} is not a square row")
    return math.prod(1.0 + yi * model.x_at(t) for t in range(i, N + 1))


def partition_function(lattice: "Lattice | LatticeSpec", model: WeightModel | None = None) -> float:
    """Closed-form total weight of the perfect matchings of a contracting lattice.

    ``Z = ∏_{i : c_i = 0} Γ_i · s_ω(x_1, ..., x_N)`` with ``ω`` the boundary
    signature.
    """
    spec = getattr(lattice, "spec", lattice)
    model = model or spec.model
    if tuple(spec.c) != model.c_pattern(spec.N):
        raise ValueError("row pattern c is inconsistent with the y-residues of the weight model")
    from .lattice import boundary_signature

    omega = boundary_signature(spec.Omega)
    value = schur_eval(omega, model.xs(spec.N))
    for i, ci in enumerate(spec.c, start=1):
        if ci == 0:
            value *= gamma_factor(i, spec.N, model)
    return value
