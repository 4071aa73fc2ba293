"""Signatures, strip relations between Young diagrams, and counting measures.

A *signature* is a weakly decreasing integer vector.  Signatures of different
lengths are compared by padding the shorter one with zeros, which is the
convention needed for chains that end in the empty signature.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "Signature",
    "CountingMeasure",
    "is_horizontal_strip",
    "is_vertical_strip",
    "counting_measure",
    "measure_moment",
    "staircase",
    "size",
    "interlacing_below",
    "vertical_strips_above",
]


class Signature(tuple):
    """Immutable weakly decreasing tuple of integers."""

    __slots__ = ()

    def __new__(cls, parts: Iterable[int] = ()) -> "Signature":
        values = tuple(int(p) for p in parts)
        for a, b in zip(values, values[1:]):
            if a < b:
                raise ValueError(f"signature must be weakly decreasing, got {values}")
        return super().__new__(cls, values)

    @property
    def is_nonnegative(self) -> bool:
        return not self or self[-1] >= 0

    def padded(self, length: int) -> tuple[int, ...]:
        if length < len(self):
            raise ValueError("cannot pad to a shorter length")
        return tuple(self) + (0,) * (length - len(self))

    def __repr__(self) -> str:
        return f"Signature({tuple(self)!r})"


def _coerce(parts: Sequence[int]) -> Signature:
    return parts if isinstance(parts, Signature) else Signature(parts)


def size(parts: Sequence[int]) -> int:
    """Number of boxes |λ|."""
    return int(sum(parts))


def _pad_pair(inner: Sequence[int], outer: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    a, b = _coerce(inner), _coerce(outer)
    if abs(len(a) - len(b)) > 1:
        raise ValueError("signature lengths may differ by at most one")
    length = max(len(a), len(b))
    return a.padded(length), b.padded(length)


def is_horizontal_strip(inner: Sequence[int], outer: Sequence[int]) -> bool:
    """True iff ``outer / inner`` is a horizontal strip (``inner ≺ outer``).

    Equivalently the two signatures interlace:
    ``outer_1 ≥ inner_1 ≥ outer_2 ≥ inner_2 ≥ ...``.
    """
    a, b = _pad_pair(inner, outer)
    for i in range(len(a)):
        if not b[i] >= a[i]:
            return False
        if i + 1 < len(b) and not a[i] >= b[i + 1]:
            return False
    return True


def is_vertical_strip(inner: Sequence[int], outer: Sequence[int]) -> bool:
    """True iff ``outer / inner`` is a vertical strip (at most one box per row)."""
    a, b = _pad_pair(inner, outer)
    return all(0 <= bi - ai <= 1 for ai, bi in zip(a, b))


def staircase(m: int, N: int) -> Signature:
    """The staircase signature ``((m-1)(N-1), ..., m-1, 0)``."""
    if m < 1 or N < 0:
        raise ValueError("need m >= 1 and N >= 0")
    return Signature((m - 1) * (N - i) for i in range(1, N + 1))


@dataclass(frozen=True)
class CountingMeasure:
    """Finite atomic probability measure with exact rational atoms."""

    atoms: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self) -> None:
        locs = [loc for loc, _ in self.atoms]
        if len(set(locs)) != len(locs):
            raise ValueError("atom locations must be distinct")
        if any(mass <= 0 for _, mass in self.atoms):
            raise ValueError("atom masses must be positive")
        if sum(mass for _, mass in self.atoms) != 1:
            raise ValueError("masses must sum to one")

    @classmethod
    def from_points(cls, points: Iterable[Fraction]) -> "CountingMeasure":
        pts = [Fraction(p) for p in points]
        if not pts:
            raise ValueError("a counting measure needs at least one point")
        merged: dict[Fraction, Fraction] = {}
        for p in pts:
            merged[p] = merged.get(p, Fraction(0)) + Fraction(1, len(pts))
        return cls(tuple(sorted(merged.items(), reverse=True)))

    def __iter__(self) -> Iterator[tuple[Fraction, Fraction]]:
        return iter(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def locations(self) -> list[float]:
        return [float(loc) for loc, _ in self.atoms]

    @property
    def masses(self) -> list[float]:
        return [float(mass) for _, mass in self.atoms]

    def to_json(self) -> list[list[str]]:
        return [[str(loc), str(mass)] for loc, mass in self.atoms]


def counting_measure(parts: Sequence[int]) -> CountingMeasure:
    """Empirical measure of the rescaled particle positions ``(λ_i + N - i)/N``."""
    lam = _coerce(parts)
    N = len(lam)
    if N == 0:
        raise ValueError("counting measure of an empty signature is undefined")
    return CountingMeasure.from_points(Fraction(lam[i - 1] + N - i, N) for i in range(1, N + 1))


def measure_moment(measure: CountingMeasure, p: int) -> Fraction:
    """Exact moment ``Σ mass · location**p``."""
    if p < 0:
        raise ValueError("moment order must be nonnegative")
    return sum((mass * loc**p for loc, mass in measure.atoms), Fraction(0))


def interlacing_below(nu: Sequence[int], length: int | None = None) -> Iterator[Signature]:
    """All nonnegative ``μ ≺ ν`` of the requested length (default ``len(ν) - 1``)."""
    nu = _coerce(nu)
    L = len(nu) - 1 if length is None else length
    if L not in (len(nu) - 1, len(nu)):
        raise ValueError("length must be len(nu) or len(nu) - 1")
    ranges = []
    for j in range(L):
        lo = nu[j + 1] if j + 1 < len(nu) else 0
        ranges.append(range(lo, nu[j] + 1))

    def rec(j: int, acc: list[int]) -> Iterator[Signature]:
        if j == L:
            yield Signature(acc)
            return
        for v in ranges[j]:
            acc.append(v)
            yield from rec(j + 1, acc)
            acc.pop()

    yield from rec(0, [])


def vertical_strips_above(mu: Sequence[int]) -> Iterator[Signature]:
    """All ``ν`` of the same length with ``ν / μ`` a vertical strip."""
    mu = _coerce(mu)
    L = len(mu)

    def rec(j: int, acc: list[int]) -> Iterator[Signature]:
        if j == L:
            yield Signature(acc)
            return
        for eps in (0, 1):
            v = mu[j] + eps
            if j and v > acc[-1]:
                continue
            acc.append(v)
            yield from rec(j + 1, acc)
            acc.pop()

    yield from rec(0, [])
