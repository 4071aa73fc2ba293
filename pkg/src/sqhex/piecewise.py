"""Piecewise boundary conditions with well-separated weights.

The bottom boundary is a union of ``s`` dense runs ``[A_i, B_i]``.  With
weights ``x₁ ≫ x₂ ≫ … ≫ x_n`` the Schur generating function factorizes over
the ``n`` weight classes: class ``i`` sees the signature ``φ^{(i)}`` built
from the ``i``-th block of ``N/n`` parts of ``λ``, shifted by the number of
later parts of other classes.  Each class enters the limit formulas only
through its limit counting measure ``𝐦_i``, via

    S(z) = z + M₁z² + M₂z³ + …           (moment series)
    R(z) = 1/S^{(-1)}(z) - 1/z           (R-transform)
    H(u) = ∫₀^{ln u} R(t) dt + ln(ln u/(u - 1)).

Everything that needs derivatives of ``H`` works with truncated power series
in ``s = u - 1``; on the small circles ``|u - 1| = ε`` used by the contour
integrals only the low-order coefficients matter, so the truncated series are
exact surrogates there.  Away from ``u = 1`` the identity

    u H'(u) = St^{(-1)}(ln u) - u/(u - 1)

(``St`` the Stieltjes transform) gives the same function in closed form and
underlies the map from the liquid region to the upper half plane.
"""

from __future__ import annotations

import cmath
import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .lattice import boundary_signature
from .partitions import Signature
from .schur import WeightModel

__all__ = [
    "DEFAULT_ORDER",
    "PowerSeries",
    "ClassMeasure",
    "PiecewiseBoundary",
    "PiecewiseModel",
    "boundary_from_segments",
    "class_partitions",
    "class_measures",
    "moment_series",
    "stieltjes",
    "inverse_stieltjes",
    "r_transform",
    "h_transform",
    "h_series",
    "zh_prime",
    "F_class",
    "piecewise_moments",
    "ab_kernels",
    "cov_limit_piecewise",
    "piecewise_liquid_maps",
    "piecewise_frozen_boundary",
    "piecewise_root",
    "kappa_tail_coefficient",
]

#: default truncation order of every power series
DEFAULT_ORDER = 16


# ---------------------------------------------------------------------------
# truncated power series


class PowerSeries:
    """``c₀ + c₁z + … + c_K z^K`` with arithmetic truncated at order ``K``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[complex], order: int | None = None):
        c = np.asarray(coeffs, dtype=complex).ravel()
        K = len(c) - 1 if order is None else order
        if K < 0:
            raise ValueError("empty power series")
        out = np.zeros(K + 1, dtype=complex)
        out[: min(K + 1, len(c))] = c[: K + 1]
        self.coeffs = out

    # -- basics -------------------------------------------------------------
    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def constant(cls, c: complex, order: int = DEFAULT_ORDER) -> "PowerSeries":
        return cls([c], order)

    @classmethod
    def variable(cls, order: int = DEFAULT_ORDER) -> "PowerSeries":
        return cls([0, 1], order)

    def __getitem__(self, k: int) -> complex:
        return complex(self.coeffs[k]) if 0 <= k <= self.order else 0j

    def __repr__(self) -> str:
        return f"PowerSeries({np.array2string(self.coeffs, precision=6)})"

    def truncate(self, order: int) -> "PowerSeries":
        return PowerSeries(self.coeffs, order)

    def _coerce(self, other) -> "PowerSeries":
        if isinstance(other, PowerSeries):
            return other
        return PowerSeries.constant(complex(other), self.order)

    # -- ring operations ------------------------------------------------------
    def __add__(self, other) -> "PowerSeries":
        o = self._coerce(other)
        K = min(self.order, o.order)
        return PowerSeries(self.coeffs[: K + 1] + o.coeffs[: K + 1])

    __radd__ = __add__

    def __neg__(self) -> "PowerSeries":
        return PowerSeries(-self.coeffs)

    def __sub__(self, other) -> "PowerSeries":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "PowerSeries":
        return self._coerce(other) - self

    def __mul__(self, other) -> "PowerSeries":
        if not isinstance(other, PowerSeries):
            return PowerSeries(self.coeffs * complex(other))
        K = min(self.order, other.order)
        return PowerSeries(np.convolve(self.coeffs[: K + 1], other.coeffs[: K + 1])[: K + 1])

    __rmul__ = __mul__

    def __truediv__(self, other) -> "PowerSeries":
        if isinstance(other, PowerSeries):
            return self * other.reciprocal()
        return PowerSeries(self.coeffs / complex(other))

    def __pow__(self, k: int) -> "PowerSeries":
        if k < 0:
            return self.reciprocal() ** (-k)
        out = PowerSeries.constant(1.0, self.order)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def reciprocal(self) -> "PowerSeries":
        c = self.coeffs
        if c[0] == 0:
            raise ZeroDivisionError("series with zero constant term has no reciprocal")
        out = np.zeros_like(c)
        out[0] = 1 / c[0]
        for k in range(1, len(c)):
            out[k] = -np.dot(c[1 : k + 1], out[k - 1 :: -1][:k]) / c[0]
        return PowerSeries(out)

    # -- calculus -------------------------------------------------------------
    def derivative(self) -> "PowerSeries":
        K = self.order
        if K == 0:
            return PowerSeries([0], 0)
        return PowerSeries(self.coeffs[1:] * np.arange(1, K + 1), K - 1)

    def integral(self) -> "PowerSeries":
        """Antiderivative vanishing at 0 (order grows by one)."""
        return PowerSeries(np.concatenate([[0], self.coeffs / np.arange(1, self.order + 2)]))

    def log(self) -> "PowerSeries":
        c0 = self.coeffs[0]
        if c0 == 0:
            raise ValueError("log of a series with zero constant term")
        inner = (self.derivative() / self.truncate(self.order - 1)).integral()
        return inner + cmath.log(c0)

    def exp(self) -> "PowerSeries":
        c = self.coeffs
        out = np.zeros_like(c)
        out[0] = cmath.exp(c[0])
        k_c = c * np.arange(len(c))
        for k in range(1, len(c)):
            out[k] = np.dot(k_c[1 : k + 1], out[k - 1 :: -1][:k]) / k
        return PowerSeries(out)

    def compose(self, inner: "PowerSeries") -> "PowerSeries":
        """``self(inner(z))``; ``inner`` must have zero constant term."""
        if inner[0] != 0:
            raise ValueError("inner series must vanish at 0")
        K = min(self.order, inner.order)
        out = PowerSeries.constant(self.coeffs[K], K)
        inner = inner.truncate(K)
        for k in range(K - 1, -1, -1):
            out = out * inner + self.coeffs[k]
        return out

    def reversion(self) -> "PowerSeries":
        """Compositional inverse by Lagrange inversion: ``[z^k]f^{(-1)} = (1/k)[w^{k-1}](w/f(w))^k``."""
        c = self.coeffs
        if c[0] != 0 or c[1] == 0:
            raise ValueError("reversion needs c₀ = 0 and c₁ ≠ 0")
        K = self.order
        ratio = PowerSeries(c[1:], K - 1).reciprocal()  # w/f(w)
        out = np.zeros(K + 1, dtype=complex)
        power = PowerSeries.constant(1.0, K - 1)
        for k in range(1, K + 1):
            power = power * ratio
            out[k] = power[k - 1] / k
        return PowerSeries(out)

    def __call__(self, z):
        """Horner evaluation (vectorized)."""
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.coeffs[-1], dtype=complex)
        for c in self.coeffs[-2::-1]:
            out = out * z + c
        return complex(out) if out.ndim == 0 else out

    def real_if_close(self, tol: float = 1e-12) -> np.ndarray:
        return np.real_if_close(self.coeffs, tol=tol / np.finfo(float).eps)


# ---------------------------------------------------------------------------
# measures


@dataclass(frozen=True)
class ClassMeasure:
    """A compactly supported measure: point masses plus piecewise-constant densities.

    ``atoms`` are ``(location, mass)``; ``intervals`` are ``(lo, hi, density)``.
    """

    atoms: tuple[tuple[float, float], ...] = ()
    intervals: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", tuple((float(a), float(w)) for a, w in self.atoms))
        object.__setattr__(self, "intervals", tuple((float(a), float(b), float(d)) for a, b, d in self.intervals))
        if any(w < 0 for _, w in self.atoms) or any(b <= a or d < 0 for a, b, d in self.intervals):
            raise ValueError("masses and densities must be nonnegative, intervals nondegenerate")

    @classmethod
    def point(cls, c: float) -> "ClassMeasure":
        return cls(atoms=((c, 1.0),))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "ClassMeasure":
        return cls(intervals=((lo, hi, 1.0 / (hi - lo)),))

    @property
    def mass(self) -> float:
        return sum(w for _, w in self.atoms) + sum((b - a) * d for a, b, d in self.intervals)

    def moment(self, k: int) -> float:
        atoms = sum(w * a**k for a, w in self.atoms)
        dens = sum(d * (b ** (k + 1) - a ** (k + 1)) / (k + 1) for a, b, d in self.intervals)
        return float(atoms + dens)

    def support(self) -> tuple[float, float]:
        pts = [a for a, _ in self.atoms] + [v for a, b, _ in self.intervals for v in (a, b)]
        return min(pts), max(pts)

    def stieltjes(self, t):
        """``St(t) = ∫ m(dx)/(t - x)`` (vectorized; principal log for the densities)."""
        t = np.asarray(t, dtype=complex)
        out = np.zeros(t.shape, dtype=complex)
        for a, w in self.atoms:
            out += w / (t - a)
        for a, b, d in self.intervals:
            out += d * (np.log(t - a) - np.log(t - b))
        return complex(out) if out.ndim == 0 else out

    def stieltjes_prime(self, t):
        t = np.asarray(t, dtype=complex)
        out = np.zeros(t.shape, dtype=complex)
        for a, w in self.atoms:
            out -= w / (t - a) ** 2
        for a, b, d in self.intervals:
            out += d * (1 / (t - a) - 1 / (t - b))
        return complex(out) if out.ndim == 0 else out

    def to_json(self) -> dict:
        return {"atoms": [list(a) for a in self.atoms], "intervals": [list(i) for i in self.intervals]}


def moment_series(measure: ClassMeasure, K: int = DEFAULT_ORDER) -> PowerSeries:
    """``S(z) = z + M₁z² + … + M_{K-1}z^K``."""
    return PowerSeries([0.0] + [measure.moment(k) for k in range(K)], K)


def stieltjes(measure: ClassMeasure, t):
    """``St(t) = Σ mass/(t - location)`` (with densities integrated exactly)."""
    if np.any(np.isclose(np.imag(t), 0) & _on_support(measure, np.real(t))):
        raise ValueError("Stieltjes transform evaluated on the support")
    return measure.stieltjes(t)


def _on_support(measure: ClassMeasure, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    hit = np.zeros(x.shape, dtype=bool)
    for a, _ in measure.atoms:
        hit |= x == a
    for a, b, _ in measure.intervals:
        hit |= (x >= a) & (x <= b)
    return hit


def _newton_stieltjes(measure: ClassMeasure, w: complex, t: complex, tol: float, steps: int = 60) -> complex | None:
    for _ in range(steps):
        d = measure.stieltjes_prime(t)
        if d == 0:
            return None
        step = (measure.stieltjes(t) - w) / d
        t -= step
        if abs(step) <= tol * max(1.0, abs(t)):
            return t
    return None


def inverse_stieltjes(measure: ClassMeasure, w: complex, start: complex | None = None, tol: float = 1e-14) -> complex:
    """The branch of ``St^{(-1)}(w)`` that tends to ``∞`` as ``w → 0`` (``≈ 1/w + M₁``).

    Newton's method from the far-field guess; if that fails the root is
    continued along the segment from ``0`` to ``w``.
    """
    w = complex(w)
    if w == 0:
        raise ZeroDivisionError("St^{(-1)}(0) = ∞")
    m1 = measure.moment(1) / measure.mass
    t = _newton_stieltjes(measure, w, start if start is not None else 1 / w + m1, tol)
    if t is not None:
        return t
    t = 1 / (w / 1024) + m1
    for s in np.linspace(1 / 1024, 1, 400):
        t = _newton_stieltjes(measure, s * w, t, tol, steps=100)
        if t is None:
            break
    if t is None:
        raise ArithmeticError(f"St^(-1)({w}) did not converge")
    return t


def r_transform(series: PowerSeries) -> PowerSeries:
    """``R(z) = 1/S^{(-1)}(z) - 1/z`` for ``S = z + M₁z² + …``; the result has order ``K - 1``."""
    if abs(series[0]) > 0 or abs(series[1] - 1) > 1e-12:
        raise ValueError("moment series must start z + O(z²)")
    inv = series.reversion()  # z(1 + b₁z + …)
    K = series.order
    recip = PowerSeries(inv.coeffs[1:], K - 1).reciprocal()  # 1/(1 + b₁z + …)
    return PowerSeries(recip.coeffs[1:], K - 2) if K >= 2 else PowerSeries([0], 0)


def _log_ratio_series(K: int) -> tuple[PowerSeries, PowerSeries]:
    """``L(s) = ln(1 + s)`` and ``ln(L(s)/s)`` to order ``K``."""
    L = PowerSeries([0] + [(-1) ** (k + 1) / k for k in range(1, K + 2)], K + 1)
    ratio = PowerSeries(L.coeffs[1:], K)  # L(s)/s
    return L.truncate(K), ratio.log()


def h_series(measure: ClassMeasure, K: int = DEFAULT_ORDER) -> PowerSeries:
    """``H_𝐦(1 + s)`` as a power series in ``s``."""
    R = r_transform(moment_series(measure, K + 2))
    P = R.integral()  # ∫₀^t R
    L, log_ratio = _log_ratio_series(K)
    return P.truncate(K).compose(L) + log_ratio


def h_transform(measure: ClassMeasure, u: complex, K: int = 40) -> complex:
    """``H_𝐦(u) = ∫₀^{ln u} R(t)dt + ln(ln u/(u - 1))`` with the principal log.

    ``∫R`` is summed from the R-series, so ``ln u`` must lie within its disc of
    convergence; ``H(1) = 0``.
    """
    u = complex(u)
    if u == 1:
        return 0j
    t = cmath.log(u)
    P = r_transform(moment_series(measure, K + 2)).integral()
    return P(t) + cmath.log(t / (u - 1))


def zh_prime(measure: ClassMeasure, z, K: int = DEFAULT_ORDER, closed_form: bool = False):
    """``g(z) = z H'_𝐦(z)``.

    By default the truncated series around ``z = 1``; ``closed_form=True``
    evaluates ``St^{(-1)}(ln z) - z/(z - 1)`` pointwise instead.
    """
    if closed_form:
        zs = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.array([inverse_stieltjes(measure, cmath.log(v)) - v / (v - 1) for v in zs])
        return complex(out[0]) if np.ndim(z) == 0 else out.reshape(np.shape(z))
    return _g_series(measure, K)(np.asarray(z, dtype=complex) - 1)


_G_CACHE: dict[tuple[ClassMeasure, int], PowerSeries] = {}


def _g_series(measure: ClassMeasure, K: int) -> PowerSeries:
    key = (measure, K)
    if key not in _G_CACHE:
        H = h_series(measure, K + 1)
        dH = H.derivative()
        _G_CACHE[key] = (dH * PowerSeries([1, 1], dH.order)).truncate(K)
    return _G_CACHE[key]


# ---------------------------------------------------------------------------
# boundaries and class decomposition


@dataclass(frozen=True)
class PiecewiseBoundary:
    """Runs ``[a_i, b_i]`` of the rescaled bottom boundary, ``a₁ < b₁ < … < b_s``, ``Σ(b_i - a_i) = 1``."""

    segments: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self) -> None:
        segs = tuple((Fraction(a).limit_denominator(10**9), Fraction(b).limit_denominator(10**9)) for a, b in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValueError("need at least one segment")
        flat = [v for s in segs for v in s]
        if any(b <= a for a, b in zip(flat, flat[1:])):
            raise ValueError("segments must satisfy a₁ < b₁ < a₂ < … < b_s")
        if sum(b - a for a, b in segs) != 1:
            raise ValueError("segment lengths must sum to 1")

    def realize(self, N: int) -> tuple[tuple[int, ...], Signature]:
        return boundary_from_segments(self.segments, N)

    def class_limits(self, n: int) -> list[ClassMeasure]:
        """Limit counting measures ``𝐦_1..𝐦_n`` (class 1 holds the rightmost ``1/n`` of the boundary).

        A class sees the positions ``(Ω - 1)/(N/n)``, i.e. the boundary scaled by
        ``n``, with unit density.
        """
        out = []
        cuts = [Fraction(0)]
        total = Fraction(0)
        for a, b in self.segments:
            total += b - a
            cuts.append(total)
        for i in range(1, n + 1):
            hi_mass = 1 - Fraction(i - 1, n)
            lo_mass = 1 - Fraction(i, n)
            pieces = []
            for (a, b), c0, c1 in zip(self.segments, cuts, cuts[1:]):
                lo = max(c0, lo_mass)
                hi = min(c1, hi_mass)
                if hi > lo:
                    pieces.append((float(n * (a + lo - c0)), float(n * (a + hi - c0)), 1.0))
            out.append(ClassMeasure(intervals=tuple(pieces)))
        return out


def boundary_from_segments(segments: Sequence[tuple[float, float]], N: int) -> tuple[tuple[int, ...], Signature]:
    """``Ω`` as the concatenated runs ``A_i..B_i`` with ``A_i = a_iN + 1``, ``B_i = b_iN``, and ``λ`` with ``Ω = (λ_N + 1, …, λ₁ + N)``."""
    segs = PiecewiseBoundary(tuple(segments)).segments
    omega: list[int] = []
    for a, b in segs:
        A, B = a * N, b * N
        if A.denominator != 1 or B.denominator != 1:
            raise ValueError(f"segment ({a}, {b}) is not integral at N={N}")
        if omega and int(A) + 1 <= omega[-1]:
            raise ValueError("rounded segments overlap")
        omega.extend(range(int(A) + 1, int(B) + 1))
    if len(omega) != N:
        raise ValueError("segments do not realize N positions")
    return tuple(omega), boundary_signature(omega)


def _check_weights(weights: WeightModel) -> None:
    if any(b >= a for a, b in zip(weights.x, weights.x[1:])):
        raise ValueError("class decomposition needs x₁ > x₂ > … > x_n")


def class_partitions(lam: Sequence[int], weights: WeightModel) -> list[Signature]:
    """``φ^{(i,σ₀)}`` for the canonical ordering ``x_{σ₀(1)} ≥ x_{σ₀(2)} ≥ …``.

    ``σ₀`` lists the indices of class 1 first, then class 2, …; part ``j``
    is shifted by ``η_j``, the number of later indices of another class.
    """
    _check_weights(weights)
    n, N = weights.n, len(lam)
    if N % n:
        raise ValueError("N must be a multiple of n")
    M = N // n
    return [Signature(int(lam[(i - 1) * M + k]) + (n - i) * M for k in range(M)) for i in range(1, n + 1)]


def class_measures(lam: Sequence[int], weights: WeightModel) -> list[ClassMeasure]:
    """Counting measures ``(1/M) Σ_k δ((φ_k + M - k)/M)`` of the class partitions."""
    out = []
    for phi in class_partitions(lam, weights):
        M = len(phi)
        out.append(ClassMeasure(atoms=tuple(((phi[k] + M - 1 - k) / M, 1.0 / M) for k in range(M))))
    return out


@dataclass(frozen=True)
class PiecewiseModel:
    """Periodic weights together with the class measures ``𝐦_1..𝐦_n``."""

    weights: WeightModel
    measures: tuple[ClassMeasure, ...]
    order: int = DEFAULT_ORDER

    def __post_init__(self) -> None:
        _check_weights(self.weights)
        if len(self.measures) != self.weights.n:
            raise ValueError("need one class measure per residue")
        for mu in self.measures:
            if abs(mu.mass - 1) > 1e-12:
                raise ValueError("class measures must have unit mass")

    @classmethod
    def from_segments(cls, segments: Sequence[tuple[float, float]], weights: WeightModel, order: int = DEFAULT_ORDER) -> "PiecewiseModel":
        return cls(weights, tuple(PiecewiseBoundary(tuple(segments)).class_limits(weights.n)), order)

    @classmethod
    def from_signature(cls, lam: Sequence[int], weights: WeightModel, order: int = DEFAULT_ORDER) -> "PiecewiseModel":
        return cls(weights, tuple(class_measures(lam, weights)), order)

    @property
    def n(self) -> int:
        return self.weights.n

    @cached_property
    def y_scaled(self) -> tuple[float, ...]:
        """``y_l x₁`` for every square-row residue ``l``."""
        return tuple(v * self.weights.x[0] for v in self.weights.y.values())

    def g(self, i: int, z):
        """``z H'_{𝐦_i}(z)`` from the series around 1."""
        return zh_prime(self.measures[i - 1], z, self.order)

    def contour_radius(self) -> float:
        """Radius of the circles around 1: half the root-test estimate of the
        radius of convergence of every ``z H'`` series, capped at 0.3."""
        radii = [0.3]
        for mu in self.measures:
            c = np.abs(_g_series(mu, self.order).coeffs)
            k = np.arange(len(c))
            tail = (k >= len(c) // 2) & (c > 1e-14)
            if np.any(tail):
                radii.append(0.5 * float(np.min(c[tail] ** (-1.0 / k[tail]))))
        return min(radii)


# ---------------------------------------------------------------------------
# moments and covariance


def _y_term(z, model: PiecewiseModel):
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape, dtype=complex)
    for a in model.y_scaled:
        out += a * z / (1 + a * z)
    return out


def F_class(z, i: int, kappa: float, model: PiecewiseModel, closed_form: bool = False):
    """``F_{i,κ}(z) = (1/n) z/(z - 1) + z A_i(z)/(1 - κ)``.

    ``z A_i(z) = [κ Σ_l y_l x₁ z/(1 + y_l x₁ z)]_{i=1} - κ(n - i)/n + z H'_{𝐦_i}(z)/n``.
    """
    n = model.n
    z = np.asarray(z, dtype=complex)
    g = zh_prime(model.measures[i - 1], z, model.order, closed_form=closed_form)
    zA = g / n - kappa * (n - i) / n
    if i == 1:
        zA = zA + kappa / n * _y_term(z, model)
    out = z / (n * (z - 1)) + zA / (1 - kappa)
    return complex(out) if out.ndim == 0 else out


def _circle(radius: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    e = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    return 1 + radius * e, e


def piecewise_moments(kappa: float, p: int, model: PiecewiseModel, nodes: int = 256, radius: float | None = None, check: bool = True) -> float:
    """``∫ x^p 𝐦^κ(dx) = (1/(p+1)) Σ_i (1/2πi) ∮_{|z-1|=ε} F_{i,κ}(z)^{p+1} dz/z``.

    ``F_{i,κ}`` equals ``z Q'_{i,κ}(z) + (n - i)/n + z/(n(z - 1))``.
    """
    if p < 0:
        raise ValueError("p must be nonnegative")
    r = radius if radius is not None else model.contour_radius()

    def total(k: int) -> complex:
        z, e = _circle(r, k)
        return sum(r * np.mean(F_class(z, i, kappa, model) ** (p + 1) / z * e) for i in range(1, model.n + 1)) / (p + 1)

    val = total(nodes)
    if check:
        ref = total(2 * nodes)
        if abs(ref - val) > 1e-9 * max(1.0, abs(ref)):
            raise ArithmeticError(f"moment quadrature not converged ({abs(ref - val):.2e})")
        if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
            raise ArithmeticError(f"moment has imaginary part {val.imag:.2e}")
    return float(val.real)


def _divided_difference(g: PowerSeries) -> np.ndarray:
    """Coefficients ``D[a, b]`` of ``(g(1+s) - g(1+t))/(s - t) = Σ D[a,b] s^a t^b``."""
    K = g.order
    D = np.zeros((K, K), dtype=complex)
    for k in range(1, K + 1):
        for a in range(k):
            D[a, k - 1 - a] = g[k]
    return D


def _poly2_eval(C: np.ndarray, s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``Σ C[a,b] s^a t^b`` on broadcast arrays."""
    sp = s[..., None] ** np.arange(C.shape[0])
    tp = t[..., None] ** np.arange(C.shape[1])
    return np.einsum("...a,ab,...b->...", sp, C, tp)


def _b_kernel(g: PowerSeries, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``∂²_{zw} log(1 - (z-1)(w-1)(g(z) - g(w))/(z - w))`` by exact bivariate polynomial calculus."""
    D = _divided_difference(g)
    K = D.shape[0]
    Phi = np.zeros((K + 1, K + 1), dtype=complex)
    Phi[1:, 1:] = -D
    Phi[0, 0] = 1.0
    a = np.arange(K + 1)
    Phi_s = (Phi * a[:, None])[1:, :]
    Phi_t = (Phi * a[None, :])[:, 1:]
    Phi_st = (Phi * a[:, None] * a[None, :])[1:, 1:]
    s, t = z - 1, w - 1
    f = _poly2_eval(Phi, s, t)
    fs = _poly2_eval(Phi_s, s, t)
    ft = _poly2_eval(Phi_t, s, t)
    fst = _poly2_eval(Phi_st, s, t)
    return fst / f - fs * ft / f**2


def ab_kernels(z, w, j: int, kappa: float, model: PiecewiseModel):
    """``(A_j(z), B_j(z, w))``.

    ``A_j(z) = [κ/n Σ_l y_l x₁/(1 + y_l x₁ z)]_{j=1} - (κ/n)(n - j)/z + H'_{𝐦_j}(z)/n`` and
    ``B_j(z, w) = ∂²/∂z∂w log(1 - (z - 1)(w - 1)(zH'(z) - wH'(w))/(z - w))``.
    """
    if not 1 <= j <= model.n:
        raise ValueError("class index out of range")
    n = model.n
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    g = _g_series(model.measures[j - 1], model.order)
    A = g(z - 1) / (n * z) - kappa * (n - j) / (n * z)
    if j == 1:
        A = A + kappa / n * _y_term(z, model) / z
    B = _b_kernel(g, z, w)
    if A.ndim == 0 and B.ndim == 0:
        return complex(A), complex(B)
    return A, B


def cov_limit_piecewise(l1: int, kappa1: float, l2: int, kappa2: float, model: PiecewiseModel, nodes: int = 512, radius: float | None = None, inner_factor: float = 0.9, per_class: bool = False):
    """Limit of ``cov(p_{l₁} at κ₁, p_{l₂} at κ₂)/N^{l₁+l₂}``.

    ``Σ_j (2πi)^{-2} ∮∮ ((1-κ₁)F_{j,κ₁}(z))^{l₁} ((1-κ₂)F_{j,κ₂}(w))^{l₂} [B_j(z,w) + 1/(z-w)²] dz dw``
    on circles around 1; the variable of the larger ``κ`` runs on the inner
    circle.  ``per_class=True`` also returns the ``n`` class contributions.
    """
    if l1 < 1 or l2 < 1:
        raise ValueError("l₁, l₂ must be >= 1")
    for k in (kappa1, kappa2):
        if not 0 < k < 1:
            raise ValueError("κ must lie in (0, 1)")
    r = radius if radius is not None else model.contour_radius()
    rz, rw = (r, r * inner_factor) if kappa2 >= kappa1 else (r * inner_factor, r)
    z, ez = _circle(rz, nodes)
    w, ew = _circle(rw, nodes)
    parts = []
    for j in range(1, model.n + 1):
        fz = ((1 - kappa1) * F_class(z, j, kappa1, model)) ** l1 * rz * ez
        gw = ((1 - kappa2) * F_class(w, j, kappa2, model)) ** l2 * rw * ew
        _, B = ab_kernels(z[:, None], w[None, :], j, kappa1, model)
        kern = B + 1 / (z[:, None] - w[None, :]) ** 2
        val = np.mean(fz[:, None] * gw[None, :] * kern)
        if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
            raise ArithmeticError(f"class {j} covariance has imaginary part {val.imag:.2e}")
        parts.append(float(val.real))
    total = float(sum(parts))
    return (total, parts) if per_class else total


# ---------------------------------------------------------------------------
# liquid region maps


def _pq(t, i: int, model: PiecewiseModel):
    mu = model.measures[i - 1]
    St = mu.stieltjes(t)
    z = np.exp(St)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = -1 / np.expm1(-St)  # z/(z - 1); infinite where St = 0
    p = _y_term(z, model) if i == 1 else np.zeros_like(q)
    return p, q, z


def piecewise_liquid_maps(t: complex, i: int, model: PiecewiseModel) -> tuple[float, float]:
    """``(χ, κ)`` of the point whose class-``i`` root is ``z = exp(St_{𝐦_i}(t))``, ``t`` in the upper half plane.

    From ``F_{i,κ}(z) = χ/(1 - κ)`` and its conjugate, with ``p`` the
    ``y``-term (class 1 only) and ``q = z/(z - 1)``:
    ``κ = (t̄ - t)/(p(t) - p(t̄) - q(t) + q(t̄))`` and
    ``χ = (t + κ(p(t) - q(t)) - κ(n - i))/n``.
    """
    t = complex(t)
    if not t.imag > 0:
        raise ValueError("t must lie in the upper half plane")
    n = model.n
    tb = t.conjugate()
    p, q, _ = _pq(np.array([t, tb]), i, model)
    den = p[0] - p[1] - q[0] + q[1]
    if den == 0:
        raise ZeroDivisionError("degenerate map: q(t) = q(t̄)")
    kappa = (tb - t) / den
    chi = (t + kappa * (p[0] - q[0]) - kappa * (n - i)) / n
    if abs(kappa.imag) > 1e-9 * max(1.0, abs(kappa)) or abs(chi.imag) > 1e-9 * max(1.0, abs(chi)):
        raise ArithmeticError("liquid map produced a non-real point")
    return float(chi.real), float(kappa.real)


def _off_support(mu: ClassMeasure, ts: np.ndarray, gap: float = 1e-9) -> np.ndarray:
    keep = np.ones(len(ts), dtype=bool)
    for loc, _ in mu.atoms:
        keep &= np.abs(ts - loc) > gap
    for lo, hi, _ in mu.intervals:
        keep &= (ts < lo - gap) | (ts > hi + gap)
    return keep


def piecewise_frozen_boundary(i: int, model: PiecewiseModel, ts: Sequence[float] | None = None) -> np.ndarray:
    """Points ``(χ, κ)`` of the class-``i`` frozen boundary, images of real ``t`` off the support.

    At a real ``t`` the two conjugate roots merge: with ``g = p - q`` the map
    becomes ``κ = -1/g'(t)``, ``χ = (t + κ(g(t) - (n - i)))/n``.  Points with
    ``κ`` outside ``[0, 1)`` are dropped.
    """
    mu = model.measures[i - 1]
    lo, hi = mu.support()
    if ts is None:
        width = max(hi - lo, 1.0)
        ts = np.linspace(lo - 4 * width, hi + 4 * width, 4001)
    ts = np.asarray(ts, dtype=float)
    ts = ts[_off_support(mu, ts)]
    p, q, z = _pq(ts.astype(complex), i, model)
    dS = mu.stieltjes_prime(ts.astype(complex))
    dq = -q * (q - 1) * dS
    dp = sum(a * z / (1 + a * z) ** 2 for a in model.y_scaled) * dS if i == 1 else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = (-1 / (dp - dq)).real
        chi = ((ts + kappa * (p - q - (model.n - i))) / model.n).real
    ok = np.isfinite(kappa) & (kappa >= 0) & (kappa < 1)
    return np.column_stack([chi[ok], kappa[ok]])


def kappa_tail_coefficient(i: int, model: PiecewiseModel, bernoulli_term: bool = True) -> float:
    """Coefficient ``c`` in ``κ(t) = 1 + c/|t|² + O(|t|^{-3})`` as ``|t| → ∞``.

    ``c = α² - β + 1/12 - [Σ_l y_l x₁/(1 + y_l x₁)²]_{i=1}`` with ``α, β`` the
    first two moments of ``𝐦_i``; the ``1/12`` comes from
    ``z/(z - 1) = 1/St + 1/2 + St/12 + …``.  ``bernoulli_term=False`` drops it.
    """
    mu = model.measures[i - 1]
    alpha, beta = mu.moment(1), mu.moment(2)
    c = alpha**2 - beta + (1 / 12 if bernoulli_term else 0.0)
    if i == 1:
        c -= sum(a / (1 + a) ** 2 for a in model.y_scaled)
    return float(c)


def _chi_equation(t, chi: float, kappa: float, i: int, model: PiecewiseModel):
    """``t + κ(p(t) - q(t)) - κ(n - i) - nχ`` and its ``t``-derivative."""
    p, q, z = _pq(t, i, model)
    dS = model.measures[i - 1].stieltjes_prime(t)
    dq = -q * (q - 1) * dS
    dp = sum(a * z / (1 + a * z) ** 2 for a in model.y_scaled) * dS if i == 1 else 0.0
    return t + kappa * (p - q) - kappa * (model.n - i) - model.n * chi, 1 + kappa * (dp - dq)


def piecewise_root(chi: float, kappa: float, i: int, model: PiecewiseModel, starts: Sequence[complex] | None = None, tol: float = 1e-13) -> tuple[complex, complex]:
    """Upper-half-plane root of ``F_{i,κ}(z) = χ/(1 - κ)``, returned as ``(z, t)``.

    ``t`` is the upper-half-plane preimage, ``z = exp(St(t̄))``; the
    conjugate ``exp(St(t))`` solves the same equation.

    Solves the equivalent ``t + κ(p(t) - q(t)) - κ(n - i) = nχ`` by Newton's
    method in ``t`` from a spread of starting points.
    """
    mu = model.measures[i - 1]
    lo, hi = mu.support()
    width = max(hi - lo, 1.0)
    if starts is None:
        starts = [complex(x, y) for x in np.linspace(lo - width, hi + width, 9) for y in (0.05 * width, 0.3 * width, width, 3 * width)]
    best, best_res = None, math.inf
    for t in starts:
        for _ in range(80):
            f, df = _chi_equation(t, chi, kappa, i, model)
            if df == 0:
                break
            step = f / df
            # damp steps that would leave the upper half plane
            while t.imag - step.imag <= 0 and abs(step) > 1e-300:
                step /= 2
            t -= step
            if abs(step) < tol * max(1.0, abs(t)):
                break
        res = abs(_chi_equation(t, chi, kappa, i, model)[0])
        if t.imag > 1e-9 and res < 1e-10 and res < best_res:
            best, best_res = t, res
    if best is None:
        raise ArithmeticError(f"no upper-half-plane root at (χ, κ) = ({chi}, {kappa}) for class {i}")
    # t in the upper half plane corresponds to the conjugate root: Im St(t) < 0
    z = cmath.exp(complex(mu.stieltjes(best))).conjugate()
    return z, best
