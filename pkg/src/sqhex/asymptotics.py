"""Limit shape of a uniform (staircase) boundary.

Everything here is driven by the rational function

    F_{κ,m}(z) = κ/(1-κ)·U(z) + V(z) + W(z)/(1-κ),

    U(z) = (z/n) Σ_{i∈I₂} y_i/(1 + y_i z),
    V(z) = (z/n) Σ_j 1/(z - x_j),
    W(z) = (z/n) Σ_j (m z^{m-1}/(z^m - x_j^m) - 1/(z - x_j)).

Moments of the limiting counting measure are contour integrals of powers of
``F`` around the weights ``x_j``; the limit density at ``(χ, κ)`` is
``Arg(z₀)/π`` for the root ``z₀`` of ``F_{κ,m}(z) = χ/(1-κ)`` in the sector
``0 < Arg z < π/m``, and ``z ↦ (χ, κ)`` is recovered in closed form from
``F(z) = F(z̄)``.

Coordinates: the row at height ``κ`` carries ``L = N - ⌊κN⌋`` particles and the
limit measure describes ``(λ_i + L - i)/L``; ``χ = (1-κ)u`` is the horizontal
coordinate of the rescaled lattice.
"""

from __future__ import annotations

import cmath
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.optimize

from .schur import WeightModel

__all__ = [
    "ContourQuadrature",
    "LiquidPoint",
    "F_kappa_m",
    "F_prime",
    "uvw",
    "singularities",
    "default_contours",
    "limit_moments",
    "root_polynomial",
    "solve_root",
    "density",
    "cdf",
    "support_edge",
    "liquid_inverse",
    "frozen_boundary",
    "burgers_residual",
    "stieltjes_limit",
    "stieltjes_contour",
]

#: distance below which an evaluation point counts as a pole
POLE_TOL = 1e-12


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class ContourQuadrature:
    """Trapezoid rule on the circle ``|z - center| = radius``.

    ``integrate(f)`` approximates ``(1/2πi) ∮ f(z) dz``; for integrands that
    are analytic in an annulus around the circle the error decays
    geometrically in ``nodes``.
    """

    center: complex
    radius: float
    nodes: int = 512

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.nodes < 2 or self.nodes % 2:
            raise ValueError("node count must be even and >= 2")

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        theta = 2 * np.pi * np.arange(self.nodes) / self.nodes
        e = np.exp(1j * theta)
        return self.center + self.radius * e, e

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> complex:
        z, e = self.points()
        return complex(self.radius * np.mean(f(z) * e))

    def doubled(self) -> "ContourQuadrature":
        return ContourQuadrature(self.center, self.radius, 2 * self.nodes)

    def scaled(self, factor: float) -> "ContourQuadrature":
        return ContourQuadrature(self.center, self.radius * factor, self.nodes)


@dataclass(frozen=True)
class LiquidPoint:
    """A point ``(χ, κ)`` of the rescaled lattice and its root ``z``.

    ``liquid`` is False when the equation has no root in the open sector; ``z``
    is then the real root that bounds the frozen phase.
    """

    chi: float
    kappa: float
    z: complex
    liquid: bool

    @property
    def density(self) -> float:
        return cmath.phase(self.z) / math.pi if self.z != 0 else 0.0


# ---------------------------------------------------------------------------
# the function F and its pieces


def _model_arrays(model: WeightModel) -> tuple[np.ndarray, np.ndarray, int]:
    x = np.asarray(model.x, dtype=float)
    y = np.array([model.y[i] for i in model.I2], dtype=float)
    m = model.m if model.m is not None else 1
    return x, y, m


def uvw(z, model: WeightModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three building blocks ``U, V, W`` of ``F``, vectorized in ``z``."""
    x, y, m = _model_arrays(model)
    z = np.asarray(z, dtype=complex)
    n = model.n
    zz = z[..., None]
    U = (z / n) * np.sum(y / (1 + y * zz), axis=-1) if len(y) else np.zeros_like(z)
    V = (z / n) * np.sum(1 / (zz - x), axis=-1)
    if m == 1:
        W = np.zeros_like(z)
    else:
        W = (z / n) * np.sum(m * zz ** (m - 1) / (zz**m - x**m) - 1 / (zz - x), axis=-1)
    return U, V, W


def _uvw_prime(z, model: WeightModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x, y, m = _model_arrays(model)
    z = np.asarray(z, dtype=complex)
    n = model.n
    zz = z[..., None]
    Up = np.sum(y / (1 + y * zz) ** 2, axis=-1) / n if len(y) else np.zeros_like(z)
    Vp = np.sum(-x / (zz - x) ** 2, axis=-1) / n
    if m == 1:
        Wp = np.zeros_like(z)
    else:
        # d/dz [m z^m/(z^m - a)] = -m² a z^{m-1}/(z^m - a)²
        a = x**m
        Wp = np.sum(-(m**2) * a * zz ** (m - 1) / (zz**m - a) ** 2, axis=-1) / n - Vp
    return Up, Vp, Wp


def F_kappa_m(z, kappa: float, model: WeightModel):
    """``F_{κ,m}(z)``; scalar in, scalar out, arrays broadcast."""
    if not 0 <= kappa < 1:
        raise ValueError("kappa must lie in [0, 1)")
    zarr = np.asarray(z, dtype=complex)
    dist = np.min(np.abs(zarr[..., None] - singularities(model)[None, :]), axis=-1) if zarr.ndim else np.min(np.abs(zarr - singularities(model)))
    if np.any(dist < POLE_TOL):
        raise ZeroDivisionError("F evaluated at a pole")
    U, V, W = uvw(zarr, model)
    out = kappa / (1 - kappa) * U + V + W / (1 - kappa)
    return complex(out) if np.ndim(z) == 0 else out


def F_prime(z, kappa: float, model: WeightModel):
    """Derivative of ``F_{κ,m}`` in ``z``."""
    Up, Vp, Wp = _uvw_prime(z, model)
    out = kappa / (1 - kappa) * Up + Vp + Wp / (1 - kappa)
    return complex(out) if np.ndim(z) == 0 else out


def singularities(model: WeightModel) -> np.ndarray:
    """Poles of ``F``: ``x_j``, the other roots of ``z^m = x_j^m``, and ``-1/y_i``."""
    x, y, m = _model_arrays(model)
    pts = [complex(v) for v in x]
    for v in x:
        for k in range(1, m):
            pts.append(v * cmath.exp(2j * math.pi * k / m))
    pts += [complex(-1 / v) for v in y]
    return np.unique(np.array(pts))


def default_contours(model: WeightModel, nodes: int = 512, factor: float = 0.5) -> list[ContourQuadrature]:
    """One circle per distinct weight, radius ``factor`` × distance to the nearest other singular point.

    The origin counts as singular because the moment integrand carries ``dz/z``.
    """
    centers = sorted(set(model.x))
    sing = np.append(singularities(model), 0.0)
    out = []
    for c in centers:
        d = np.abs(sing - c)
        d = d[d > 0]
        out.append(ContourQuadrature(complex(c), factor * float(d.min()), nodes))
    return out


# ---------------------------------------------------------------------------
# moments


def limit_moments(kappa: float, p: int, model: WeightModel, nodes: int = 512, contours: Sequence[ContourQuadrature] | None = None, check: bool = True) -> float:
    """``∫ u^p m^κ(du) = Σ_j (1/(p+1)) (1/2πi) ∮_{x_j} F_{κ,m}(z)^{p+1} dz/z``."""
    if p < 0:
        raise ValueError("p must be nonnegative")
    contours = list(contours) if contours is not None else default_contours(model, nodes)

    def total(cs: Sequence[ContourQuadrature]) -> complex:
        return sum(q.integrate(lambda z: F_kappa_m(z, kappa, model) ** (p + 1) / z) for q in cs) / (p + 1)

    val = total(contours)
    if check:
        ref = total([q.doubled() for q in contours])
        if abs(ref - val) > 1e-8 * max(1.0, abs(ref)):
            raise ArithmeticError(f"moment quadrature not converged ({abs(ref - val):.2e})")
        if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
            raise ArithmeticError(f"moment has imaginary part {val.imag:.2e}")
    return float(val.real)


# ---------------------------------------------------------------------------
# roots


def _poly(coeffs_low_first: Sequence[complex]) -> np.polynomial.Polynomial:
    return np.polynomial.Polynomial(np.asarray(coeffs_low_first, dtype=float))


def root_polynomial(chi: float, kappa: float, model: WeightModel) -> np.polynomial.Polynomial:
    """Numerator of ``(1-κ)F_{κ,m}(z) - χ`` after clearing every denominator.

    ``(1-κ)F - χ = κ(U - V) + (V + W) - χ`` and ``V + W = (z/n) Σ m z^{m-1}/(z^m - x_j^m)``,
    so the common denominator is ``∏_i (1 + y_i z) · ∏_j (z^m - x_j^m)``.
    """
    x, y, m = _model_arrays(model)
    n = model.n
    Z = _poly([0, 1])
    one = _poly([1])
    Dy = [_poly([1, v]) for v in y]
    Dx = [_poly([-(v**m)] + [0] * (m - 1) + [1]) for v in x]
    g = [_poly([v ** (m - 1 - k) for k in range(m)]) for v in x]  # (z^m - x^m)/(z - x)

    def prod(ps: Sequence[np.polynomial.Polynomial]) -> np.polynomial.Polynomial:
        out = one
        for q in ps:
            out = out * q
        return out

    Py, Px = prod(Dy), prod(Dx)
    U = sum((v * prod(Dy[:i] + Dy[i + 1:]) for i, v in enumerate(y)), 0 * one) * Px * Z / n
    V = sum((g[j] * prod(Dx[:j] + Dx[j + 1:]) for j in range(len(x))), 0 * one) * Py * Z / n
    VW = sum((m * Z ** (m - 1) * prod(Dx[:j] + Dx[j + 1:]) for j in range(len(x))), 0 * one) * Py * Z / n
    return kappa * (U - V) + VW - chi * Px * Py


def _sector_roots(roots: np.ndarray, m: int, tol: float = 1e-10) -> np.ndarray:
    arg = np.angle(roots)
    return roots[(roots.imag > tol * np.maximum(1, np.abs(roots))) & (arg < math.pi / m + 1e-9)]


def _refine(z: complex, chi: float, kappa: float, model: WeightModel, steps: int = 8) -> complex:
    """Newton polish of a root of ``(1-κ)F - χ`` in the original (non-polynomial) form."""
    for _ in range(steps):
        U, V, W = (complex(a) for a in uvw(z, model))
        Up, Vp, Wp = (complex(a) for a in _uvw_prime(z, model))
        f = kappa * (U - V) + V + W - chi
        fp = kappa * (Up - Vp) + Vp + Wp
        if fp == 0:
            break
        dz = f / fp
        z -= dz
        if abs(dz) < 1e-15 * max(1.0, abs(z)):
            break
    return z


def _kappa0_root(chi: float, model: WeightModel) -> complex:
    """Root on the ray ``Arg z = π/m`` at ``κ = 0``: solve ``(1/n)Σ mR/(R + x_j^m) = χ`` for ``R``."""
    x, _, m = _model_arrays(model)
    g = lambda R: np.mean(m * R / (R + x**m)) - chi  # noqa: E731 - increasing in R
    lo, hi = 0.0, 1.0
    while g(hi) < 0:
        hi *= 2
    R = scipy.optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return R ** (1 / m) * cmath.exp(1j * math.pi / m)


def solve_root(chi: float, kappa: float, model: WeightModel) -> LiquidPoint:
    """The distinguished root ``z₀(χ, κ)`` of ``F_{κ,m}(z) = χ/(1-κ)``.

    Inside the liquid region it is the unique root in the sector
    ``0 < Arg z < π/m``.  If the sector holds several roots the choice is made
    by continuation in ``κ`` from the ``κ = 0`` ray root.  If it holds none the
    point is frozen and the nearest real root is returned instead (positive
    for an empty phase, negative for a packed one).
    """
    m = model.m if model.m is not None else 1
    if not 0 <= kappa < 1:
        raise ValueError("kappa must lie in [0, 1)")
    if kappa == 0 and 0 < chi < m:
        return LiquidPoint(chi, kappa, _kappa0_root(chi, model), True)
    roots = root_polynomial(chi, kappa, model).roots()
    cands = _sector_roots(roots, m)
    if len(cands) == 1:
        return LiquidPoint(chi, kappa, _refine(complex(cands[0]), chi, kappa, model), True)
    if len(cands) > 1:
        return LiquidPoint(chi, kappa, _track(chi, kappa, model), True)
    real = roots[np.abs(roots.imag) <= 1e-8 * np.maximum(1, np.abs(roots))].real
    real = real[real != 0]
    if len(real) == 0:
        raise ArithmeticError("no admissible root")
    pos = real[real > 0]
    z = complex(pos.min()) if len(pos) else complex(real.max())
    return LiquidPoint(chi, kappa, z, False)


def _track(chi: float, kappa: float, model: WeightModel) -> complex:
    """Continue the root in ``κ`` from the κ = 0 ray, halving steps on jumps."""
    m = model.m if model.m is not None else 1
    z = _kappa0_root(min(max(chi, 1e-9), m - 1e-9), model)
    k, dk = 0.0, 0.01
    while k < kappa:
        k2 = min(kappa, k + dk)
        roots = root_polynomial(chi, k2, model).roots()
        j = int(np.argmin(np.abs(roots - z)))
        nearest = np.sort(np.abs(roots - z))
        if len(nearest) > 1 and nearest[0] > 0.3 * nearest[1] and dk > 1e-6:
            dk /= 2
            continue
        z, k = complex(roots[j]), k2
        dk = min(0.01, 2 * dk)
    return _refine(z, chi, kappa, model)


def density(u: float, kappa: float, model: WeightModel) -> float:
    """Limit density of ``m^κ`` at ``u``: ``Arg(z₀(χ, κ))/π`` with ``χ = (1-κ)u``."""
    support = support_edge(kappa, model)
    if u <= 0 or u >= support:
        return 0.0
    return solve_root((1 - kappa) * u, kappa, model).density


def support_edge(kappa: float, model: WeightModel) -> float:
    """Right end ``(m + (r/n - 1)κ)/(1-κ)`` of the rescaled domain."""
    m = model.m if model.m is not None else 1
    return (m + (model.r / model.n - 1) * kappa) / (1 - kappa)


def cdf(u: float, kappa: float, model: WeightModel) -> float:
    """``m^κ((-∞, u])`` by integrating the density."""
    if u <= 0:
        return 0.0
    top = support_edge(kappa, model)
    if u >= top:
        return 1.0
    val, _ = scipy.integrate.quad(lambda s: density(s, kappa, model), 0.0, u, limit=200, epsabs=1e-10)
    return min(max(val, 0.0), 1.0)


# ---------------------------------------------------------------------------
# the inverse map and the frozen boundary


def liquid_inverse(z: complex, model: WeightModel) -> tuple[float, float]:
    """``(χ_L(z), κ_L(z))``: the unique ``(χ, κ)`` for which ``z`` and ``z̄`` both solve the root equation.

    From ``κ(U - V) + V + W = χ`` at ``z`` and ``z̄``.
    """
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("liquid_inverse needs Im z > 0")
    (U, Ub), (V, Vb), (W, Wb) = (tuple(complex(a) for a in arr) for arr in uvw(np.array([z, z.conjugate()]), model))
    den = U - Ub - V + Vb
    if abs(den) < 1e-14 * max(1.0, abs(U) + abs(V)):
        raise ZeroDivisionError("degenerate denominator in the inverse map")
    kappa = (Wb - W + Vb - V) / den
    chi = V + W + kappa * (U - V)
    return float(chi.real), float(kappa.real)


def frozen_boundary(model: WeightModel, ts: Sequence[float] | None = None) -> np.ndarray:
    """Points ``(χ, κ)`` of the frozen boundary: images of the positive real axis.

    At a real ``t`` the two conjugate roots merge, so the inverse map becomes
    ``κ = -(V' + W')/(U' - V')``, ``χ = V + W + κ(U - V)`` evaluated at ``t``.
    Points with ``κ`` outside ``[0, 1)`` are dropped.
    """
    if ts is None:
        ts = np.geomspace(1e-3, 1e3, 2001)
    ts = np.asarray(ts, dtype=float)
    sing = singularities(model)
    keep = np.min(np.abs(ts[:, None] - sing[None, :]), axis=1) > 1e-9
    ts = ts[keep]
    U, V, W = uvw(ts, model)
    Up, Vp, Wp = _uvw_prime(ts, model)
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = (-(Vp + Wp) / (Up - Vp)).real
        chi = (V + W + kappa * (U - V)).real
    ok = np.isfinite(kappa) & (kappa >= 0) & (kappa < 1)
    return np.column_stack([chi[ok], kappa[ok]])


# ---------------------------------------------------------------------------
# Burgers equation


def _R_over_zRprime(z: complex, model: WeightModel) -> complex:
    x, y, _ = _model_arrays(model)
    # R'/R = Σ 1/(z - x_j) - Σ y_i/(1 + y_i z)
    dlog = np.sum(1 / (z - x)) - (np.sum(y / (1 + y * z)) if len(y) else 0.0)
    return 1 / (z * dlog)


def burgers_residual(chi: float, kappa: float, model: WeightModel, h: float = 1e-3, convention: str = "consistent") -> complex:
    """Central-difference residual of the complex Burgers equation at ``(χ, κ)``.

    With ``∂/∂x = ∂/∂χ`` and ``∂/∂y = n ∂/∂κ`` the root ``z₀`` satisfies
    ``z_χ - n (R/(zR')) z_κ = 0`` (``convention="consistent"``, the sign that
    follows from differentiating the root equation).  ``convention="literal"``
    evaluates ``z_χ + n (R/(zR')) z_κ`` instead; it does not vanish.
    """
    if convention not in ("consistent", "literal"):
        raise ValueError("convention must be 'consistent' or 'literal'")
    pts = {}
    for dc, dk in ((1, 0), (-1, 0), (0, 1), (0, -1), (0, 0)):
        p = solve_root(chi + dc * h, kappa + dk * h, model)
        if not p.liquid:
            raise ValueError("stencil leaves the liquid region; use a smaller h")
        pts[(dc, dk)] = p.z
    z_chi = (pts[(1, 0)] - pts[(-1, 0)]) / (2 * h)
    z_kappa = (pts[(0, 1)] - pts[(0, -1)]) / (2 * h)
    coef = model.n * _R_over_zRprime(pts[(0, 0)], model)
    sign = -1 if convention == "consistent" else 1
    return z_chi + sign * coef * z_kappa


# ---------------------------------------------------------------------------
# Stieltjes transform


def stieltjes_contour(x: complex, kappa: float, model: WeightModel, nodes: int = 1024) -> complex:
    """``Σ_j (1/2πi) ∮_{x_j} log(z) ∂_z(1 - F/x)/(1 - F/x) dz`` on the default circles.

    Valid when every root of ``F = x`` that belongs to a weight lies inside its
    circle, i.e. for ``|x|`` large; compare :func:`stieltjes_limit`.
    """
    total = 0j
    for q in default_contours(model, nodes):
        total += q.integrate(lambda z: np.log(z) * F_prime(z, kappa, model) / (F_kappa_m(z, kappa, model) - x))
    return total


def stieltjes_limit(x: complex, kappa: float, model: WeightModel, steps: int = 400) -> complex:
    """``∫ m^κ(du)/(x - u)`` for ``x`` off the support.

    The contour integral equals ``Σ_j [log z_j(x) - log x_j]`` where ``z_j(x)``
    is the root of ``F = x`` that tends to ``x_j`` as ``x → ∞``.  The roots are
    continued along the ray from ``x·R/|x|`` (``R`` large) down to ``x`` and the
    logarithm is continued with them, so no branch cut is ever crossed.
    """
    x = complex(x)
    if x == 0:
        raise ValueError("x must be nonzero")
    centers = sorted(set(model.x))
    mult = {c: sum(1 for v in model.x if v == c) for c in centers}
    big = 1e6 * max(1.0, abs(x))
    path = x / abs(x) * np.geomspace(big, abs(x), steps)
    total = 0j
    for c in centers:
        z = complex(c) + c * mult[c] / (model.n * path[0])  # leading-order root near the pole
        z = _root_newton(z, path[0], kappa, model)
        logz = cmath.log(z)
        for xt in path[1:]:
            z_new = _root_newton(z, xt, kappa, model)
            logz += cmath.log(z_new / z)
            z = z_new
        total += logz - math.log(c)
    return total


def _root_newton(z: complex, target: complex, kappa: float, model: WeightModel, steps: int = 30) -> complex:
    for _ in range(steps):
        f = F_kappa_m(z, kappa, model) - target
        dz = f / F_prime(z, kappa, model)
        # damp steps that would jump across a large part of the plane
        if abs(dz) > 0.25 * abs(z):
            dz *= 0.25 * abs(z) / abs(dz)
        z -= dz
        if abs(dz) < 1e-15 * max(1.0, abs(z)):
            break
    return z
