"""Fluctuations of the particle statistics for a uniform boundary.

The observables are the power sums ``p_k = Σ_i (λ_i + L - i)^k`` of the row
with ``L = N - ⌊κN⌋`` particles.  Their covariances, divided by ``N^{k+l}``,
converge to double contour integrals

    (1-κ₁)^{l₁}(1-κ₂)^{l₂} (2πi)^{-2} ∮∮ F_{κ₁}(z)^{l₁} F_{κ₂}(w)^{l₂} Q(z, w) dz dw,
    Q(z, w) = m² z^{m-1} w^{m-1} / (z^m - w^m)²,

with both contours around the weights ``x_j``.  Pulled back through the map
``z ↦ (χ_L(z), κ_L(z))`` the same covariance is that of a Gaussian free field
on the sector ``0 < Arg z < π/m``, which is checked here by comparing two
independent quadratures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.stats

from . import asymptotics as asy
from .schur import WeightModel

__all__ = [
    "CovarianceSpec",
    "H_drift",
    "G_kernel",
    "Q_kernel",
    "cov_limit_uniform",
    "p_statistics",
    "mc_covariance",
    "jackknife_covariance",
    "gff_green_strip",
    "liquid_intervals",
    "pullback_moment_cov",
    "gaussianity_test",
]


@dataclass(frozen=True)
class CovarianceSpec:
    """Which covariance: ``cov(p_{l₁} at κ₁, p_{l₂} at κ₂) / N^{l₁+l₂}``."""

    l1: int
    kappa1: float
    l2: int
    kappa2: float
    samples: int = 20_000
    nodes: int = 512
    inner_factor: float = 0.9

    def __post_init__(self) -> None:
        if self.l1 < 1 or self.l2 < 1:
            raise ValueError("l₁, l₂ must be >= 1")
        for k in (self.kappa1, self.kappa2):
            if not 0 < k < 1:
                raise ValueError("κ must lie in (0, 1)")


def H_drift(z, kappa: float, model: WeightModel):
    """``H(z) = (1/n)Σ_j (m z^{m-1}/(z^m - x_j^m) - 1/(z - x_j)) + (κ/n)Σ_{I₂} y_i/(1 + y_i z)``."""
    U, _, W = asy.uvw(z, model)
    zarr = np.asarray(z, dtype=complex)
    out = (W + kappa * U) / zarr
    return complex(out) if np.ndim(z) == 0 else out


def G_kernel(z, w, m: int):
    """``m² z^{m-1} w^{m-1}/(z^m - w^m)² - 1/(z - w)²`` (zero when ``m = 1``)."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    out = m**2 * z ** (m - 1) * w ** (m - 1) / (z**m - w**m) ** 2 - 1 / (z - w) ** 2
    return complex(out) if out.ndim == 0 else out


def Q_kernel(z, w, m: int):
    """``Q(z, w) = G(z, w) + 1/(z - w)² = m² z^{m-1} w^{m-1}/(z^m - w^m)²``."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    d = z**m - w**m
    if np.any(d == 0):
        raise ZeroDivisionError("Q evaluated at coincident arguments")
    out = m**2 * z ** (m - 1) * w ** (m - 1) / d**2
    return complex(out) if out.ndim == 0 else out


def _contour_pairs(model: WeightModel, kappa1: float, kappa2: float, nodes: int, inner_factor: float):
    """Circles for ``z`` and ``w``; around a common weight the larger ``κ`` gets the inner circle.

    The level curve of a larger ``κ`` lies inside the one of a smaller ``κ``
    (it shrinks onto the positive axis as ``κ → 1``), so this is the nesting
    that the level-curve contours deform to.  Equal ``κ`` put ``w`` inside;
    the value is then independent of the choice.
    """
    base = asy.default_contours(model, nodes)
    w_inside = kappa2 >= kappa1
    zs = [q if w_inside else q.scaled(inner_factor) for q in base]
    ws = [q.scaled(inner_factor) if w_inside else q for q in base]
    return zs, ws


def cov_limit_uniform(l1: int, kappa1: float, l2: int, kappa2: float, model: WeightModel, nodes: int = 512, inner_factor: float = 0.9) -> float:
    """Limit of ``cov(p_{l₁}^{(L₁)}, p_{l₂}^{(L₂)}) / N^{l₁+l₂}`` as a double contour integral."""
    spec = CovarianceSpec(l1, kappa1, l2, kappa2, nodes=nodes, inner_factor=inner_factor)
    m = model.m if model.m is not None else 1
    zs, ws = _contour_pairs(model, spec.kappa1, spec.kappa2, nodes, inner_factor)
    total = 0j
    for qz in zs:
        z, ez = qz.points()
        fz = ((1 - kappa1) * asy.F_kappa_m(z, kappa1, model)) ** l1 * qz.radius * ez
        for qw in ws:
            w, ew = qw.points()
            gw = ((1 - kappa2) * asy.F_kappa_m(w, kappa2, model)) ** l2 * qw.radius * ew
            total += np.mean(fz[:, None] * gw[None, :] * Q_kernel(z[:, None], w[None, :], m))
    if abs(total.imag) > 1e-8 * max(1.0, abs(total.real)):
        raise ArithmeticError(f"covariance has imaginary part {total.imag:.2e}")
    return float(total.real)


# ---------------------------------------------------------------------------
# Monte Carlo


def p_statistics(rows: np.ndarray, k: int) -> np.ndarray:
    """``p_k`` of every signature in ``rows`` (shape ``(samples, L)``), as floats."""
    rows = np.asarray(rows)
    L = rows.shape[1]
    pos = rows + (L - 1 - np.arange(L))[None, :]
    return np.sum(pos.astype(float) ** k, axis=1)


def jackknife_covariance(a: np.ndarray, b: np.ndarray, groups: int = 100) -> tuple[float, float]:
    """Sample covariance and its delete-one-group jackknife standard error."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = len(a)
    if n < 2:
        raise ValueError("need at least two samples")
    est = float(np.cov(a, b)[0, 1])
    g = min(groups, n)
    bounds = np.linspace(0, n, g + 1).astype(int)
    leave = []
    for i in range(g):
        mask = np.ones(n, dtype=bool)
        mask[bounds[i] : bounds[i + 1]] = False
        leave.append(np.cov(a[mask], b[mask])[0, 1])
    leave = np.array(leave)
    se = math.sqrt((g - 1) / g * np.sum((leave - leave.mean()) ** 2))
    return est, se


def mc_covariance(rows1: np.ndarray, rows2: np.ndarray, k: int, l: int, N: int, groups: int = 100) -> tuple[float, float]:
    """``cov(p_k, p_l)/N^{k+l}`` from paired samples of two rows, with jackknife error.

    ``rows1[s]`` and ``rows2[s]`` must come from the same sampled matching.
    """
    a = p_statistics(rows1, k) / float(N) ** k
    b = p_statistics(rows2, l) / float(N) ** l
    return jackknife_covariance(a, b, groups)


# ---------------------------------------------------------------------------
# Gaussian free field pullback


def gff_green_strip(z: complex, w: complex, m: int, jacobian: bool = False) -> float:
    """Dirichlet Green's function of the sector ``0 < Arg z < π/m``: ``-(1/2π) ln|(z^m - w^m)/(z^m - w̄^m)|``.

    ``jacobian=True`` multiplies by ``m² z^{m-1} w^{m-1}`` (taking the real
    part), the factor that turns it into the kernel ``Q`` after two
    derivatives; it is not part of the Green's function.
    """
    zm, wm = complex(z) ** m, complex(w) ** m
    den = zm - wm.conjugate()
    num = zm - wm
    if den == 0 or num == 0:
        return 0.0 if den == 0 else math.inf
    val = -math.log(abs(num / den)) / (2 * math.pi)
    if abs(wm.imag) <= 1e-300 or abs(zm.imag) <= 1e-300:
        val = 0.0
    if jacobian:
        val = float((m**2 * complex(z) ** (m - 1) * complex(w) ** (m - 1) * val).real)
    return val


def liquid_intervals(kappa: float, model: WeightModel, grid: int = 400, tol: float = 1e-12) -> list[tuple[float, float]]:
    """Maximal ``χ``-intervals of the liquid region at height ``κ``, endpoints bisected to ``tol``."""
    top = (1 - kappa) * asy.support_edge(kappa, model)
    chis = np.linspace(0, top, grid + 1)[1:-1]
    flags = [asy.solve_root(c, kappa, model).liquid for c in chis]

    def edge(a: float, b: float, liquid_at_a: bool) -> float:
        while b - a > tol:
            c = 0.5 * (a + b)
            if asy.solve_root(c, kappa, model).liquid == liquid_at_a:
                a = c
            else:
                b = c
        return 0.5 * (a + b)

    out = []
    start = 0.0 if flags[0] else None
    for i in range(1, len(chis)):
        if flags[i] and not flags[i - 1]:
            start = edge(chis[i - 1], chis[i], False)
        if flags[i - 1] and not flags[i]:
            out.append((start, edge(chis[i - 1], chis[i], True)))
            start = None
    if start is not None:
        out.append((start, top))
    return out


def _chebyshev_nodes(a: float, b: float, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``∫_a^b f dχ`` with ``χ = a + (b-a)(1-cos θ)/2`` (midpoint rule in θ).

    The substitution absorbs the square-root behaviour at the frozen boundary.
    """
    theta = (np.arange(k) + 0.5) * math.pi / k
    chi = a + (b - a) * (1 - np.cos(theta)) / 2
    weight = (b - a) / 2 * np.sin(theta) * math.pi / k
    return chi, weight


def _level_curve(kappa: float, model: WeightModel, nodes: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Points ``z(χ)`` of the liquid part of the level curve ``κ_L = κ``, with ``χ`` weights and ``dz/dχ``."""
    zs, ws, chis, dz = [], [], [], []
    for a, b in liquid_intervals(kappa, model):
        chi, wt = _chebyshev_nodes(a, b, nodes)
        for c, q in zip(chi, wt):
            z = asy.solve_root(float(c), kappa, model).z
            zs.append(z)
            chis.append(c)
            ws.append(q)
            dz.append(1 / ((1 - kappa) * asy.F_prime(z, kappa, model)))
    return np.array(chis), np.array(ws), np.array(zs), np.array(dz)


def pullback_moment_cov(j1: int, kappa1: float, j2: int, kappa2: float, model: WeightModel, form: str = "ra", nodes: int = 200) -> float:
    """Limit covariance of ``M_j^κ = N^{-(j+1)}√π/(j+1)·(p_{j+1} - E p_{j+1})``.

    ``form="ra"``: ``-1/(4π(j₁+1)(j₂+1)) ∮∮ χ_L(z)^{j₁+1} χ_L(w)^{j₂+1} Q(z, w) dz dw``
    over the closed level curves (upper arc plus its conjugate).
    ``form="rb"``: ``∫∫ χ₁^{j₁} χ₂^{j₂} G_S(z(χ₁), w(χ₂)) dχ₁ dχ₂`` with the
    sector Green's function.  Both are evaluated by quadrature in ``χ`` along
    the liquid part of the curves; frozen parts contribute nothing.
    """
    if form not in ("ra", "rb"):
        raise ValueError("form must be 'ra' or 'rb'")
    m = model.m if model.m is not None else 1
    c1, q1, z1, d1 = _level_curve(kappa1, model, nodes)
    c2, q2, z2, d2 = _level_curve(kappa2, model, nodes)
    if form == "rb":
        G = np.array([[gff_green_strip(a, b, m) for b in z2] for a in z1])
        return float(np.einsum("i,j,ij->", q1 * c1**j1, q2 * c2**j2, G))
    # counterclockwise: lower arc 0 → ∞ (conjugate points), upper arc back
    total = 0j
    for sz in (1, -1):
        za = z1.conjugate() if sz == 1 else z1
        dza = d1.conjugate() if sz == 1 else d1
        for sw in (1, -1):
            wb = z2.conjugate() if sw == 1 else z2
            dwb = d2.conjugate() if sw == 1 else d2
            Q = Q_kernel(za[:, None], wb[None, :], m)
            total += sz * sw * np.einsum("i,j,ij->", q1 * c1 ** (j1 + 1) * dza, q2 * c2 ** (j2 + 1) * dwb, Q)
    val = -total / (4 * math.pi * (j1 + 1) * (j2 + 1))
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        raise ArithmeticError(f"pullback covariance has imaginary part {val.imag:.2e}")
    return float(val.real)


# ---------------------------------------------------------------------------
# normality


def gaussianity_test(samples: np.ndarray, threshold: float = 5.0) -> dict:
    """Moment-based normality check.

    One column: standardized skewness and excess kurtosis with their exact
    normal-theory standard errors; passes iff both are below ``threshold``
    standard errors.  Two or more columns: Mardia's multivariate skewness and
    kurtosis, turned into z-scores.  Zero-variance data are reported as
    skipped.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, d = x.shape
    if n < 8:
        raise ValueError("need at least 8 samples")
    if np.any(np.std(x, axis=0) == 0):
        return {"skipped": True, "reason": "zero variance", "pass": True, "n": n}
    if d == 1:
        v = x[:, 0]
        skew = float(scipy.stats.skew(v, bias=False))
        kurt = float(scipy.stats.kurtosis(v, bias=False))
        se_skew = math.sqrt(6 * n * (n - 1) / ((n - 2) * (n + 1) * (n + 3)))
        se_kurt = 2 * se_skew * math.sqrt((n * n - 1) / ((n - 3) * (n + 5)))
        ok = abs(skew) < threshold * se_skew and abs(kurt) < threshold * se_kurt
        return {"skipped": False, "n": n, "skewness": skew, "skewness_se": se_skew, "excess_kurtosis": kurt, "kurtosis_se": se_kurt, "pass": bool(ok)}
    xc = x - x.mean(axis=0)
    S = xc.T @ xc / n
    y = xc @ np.linalg.cholesky(np.linalg.inv(S))
    # Σ_{i,j} (y_i·y_j)³ = ‖Σ_i y_i⊗y_i⊗y_i‖², which avoids the n×n Gram matrix
    T = np.einsum("ia,ib,ic->abc", y, y, y)
    b1 = float(np.sum(T**2) / n**2)
    b2 = float(np.mean(np.sum(y**2, axis=1) ** 2))
    dof = d * (d + 1) * (d + 2) / 6
    stat = n * b1 / 6
    # Wilson–Hilferty: chi-square -> standard normal
    z_skew = ((stat / dof) ** (1 / 3) - (1 - 2 / (9 * dof))) / math.sqrt(2 / (9 * dof))
    z_kurt = (b2 - d * (d + 2)) / math.sqrt(8 * d * (d + 2) / n)
    ok = abs(z_skew) < threshold and abs(z_kurt) < threshold
    return {"skipped": False, "n": n, "dimension": d, "mardia_skewness": b1, "skewness_z": float(z_skew), "mardia_kurtosis": b2, "kurtosis_z": float(z_kurt), "pass": bool(ok)}
