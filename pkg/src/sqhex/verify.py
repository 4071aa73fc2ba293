"""Invariant suites run by ``sqhex verify``.

Every suite returns a :class:`SuiteResult` made of named checks, each with a
residual and the tolerance it was held to.  The suites cross independent
routes against each other on the bundled tiny models: enumeration against
the product formula against the Kasteleyn determinant, bialternant against
branching Schur evaluation, the kernel sampler against the determinantal
sampler against the enumerated law, and contour integrals against their
closed forms.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics as asy
from .config import bundled_lattices, bundled_path, load_config
from .fluctuations import Q_kernel, gff_green_strip, pullback_moment_cov
from .kasteleyn import determinantal_samples, kasteleyn_matrix
from .lattice import build_lattice, enumerate_matchings, face_increment_sums, height_field
from .piecewise import ClassMeasure, PiecewiseModel, piecewise_moments, r_transform, moment_series
from .sampler import CoordinateChainSampler, exact_chain_distribution, pr_kernel, st_kernel
from .schur import WeightModel, log_schur_bialternant, log_schur_branching, partition_function

__all__ = ["Check", "SuiteResult", "SUITES", "run_suites", "REPORT_SCHEMA"]

#: identifier of the report layout; bump when keys change
REPORT_SCHEMA = "sqhex.verify/1"


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self) -> None:
        self.residual = float(self.residual)
        self.passed = bool(np.isfinite(self.residual) and self.residual <= self.tolerance)


@dataclass
class SuiteResult:
    name: str
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "checks": [{"name": c.name, "residual": c.residual, "tolerance": c.tolerance, "pass": c.passed} for c in self.checks],
        }


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def suite_partition(inject_sign_error: int | None = None, **_) -> SuiteResult:
    """Enumeration total = product formula = |det K| on every bundled lattice."""
    checks = []
    for cfg in bundled_lattices():
        lat = build_lattice(cfg.spec)
        Z_enum = math.fsum(r.weight for r in enumerate_matchings(lat))
        Z_formula = partition_function(lat)
        if inject_sign_error is None:
            K = kasteleyn_matrix(lat)
        else:
            K = kasteleyn_matrix(lat, inject_sign_error=inject_sign_error % len(lat.edges))
        tag = cfg.source.rsplit("/", 1)[-1].removesuffix(".toml")
        checks.append(Check(f"{tag}: formula vs enumeration", _rel(Z_formula, Z_enum), 1e-8))
        checks.append(Check(f"{tag}: |det K| vs enumeration", _rel(K.abs_det(), Z_enum), 1e-8))
    return SuiteResult("partition_function", checks)


def suite_schur(seed: int = 0, **_) -> SuiteResult:
    """Bialternant and branching-rule Schur values agree on random inputs."""
    rng = np.random.default_rng([seed, 1])
    worst = 0.0
    for _ in range(40):
        t = int(rng.integers(1, 5))
        lam = sorted(rng.integers(0, 7, size=t).tolist(), reverse=True)
        x = 0.5 + 0.3 * rng.permutation(t) + rng.uniform(0.0, 0.2, size=t)  # well separated
        worst = max(worst, abs(log_schur_bialternant(lam, x) - log_schur_branching(lam, x)))
    return SuiteResult("schur", [Check("log s_λ: bialternant vs branching (40 draws)", worst, 1e-9)])


def suite_kernels(seed: int = 0, **_) -> SuiteResult:
    """Transition kernels are probability distributions."""
    rng = np.random.default_rng([seed, 2])
    worst_pr = worst_st = 0.0
    neg = 0.0
    for _ in range(100):
        t = int(rng.integers(1, 5))
        parts = sorted(rng.integers(0, 6, size=t).tolist(), reverse=True)
        x = rng.uniform(0.5, 2.0, size=t)
        pr = pr_kernel(parts, x)
        st = st_kernel(parts, float(rng.uniform(0.5, 2.0)), x)
        worst_pr = max(worst_pr, abs(pr.total - 1))
        worst_st = max(worst_st, abs(st.total - 1))
        neg = max(neg, -min(pr.probs.min(), st.probs.min(), 0.0))
    return SuiteResult(
        "kernels",
        [
            Check("pr sums to one (100 draws)", worst_pr, 1e-12),
            Check("st sums to one (100 draws)", worst_st, 1e-12),
            Check("no negative probabilities", neg, 0.0),
        ],
    )


def _tv(counts: Counter, law: dict, n: int) -> float:
    keys = set(law) | set(counts)
    return 0.5 * sum(abs(counts.get(k, 0) / n - law.get(k, 0.0)) for k in keys)


def suite_samplers(seed: int = 0, samples: int = 20000, **_) -> SuiteResult:
    """Both exact samplers reproduce the enumerated chain law on the tiny model.

    The tolerance is five times the expected total-variation distance of an
    exact sampler at this sample size.
    """
    cfg = load_config(bundled_path("models/tiny_n3.toml"))
    law = exact_chain_distribution(cfg.spec)
    expected = sum(math.sqrt(p * (1 - p)) for p in law.values()) * math.sqrt(2 / math.pi) / 2 / math.sqrt(samples)
    kern = Counter(CoordinateChainSampler(cfg.spec).full_chains(seed, range(samples)))
    lat = build_lattice(cfg.spec)
    kast = Counter(r.signatures for r in determinantal_samples(lat, seed, samples))
    return SuiteResult(
        "samplers",
        [
            Check("kernel sampler TV to exact law", _tv(kern, law, samples), 5 * expected),
            Check("kasteleyn sampler TV to exact law", _tv(kast, law, samples), 5 * expected),
            Check("sampler support inside the enumerated law", len((set(kern) | set(kast)) - set(law)), 0),
        ],
    )


def suite_heights(seed: int = 0, **_) -> SuiteResult:
    """Height increments close up around every vertex; boundary heights do not depend on the matching."""
    bad_sum = 0
    bad_boundary = 0
    for cfg in bundled_lattices():
        lat = build_lattice(cfg.spec)
        recs = determinantal_samples(lat, seed, 20)
        ref = None
        for r in recs:
            bad_sum += sum(abs(s) for s in face_increment_sums(lat, r.edges))
            h = height_field(lat, r.edges)
            bnd = h.values[h.dual.boundary]
            if ref is None:
                ref = bnd
            bad_boundary += int(np.abs(bnd - ref).sum())
    return SuiteResult(
        "heights",
        [
            Check("face increment sums vanish", bad_sum, 0),
            Check("boundary heights matching-independent", bad_boundary, 0),
        ],
    )


def _uniform_models() -> list[WeightModel]:
    return [
        WeightModel(1, (1.0,), m=2),
        WeightModel(2, (1.0, 0.5), {2: 0.7}, m=2),
        WeightModel(1, (1.0,), {1: 0.6}, m=3),
    ]


def suite_asymptotics(**_) -> SuiteResult:
    """Moment normalization, the κ=0 closed form, root sector and inverse-map round trip."""
    checks = []
    for W in _uniform_models():
        tag = f"m={W.m}, n={W.n}"
        checks.append(Check(f"{tag}: p=0 moment", abs(asy.limit_moments(0.4, 0, W) - 1), 1e-8))
        worst = max(abs(asy.limit_moments(0.0, p, W) - W.m**p / (p + 1)) for p in range(5))
        checks.append(Check(f"{tag}: κ=0 moments m^p/(p+1)", worst, 1e-6))
        trip = 0.0
        for chi, kappa in ((0.4, 0.3), (0.7, 0.5), (0.2, 0.6)):
            pt = asy.solve_root(chi, kappa, W)
            if pt.liquid:
                c2, k2 = asy.liquid_inverse(pt.z, W)
                trip = max(trip, abs(c2 - chi), abs(k2 - kappa))
        checks.append(Check(f"{tag}: liquid_inverse round trip", trip, 1e-8))
    W = WeightModel(1, (1.0,), m=2)
    arg = max(abs(np.angle(asy.solve_root(chi, 0.0, W).z) - math.pi / 2) for chi in (0.5, 1.0, 1.5))
    checks.append(Check("κ=0 root argument π/m", arg, 1e-10))
    return SuiteResult("asymptotics", checks)


def suite_fluctuations(**_) -> SuiteResult:
    """Kernel symmetry, Dirichlet boundary values and the two pullback routes."""
    z, w = 0.7 + 0.4j, -0.3 + 1.1j
    sym = abs(Q_kernel(z, w, 2) - Q_kernel(w, z, 2))
    bnd = max(abs(gff_green_strip(z, complex(t, 0.0), 2)) for t in (0.3, 1.0, 4.0))
    W = WeightModel(1, (1.0,), m=2)
    ra = pullback_moment_cov(0, 0.4, 1, 0.6, W, form="ra", nodes=120)
    rb = pullback_moment_cov(0, 0.4, 1, 0.6, W, form="rb", nodes=120)
    return SuiteResult(
        "fluctuations",
        [
            Check("Q kernel symmetric", sym, 1e-14),
            Check("strip Green function vanishes on the boundary", bnd, 1e-12),
            Check("pullback: contour form vs Green form", _rel(ra, rb), 1e-3),
        ],
    )


def suite_piecewise(**_) -> SuiteResult:
    """R-transform of point masses and the trivial-boundary reduction to the uniform case."""
    checks = []
    worst = 0.0
    for c in (0.0, 0.3, 1.7):
        R = r_transform(moment_series(ClassMeasure.point(c), 14))
        worst = max(worst, abs(R.coeffs[0] - c), float(np.max(np.abs(R.coeffs[1:]))))
    # absolute error on coefficients whose inputs reach 1.7^14 ≈ 1.7e3
    checks.append(Check("R-transform of a point mass", worst, 1e-9))
    W = WeightModel(1, (1.0,), {1: 0.7})
    pm = PiecewiseModel.from_segments([(0, 1)], W)
    Wu = WeightModel(1, (1.0,), {1: 0.7}, m=1)
    worst = max(_rel(piecewise_moments(0.5, p, pm), asy.limit_moments(0.5, p, Wu)) for p in range(1, 4))
    checks.append(Check("trivial boundary: moments match uniform m=1", worst, 1e-5))
    return SuiteResult("piecewise", checks)


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "partition_function": suite_partition,
    "schur": suite_schur,
    "kernels": suite_kernels,
    "samplers": suite_samplers,
    "heights": suite_heights,
    "asymptotics": suite_asymptotics,
    "fluctuations": suite_fluctuations,
    "piecewise": suite_piecewise,
}


def run_suites(names: list[str] | None = None, **options) -> list[SuiteResult]:
    """Run the named suites (all by default) in a fixed order."""
    chosen = list(SUITES) if not names else names
    unknown = [n for n in chosen if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suites: {unknown}")
    return [SUITES[n](**options) for n in chosen]
