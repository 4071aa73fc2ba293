import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given
from hypothesis import strategies as st

from oracles import moment_residue, uniform_interval_moment
from sqhex import asymptotics as asy
from sqhex.asymptotics import (
    ContourQuadrature,
    F_kappa_m,
    burgers_residual,
    default_contours,
    density,
    limit_moments,
    liquid_inverse,
    solve_root,
    stieltjes_contour,
    stieltjes_limit,
)
from sqhex.schur import WeightModel

W1 = WeightModel(1, (1.0,), m=2)
W2 = WeightModel(2, (1.0, 0.5), {2: 0.7}, m=2)
W3 = WeightModel(1, (1.0,), {1: 0.6}, m=3)

# exact residue values (sympy), frozen
MOMENTS = {
    ("W1", 0.5): [1, Fraction(3, 2), Fraction(17, 6), Fraction(6), Fraction(543, 40)],
    ("W2", 0.5): [1, Fraction(1531, 918), Fraction(38603, 11016), Fraction(12807361783, 1547241264)],
    ("W3", 0.4): [1, Fraction(29, 12), Fraction(2071, 288), Fraction(165377, 6912)],
}
MODELS = {"W1": W1, "W2": W2, "W3": W3}


def liquid_points(model, count, seed):
    """Points of the liquid region sampled through the inverse map of the upper sector."""
    rng = np.random.default_rng(seed)
    m = model.m
    out = []
    while len(out) < count:
        r = float(rng.uniform(0.3, 2.5))
        a = float(rng.uniform(0.05, 0.95)) * math.pi / m
        z = r * cmath.exp(1j * a)
        try:
            chi, kappa = liquid_inverse(z, model)
        except ZeroDivisionError:
            continue
        if 0.02 < kappa < 0.9 and chi > 0:
            out.append((z, chi, kappa))
    return out


class TestF:
    def test_m1_single_weight(self):
        W = WeightModel(1, (1.0,), m=1)
        for z in (0.3 + 0.2j, 2.0, -1.5j):
            for kappa in (0.0, 0.4):
                assert F_kappa_m(z, kappa, W) == pytest.approx(z / (z - 1), rel=1e-14)

    @pytest.mark.parametrize("m", [1, 2, 3, 5])
    def test_kappa_zero_closed_form(self, m):
        W = WeightModel(1, (1.0,), m=m)
        for z in (0.3 + 0.2j, 2.0 + 0.1j, -1.5j):
            assert F_kappa_m(z, 0.0, W) == pytest.approx(m * z**m / (z**m - 1), rel=1e-12)

    @given(st.floats(-3, 3), st.floats(0.05, 3), st.floats(0, 0.95))
    def test_reflection(self, a, b, kappa):
        z = complex(a, b)
        assert F_kappa_m(z.conjugate(), kappa, W2) == pytest.approx(F_kappa_m(z, kappa, W2).conjugate(), rel=1e-12, abs=1e-12)

    def test_pole_guard(self):
        with pytest.raises(ZeroDivisionError):
            F_kappa_m(1.0, 0.2, W1)
        with pytest.raises(ZeroDivisionError):
            F_kappa_m(-1 / 0.7, 0.2, W2)

    def test_kappa_range(self):
        with pytest.raises(ValueError):
            F_kappa_m(0.5j, 1.0, W1)

    def test_derivative(self):
        z, h = 0.4 + 0.7j, 1e-6
        fd = (F_kappa_m(z + h, 0.3, W2) - F_kappa_m(z - h, 0.3, W2)) / (2 * h)
        assert asy.F_prime(z, 0.3, W2) == pytest.approx(fd, rel=1e-7)

    def test_singularities(self):
        s = asy.singularities(W3)
        assert len(s) == 4
        assert np.allclose(sorted(np.abs(s)), sorted([1, 1, 1, 1 / 0.6]))


class TestQuadrature:
    def test_validation(self):
        with pytest.raises(ValueError):
            ContourQuadrature(0j, 1.0, 3)
        with pytest.raises(ValueError):
            ContourQuadrature(0j, -1.0)

    def test_residue(self):
        q = ContourQuadrature(1.0 + 0j, 0.5, 64)
        assert q.integrate(lambda z: 3 / (z - 1)) == pytest.approx(3.0, abs=1e-14)
        assert abs(q.integrate(lambda z: z**2)) < 1e-14

    def test_contours_exclude_other_poles(self):
        for model in (W1, W2, W3):
            sing = np.append(asy.singularities(model), 0)
            for q in default_contours(model):
                others = sing[np.abs(sing - q.center) > 0]
                assert np.all(np.abs(others - q.center) > q.radius)


class TestMoments:
    @pytest.mark.parametrize("key", list(MOMENTS))
    def test_frozen_residue_values(self, key):
        name, kappa = key
        for p, ref in enumerate(MOMENTS[key]):
            assert limit_moments(kappa, p, MODELS[name]) == pytest.approx(float(ref), rel=1e-9)

    def test_residue_oracle_spot_check(self):
        assert moment_residue(0.5, 1, W1) == Fraction(3, 2)

    @pytest.mark.parametrize("model", [W1, W2, W3])
    @pytest.mark.parametrize("kappa", [0.0, 0.3, 0.7])
    def test_mass_is_one(self, model, kappa):
        assert abs(limit_moments(kappa, 0, model) - 1) < 1e-8

    @pytest.mark.parametrize("model", [W1, W2, W3])
    def test_kappa_zero_uniform(self, model):
        for p in range(5):
            assert abs(limit_moments(0.0, p, model) - float(uniform_interval_moment(model.m, p))) < 1e-6

    def test_kappa_zero_examples(self):
        assert limit_moments(0.0, 1, W1) == pytest.approx(1.0, abs=1e-10)
        assert limit_moments(0.0, 2, W1) == pytest.approx(4 / 3, abs=1e-10)

    def test_node_doubling_and_radius(self):
        base = limit_moments(0.5, 3, W2)
        cs = default_contours(W2)
        assert abs(limit_moments(0.5, 3, W2, contours=[q.doubled() for q in cs]) - base) < 1e-8
        assert abs(limit_moments(0.5, 3, W2, contours=[q.scaled(0.7) for q in cs]) - base) < 1e-8

    def test_negative_order(self):
        with pytest.raises(ValueError):
            limit_moments(0.5, -1, W1)


class TestRoots:
    def test_square_root_of_minus_one(self):
        assert solve_root(1.0, 0.0, W1).z == pytest.approx(1j, abs=1e-12)

    def test_cube_case(self):
        W = WeightModel(1, (1.0,), m=3)
        expected = 2 ** (-1 / 3) * cmath.exp(1j * math.pi / 3)
        assert solve_root(1.0, 0.0, W).z == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("model", [W1, W2, W3])
    def test_kappa_zero_argument(self, model):
        for chi in np.linspace(0.05, model.m - 0.05, 9):
            pt = solve_root(float(chi), 0.0, model)
            assert pt.liquid
            assert abs(cmath.phase(pt.z) - math.pi / model.m) < 1e-10

    def test_kappa_zero_closed_form(self):
        for m in (2, 3, 4):
            W = WeightModel(1, (1.0,), m=m)
            for chi in (0.3, 1.0, m - 0.2):
                z = solve_root(chi, 0.0, W).z
                assert z**m == pytest.approx(chi / (chi - m), rel=1e-10)

    @pytest.mark.parametrize("model", [W1, W2, W3])
    def test_root_solves_equation(self, model):
        for _, chi, kappa in liquid_points(model, 10, 1):
            pt = solve_root(chi, kappa, model)
            assert pt.z.imag > 0
            assert abs(F_kappa_m(pt.z, kappa, model) - chi / (1 - kappa)) < 1e-10 * max(1, chi / (1 - kappa))

    def test_frozen_point(self):
        pt = solve_root(0.01, 0.8, W1)
        assert not pt.liquid
        assert pt.z.imag == 0

    @pytest.mark.parametrize("model", [W1, W2, W3])
    def test_inverse_round_trip(self, model):
        pts = liquid_points(model, 50, 2)
        worst = 0.0
        for z, chi, kappa in pts:
            worst = max(worst, abs(solve_root(chi, kappa, model).z - z))
            c2, k2 = liquid_inverse(solve_root(chi, kappa, model).z, model)
            worst = max(worst, abs(c2 - chi), abs(k2 - kappa))
        assert worst < 1e-8

    def test_inverse_on_the_ray_gives_kappa_zero(self):
        for model in (W1, W3):
            for r in (0.4, 0.9, 1.7):
                _, kappa = liquid_inverse(r * cmath.exp(1j * math.pi / model.m), model)
                assert abs(kappa) < 1e-8

    def test_inverse_needs_upper_half_plane(self):
        with pytest.raises(ValueError):
            liquid_inverse(0.5 - 0.1j, W1)


class TestDensity:
    @pytest.mark.parametrize("model", [W1, W3])
    def test_kappa_zero_is_flat(self, model):
        for u in np.linspace(0.1, model.m - 0.1, 7):
            assert density(float(u), 0.0, model) == pytest.approx(1 / model.m, abs=1e-10)

    @pytest.mark.parametrize("model", [W1, W2, W3])
    def test_range(self, model):
        for kappa in (0.2, 0.5, 0.8):
            top = asy.support_edge(kappa, model)
            for u in np.linspace(-0.5, top + 0.5, 31):
                assert 0.0 <= density(float(u), kappa, model) <= 1.0

    @pytest.mark.parametrize("model,kappa", [(W1, 0.5), (W2, 0.5), (W3, 0.4)])
    def test_moments_of_density(self, model, kappa):
        top = asy.support_edge(kappa, model)
        for p in range(5):
            val, _ = scipy.integrate.quad(lambda u: u**p * density(u, kappa, model), 0, top, limit=400, epsabs=1e-11)
            assert abs(val - limit_moments(kappa, p, model)) < 1e-4

    def test_cdf(self):
        assert asy.cdf(-1.0, 0.5, W1) == 0.0
        assert asy.cdf(100.0, 0.5, W1) == 1.0
        assert asy.cdf(1.0, 0.0, W1) == pytest.approx(0.5, abs=1e-8)


class TestBurgers:
    @pytest.mark.parametrize("chi,kappa,model", [(0.8, 0.3, W1), (1.0, 0.4, WeightModel(1, (1.0,), m=3))])
    def test_examples(self, chi, kappa, model):
        assert abs(burgers_residual(chi, kappa, model)) < 1e-4

    def test_second_order_decay(self):
        r1 = abs(burgers_residual(0.8, 0.3, W1, h=2e-3))
        r2 = abs(burgers_residual(0.8, 0.3, W1, h=1e-3))
        assert 3.0 < r1 / r2 < 5.0

    def test_opposite_sign_does_not_vanish(self):
        assert abs(burgers_residual(0.8, 0.3, W1, convention="literal")) > 1e-2

    def test_convention_name(self):
        with pytest.raises(ValueError):
            burgers_residual(0.8, 0.3, W1, convention="other")


class TestStieltjes:
    @pytest.mark.parametrize("model,kappa", [(W1, 0.5), (W3, 0.4)])
    def test_large_argument_series(self, model, kappa):
        x = 40.0 + 5.0j
        series = sum(limit_moments(kappa, j, model) / x ** (j + 1) for j in range(7))
        assert abs(stieltjes_limit(x, kappa, model) - series) < 1e-6
        assert abs(stieltjes_contour(x, kappa, model) - series) < 1e-6

    def test_conjugate_symmetry(self):
        x = 1.3 + 0.8j
        assert stieltjes_limit(x.conjugate(), 0.5, W2) == pytest.approx(stieltjes_limit(x, 0.5, W2).conjugate(), abs=1e-12)

    def test_inversion(self):
        kappa = 0.5
        for u in (0.8, 1.5, 2.2):
            eps = 1e-7
            jump = stieltjes_limit(u - 1j * eps, kappa, W1) - stieltjes_limit(u + 1j * eps, kappa, W1)
            assert abs(jump.imag / 2 - math.pi * density(u, kappa, W1)) < 1e-3

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            stieltjes_limit(0.0, 0.5, W1)


class TestFrozenBoundary:
    def test_points_are_on_the_edge_of_the_liquid_region(self):
        pts = asy.frozen_boundary(W1)
        assert len(pts) > 100
        for chi, kappa in pts[:: len(pts) // 15]:
            if 0.05 < kappa < 0.9:
                # density is 0 or 1 just outside and strictly inside (0, 1) on one side
                d = [density(c / (1 - kappa), kappa, W1) for c in (chi - 1e-3, chi + 1e-3)]
                assert min(d) < 1e-2 or max(d) > 1 - 1e-2
