import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from oracles import biadjacency, permanent
from sqhex.kasteleyn import (
    DeterminantalSampler,
    determinantal_sample,
    determinantal_samples,
    edge_inclusion_probability,
    inclusion_probabilities,
    kasteleyn_matrix,
    torus_curve,
    torus_determinant,
)
from sqhex.lattice import LatticeSpec, build_lattice, enumerate_matchings
from sqhex.sampler import exact_chain_distribution, sample_chains
from sqhex.schur import WeightModel, partition_function


def lattice(Omega, c, x, y=None):
    N = len(Omega)
    return build_lattice(LatticeSpec(N, tuple(Omega), tuple(c), WeightModel(N, tuple(x), y or {})))


class TestDeterminant:
    def test_single_vertex_row(self):
        lat = lattice((1,), (1,), (1.7,))
        K = kasteleyn_matrix(lat)
        assert K.matrix.shape == (1, 1)
        assert K.abs_det() == pytest.approx(1.0)

    def test_two_rows(self):
        x = (1.3, 0.6)
        K = kasteleyn_matrix(lattice((1, 3), (1, 1), x))
        assert K.abs_det() == pytest.approx(sum(x), rel=1e-12)

    def test_square_row(self):
        lat = lattice((1, 2), (0, 1), (1.3, 0.6), {1: 0.8})
        Z = math.fsum(r.weight for r in enumerate_matchings(lat))
        assert Z == pytest.approx((1 + 0.8 * 1.3) * (1 + 0.8 * 0.6), rel=1e-12)
        assert kasteleyn_matrix(lat).abs_det() == pytest.approx(Z, rel=1e-12)

    def test_bundled_lattices(self, bundled):
        assert len(bundled) == 12
        for cfg in bundled:
            lat = build_lattice(cfg.spec)
            Z = permanent(biadjacency(lat))
            assert kasteleyn_matrix(lat).abs_det() == pytest.approx(Z, rel=1e-8)
            assert partition_function(lat) == pytest.approx(Z, rel=1e-8)

    def test_sign_rule_needs_no_repair(self, bundled):
        for cfg in bundled:
            lat = build_lattice(cfg.spec)
            a = kasteleyn_matrix(lat, repair=False)
            b = kasteleyn_matrix(lat)
            assert np.array_equal(a.signs, b.signs)

    def test_injected_sign_error_is_detected(self, bundled):
        caught = 0
        for cfg in bundled:
            lat = build_lattice(cfg.spec)
            Z = permanent(biadjacency(lat))
            for e in range(len(lat.edges)):
                bad = kasteleyn_matrix(lat, inject_sign_error=e).abs_det()
                caught += abs(bad - Z) > 1e-8 * Z
        assert caught > 0

    def test_larger_lattice(self):
        W = WeightModel(2, (1.2, 0.7), {2: 0.9})
        spec = LatticeSpec(4, (1, 2, 4, 7), W.c_pattern(4), W)
        lat = build_lattice(spec)
        Z = math.fsum(r.weight for r in enumerate_matchings(lat, max_vertices=80))
        assert kasteleyn_matrix(lat).abs_det() == pytest.approx(Z, rel=1e-8)


class TestTorusCurve:
    def test_two_periodic_example(self):
        W = WeightModel(2, (1.3, 0.6), {2: 0.7})
        curve = torus_curve(W)
        rng = np.random.default_rng(3)
        for z, w in rng.normal(size=(20, 2)) + 1j * rng.normal(size=(20, 2)):
            P = (z - 1.3) * (z - 0.6) - w * (1 + 0.7 * z)
            assert curve.P(z, w) == pytest.approx(P, abs=1e-12)
            assert torus_determinant(W, z, w) == pytest.approx(P, abs=1e-12)

    def test_single_row(self):
        curve = torus_curve(WeightModel(1, (0.8,)))
        for z in (0.1, 2.0 + 1j, -3j):
            assert curve.R(z) == pytest.approx(z - 0.8)

    def test_rational_branch(self):
        W = WeightModel(3, (1.0, 0.5, 2.0), {1: 0.3, 3: 1.5})
        curve = torus_curve(W)
        rng = np.random.default_rng(4)
        for z in rng.normal(size=100) + 1j * rng.normal(size=100):
            R = (z - 1.0) * (z - 0.5) * (z - 2.0) / ((1 + 0.3 * z) * (1 + 1.5 * z))
            assert curve.R(z) == pytest.approx(R, rel=1e-12)
            assert abs(curve.P(z, curve.R(z))) < 1e-10 * max(1.0, abs(z) ** 3)
            assert abs(torus_determinant(W, z, R)) < 1e-10 * max(1.0, abs(z) ** 3)

    def test_derivative(self):
        curve = torus_curve(WeightModel(2, (1.3, 0.6), {2: 0.7}))
        z, h = 0.4 + 0.9j, 1e-6
        fd = (curve.R(z + h) - curve.R(z - h)) / (2 * h)
        assert curve.R_prime(z) == pytest.approx(fd, rel=1e-8)


def enumerated_marginals(lat):
    recs = enumerate_matchings(lat)
    Z = math.fsum(r.weight for r in recs)
    p = np.zeros(len(lat.edges))
    for r in recs:
        for e in r.edges:
            p[e] += r.weight / Z
    return p


class TestInclusion:
    def test_two_rows_bottom_edges(self):
        x = (1.3, 0.6)
        lat = lattice((1, 3), (1, 1), x)
        p = inclusion_probabilities(kasteleyn_matrix(lat))
        assert np.allclose(p, enumerated_marginals(lat), atol=1e-12)
        assert any(abs(v - x[0] / sum(x)) < 1e-12 for v in p)
        assert any(abs(v - x[1] / sum(x)) < 1e-12 for v in p)

    def test_against_enumeration(self, bundled):
        for cfg in bundled:
            lat = build_lattice(cfg.spec)
            p = inclusion_probabilities(kasteleyn_matrix(lat))
            assert np.allclose(p, enumerated_marginals(lat), atol=1e-10)

    def test_sum_per_white(self, bundled):
        for cfg in bundled:
            lat = build_lattice(cfg.spec)
            p = inclusion_probabilities(kasteleyn_matrix(lat))
            assert np.all((p >= 0) & (p <= 1))
            for edges in lat.white_edges:
                assert math.fsum(p[e] for e in edges) == pytest.approx(1.0, abs=1e-9)

    def test_frozen_lattice(self):
        lat = lattice((1, 2, 3), (1, 1, 1), (1.0, 2.0, 0.5))
        assert len(enumerate_matchings(lat)) == 1
        p = inclusion_probabilities(kasteleyn_matrix(lat))
        assert set(np.round(p, 12)) <= {0.0, 1.0}
        assert np.isclose(p.sum(), len(lat.whites))

    def test_single_edge_query(self):
        lat = lattice((1, 3), (1, 1), (1.3, 0.6))
        K = kasteleyn_matrix(lat)
        inv = np.linalg.inv(K.matrix)
        allp = inclusion_probabilities(K)
        for e in range(len(lat.edges)):
            assert edge_inclusion_probability(K, inv, e) == allp[e]


class TestDeterminantalSampler:
    def test_deterministic(self, tiny_config):
        lat = build_lattice(tiny_config.spec)
        a = determinantal_sample(lat, seed=11, index=5)
        b = determinantal_sample(lat, seed=11, index=5)
        assert a.edges == b.edges and a.signatures == b.signatures

    def test_batch_matches_single(self, tiny_config):
        lat = build_lattice(tiny_config.spec)
        batch = determinantal_samples(lat, seed=2, count=30, start=10, batch=7)
        sampler = DeterminantalSampler(lat)
        for i, rec in enumerate(batch):
            assert rec.edges == determinantal_sample(lat, 2, 10 + i, sampler).edges

    def test_samples_are_perfect_matchings(self, bundled):
        for cfg in bundled:
            lat = build_lattice(cfg.spec)
            for rec in determinantal_samples(lat, seed=0, count=20):
                assert lat.is_perfect(rec.edges)
                assert rec.weight == pytest.approx(lat.matching_weight(rec.edges))

    def test_refactor_schedule_does_not_change_samples(self, tiny_config):
        lat = build_lattice(tiny_config.spec)
        U = np.random.default_rng(0).random((50, len(lat.whites)))
        a = DeterminantalSampler(lat).sample_batch(U)
        b = DeterminantalSampler(lat, refactor_every=2).sample_batch(U)
        assert a == b

    def test_agrees_with_kernel_sampler(self, tiny_config):
        """Chi-square homogeneity between the two samplers over all chains."""
        spec = tiny_config.spec
        n = 20000
        kern = Counter(sample_chains(spec, seed=1, count=n))
        kast = Counter(r.signatures for r in determinantal_samples(build_lattice(spec), seed=2, count=n))
        keys = sorted(exact_chain_distribution(spec))
        table = np.array([[kern.get(k, 0) for k in keys], [kast.get(k, 0) for k in keys]])
        table = table[:, table.sum(axis=0) > 0]
        assert table.sum() == 2 * n
        _, pval, _, _ = stats.chi2_contingency(table)
        assert pval > 1e-3

    def test_matches_enumerated_law(self, tiny_config):
        spec = tiny_config.spec
        law = exact_chain_distribution(spec)
        n = 20000
        counts = Counter(r.signatures for r in determinantal_samples(build_lattice(spec), seed=4, count=n))
        assert set(counts) <= set(law)
        obs = np.array([counts.get(k, 0) for k in law])
        exp = n * np.array(list(law.values()))
        _, pval = stats.chisquare(obs, exp)
        assert pval > 1e-3
