from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sqhex.partitions import (
    CountingMeasure,
    Signature,
    counting_measure,
    interlacing_below,
    is_horizontal_strip,
    is_vertical_strip,
    measure_moment,
    staircase,
    vertical_strips_above,
)


def signatures(min_len=0, max_len=5, lo=0, hi=6):
    return st.lists(st.integers(lo, hi), min_size=min_len, max_size=max_len).map(lambda v: Signature(sorted(v, reverse=True)))


class TestSignature:
    def test_rejects_increasing(self):
        with pytest.raises(ValueError):
            Signature((0, 1))

    def test_empty_is_legal(self):
        assert Signature(()) == ()
        assert Signature(()).is_nonnegative

    def test_negative_parts_allowed(self):
        assert not Signature((1, -2)).is_nonnegative


class TestStrips:
    @pytest.mark.parametrize(
        "inner,outer,expected",
        [
            ((1,), (2, 0), True),
            ((0, 0), (2, 0), True),
            ((2, 0), (1, 1), False),
            ((1, 0), (2, 1), True),
        ],
    )
    def test_horizontal(self, inner, outer, expected):
        assert is_horizontal_strip(inner, outer) is expected

    @pytest.mark.parametrize(
        "inner,outer,expected",
        [((0,), (1,), True), ((0, 0), (2, 0), False), ((1, 0), (2, 1), True)],
    )
    def test_vertical(self, inner, outer, expected):
        assert is_vertical_strip(inner, outer) is expected

    def test_length_gap_rejected(self):
        with pytest.raises(ValueError):
            is_horizontal_strip((1,), (3, 2, 1))

    @given(signatures(1, 4))
    def test_interlacing_below_are_horizontal_strips(self, nu):
        below = list(interlacing_below(nu))
        assert below, "at least one μ ≺ ν exists"
        for mu in below:
            assert is_horizontal_strip(mu, nu)
        assert len(set(below)) == len(below)

    @given(signatures(1, 4))
    def test_interlacing_count_is_box_product(self, nu):
        expected = 1
        for a, b in zip(nu, nu[1:]):
            expected *= a - b + 1
        assert len(list(interlacing_below(nu))) == expected

    @given(signatures(1, 4))
    def test_vertical_strips_above(self, mu):
        above = list(vertical_strips_above(mu))
        assert mu in above
        for nu in above:
            assert is_vertical_strip(mu, nu)

    @given(signatures(1, 4), signatures(1, 4))
    def test_strips_imply_containment(self, a, b):
        if abs(len(a) - len(b)) > 1:
            return
        L = max(len(a), len(b))
        pa, pb = a.padded(L), b.padded(L)
        if is_horizontal_strip(a, b) or is_vertical_strip(a, b):
            assert all(x <= y for x, y in zip(pa, pb))


class TestCountingMeasure:
    def test_example_210(self):
        mu = counting_measure((2, 1, 0))
        assert dict(mu.atoms) == {Fraction(4, 3): Fraction(1, 3), Fraction(2, 3): Fraction(1, 3), Fraction(0): Fraction(1, 3)}

    def test_densely_packed(self):
        N = 5
        mu = counting_measure((0,) * N)
        assert dict(mu.atoms) == {Fraction(N - i, N): Fraction(1, N) for i in range(1, N + 1)}

    def test_equal_parts(self):
        # (λ_i + N - i)/N with λ = (2, 2), N = 2
        mu = counting_measure((2, 2))
        assert dict(mu.atoms) == {Fraction(3, 2): Fraction(1, 2), Fraction(1): Fraction(1, 2)}

    def test_moments(self):
        mu = counting_measure((2, 1, 0))
        assert measure_moment(mu, 0) == 1
        assert measure_moment(mu, 1) == Fraction(2, 3)

    def test_coinciding_atoms_merge(self):
        mu = CountingMeasure.from_points([Fraction(1, 2), Fraction(1, 2), Fraction(1)])
        assert dict(mu.atoms) == {Fraction(1, 2): Fraction(2, 3), Fraction(1): Fraction(1, 3)}

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            counting_measure(())

    @given(signatures(1, 6, 0, 9))
    def test_total_mass_one(self, lam):
        assert measure_moment(counting_measure(lam), 0) == 1

    @pytest.mark.parametrize("N", range(1, 21))
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_staircase_atoms_equispaced(self, m, N):
        mu = counting_measure(staircase(m, N))
        assert sorted(loc for loc, _ in mu.atoms) == [Fraction(m * (N - i), N) for i in range(N, 0, -1)]

    def test_json(self):
        assert counting_measure((1,)).to_json() == [["1", "1"]]
