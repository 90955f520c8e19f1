import pytest

from twinloops.families import concatenate, family_T, family_Tbar, reverse, spin_loop
from twinloops.invariants import (
    InvariantError,
    choose_slice,
    is_pure_x2,
    monomial_sum,
    slice_profile,
    w1,
    w2,
    x2_coefficient,
)
from twinloops.ring import Lambda0Element


@pytest.mark.parametrize("k", [-2, -1, 0, 1, 3])
def test_w1_of_spin(k):
    assert w1(spin_loop(k)) == k


def test_w1_of_builders_is_zero():
    for f in (family_T(2), family_Tbar(3)):
        assert w1(f) == 0


def test_w1_concatenation():
    assert w1(concatenate(spin_loop(1), spin_loop(2))) == 3


@pytest.mark.parametrize("i", [1, 2, 3])
def test_T_gives_single_monomial(i):
    r = w2(family_T(i))
    assert r.w2 == Lambda0Element(((i + 1, 1),))
    assert all(d.k == d.k_slice for _, d in r.classes)
    assert r.certification["swap_checks_passed"]


@pytest.mark.parametrize("i", [1, 2, 3])
def test_Tbar_gives_multiple_of_x2(i):
    r = w2(family_Tbar(i))
    assert is_pure_x2(r.w2) and abs(x2_coefficient(r.w2)) == i


def test_identity_and_inverse():
    f = family_T(1)
    assert w2(concatenate(f, spin_loop(0))).w2 == w2(f).w2
    assert w2(concatenate(f, reverse(f))).w2.is_zero()


def test_monomial_sum_reduces():
    assert monomial_sum([(1, -2), (-1, 0), (1, 1)]) == Lambda0Element(((2, 1),))


def test_choose_slice_avoids_endpoints():
    r = w2(family_T(1))
    s = choose_slice([c for c, _ in r.classes], 0.0, family_T(1))
    assert s == 0.0


class _Point:
    def __init__(self, t, z1, z2):
        self.t, self.z1, self.z2 = t, z1, z2


class _Identity:
    """theta(t, z) = z, so endpoint angles are the z values themselves."""

    def theta(self, t, z):
        return z


def test_choose_slice_shifts_then_gives_up():
    assert choose_slice([_Point(0.5, 0.0, 1.0)], 0.0, _Identity()) == pytest.approx(0.01)
    crowded = [_Point(0.5, 0.01 * k, 3.0) for k in range(17)]
    with pytest.raises(InvariantError):
        choose_slice(crowded, 0.0, _Identity())


def test_slice_profile_patterns():
    f = family_Tbar(3)
    for k in range(16):
        p = slice_profile(f, (k + 0.5) / 16)
        assert sorted(p.pattern) in ([1], [-1, 1, 1])
        assert p.total == 1
        assert p.subcounts() <= {0, 1, -1, 2}
    assert [slice_profile(spin_loop(0), t).pattern for t in (0.1, 0.7)] == [[1], [1]]
