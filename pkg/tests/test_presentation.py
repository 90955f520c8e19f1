import random

import pytest

from twinloops.presentation import (
    VERDICT,
    AbelianPresentation,
    EmptyGeneratorList,
    SNFCertificateError,
    SNFResult,
    TheoremViolated,
    build_M0_presentation,
    conclude_theorem,
    det,
    determinantal_divisors,
    enumerate_quotient_order,
    factors_from_divisors,
    parse_signs,
    smith_normal_form,
    verify_snf,
)


def test_snf_examples():
    r = smith_normal_form([[2]])
    assert r.invariant_factors == (2,) and r.group == "ℤ/2"
    r = smith_normal_form([[0]])
    assert r.free_rank == 1 and r.group == "ℤ"
    r = smith_normal_form([[2, 0], [2, 2]])
    assert r.invariant_factors == (2, 2)
    assert enumerate_quotient_order([[2, 0], [2, 2]]) == 4


def test_snf_empty_matrices():
    assert smith_normal_form([], 3).free_rank == 3
    assert smith_normal_form([[]], 0).group == "0"


def test_snf_certificate_is_checked():
    r = smith_normal_form([[4, 6], [2, 8]])
    forged = SNFResult(r.U, r.V, [[1, 0], [0, 20]], (1, 20), 0)
    with pytest.raises(SNFCertificateError):
        verify_snf([[4, 6], [2, 8]], forged)


def test_det_bareiss():
    assert det([[2, 1], [7, 4]]) == 1
    assert det([[0, 1, 0], [1, 0, 0], [0, 0, 5]]) == -5
    assert det([[1, 2], [2, 4]]) == 0


def test_snf_fuzz_against_divisors_and_enumeration():
    rng = random.Random(7)
    for _ in range(500):
        m, n = rng.randint(0, 4), rng.randint(1, 4)
        R = [[rng.randint(-8, 8) for _ in range(n)] for _ in range(m)]
        res = smith_normal_form(R, n)
        assert factors_from_divisors(determinantal_divisors(R, n)) == res.invariant_factors
        o = enumerate_quotient_order(R, n)
        if o is not None:
            assert o == res.order


def test_m0_examples():
    p = build_M0_presentation([1], [1])
    assert p.relations == ((2,), (2,))
    assert conclude_theorem(p).group == "ℤ/2"
    for signs in ([1, 1, 1], [1, -1, 1], [-1, -1, -1]):
        v = conclude_theorem(build_M0_presentation([1, 2, 3], signs))
        assert v.verdict == VERDICT and set(v.invariant_factors) <= {1, 2}
    assert conclude_theorem(build_M0_presentation([1, 2, 3, 4, 5], [1, 1, -1, 1, -1])).order <= 2
    assert conclude_theorem(build_M0_presentation([0], [1])).verdict == VERDICT


def test_m0_order_bound_when_n1_is_unit():
    rng = random.Random(1)
    for _ in range(200):
        m = rng.randint(1, 5)
        n = [1] + [rng.randint(-9, 9) for _ in range(m - 1)]
        signs = [rng.choice([1, -1]) for _ in range(m)]
        assert conclude_theorem(build_M0_presentation(n, signs)).order <= 2


def test_m0_errors():
    with pytest.raises(EmptyGeneratorList):
        build_M0_presentation([], [])
    with pytest.raises(ValueError):
        build_M0_presentation([1], [2])
    p = build_M0_presentation([1], [-1])
    without_order_two = AbelianPresentation(p.generators, p.relations[1:])
    with pytest.raises(TheoremViolated):
        conclude_theorem(without_order_two)
    with pytest.raises(TheoremViolated):
        conclude_theorem(AbelianPresentation(("g1",), ((3,),)))


def test_parse_signs():
    assert parse_signs("+,-,+1,-1") == [1, -1, 1, -1]
    with pytest.raises(ValueError):
        parse_signs("+,x")
