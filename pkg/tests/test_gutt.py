import random

import pytest
from hypothesis import given, settings, strategies as st

from homstar.algebroid import AlgebroidPresentation
from homstar.desk import abelian, aff1, form2, heisenberg, so3, tangent
from homstar.gutt import EnvelopingAlgebra, gutt_as_series, gutt_product, pbw
from homstar.hkr import PreconditionError
from homstar.poly import Poly
from homstar.scalar import ONE, frac
from homstar.star import monomial_probes, verify_star

H3 = heisenberg()
SP = H3.space
XI = [Poly.xi(SP, k) for k in range(3)]
HB = Poly.hbar(SP)


def test_pbw_of_generator():
    assert pbw(H3, XI[0]) == {(0,): ONE}


def test_pbw_symmetrizes():
    U = EnvelopingAlgebra(H3)
    want = {}
    for w, c in U.mul({(0,): ONE}, {(1,): ONE}).items():
        want[w] = want.get(w, 0) + c * frac(1, 2)
    for w, c in U.mul({(1,): ONE}, {(0,): ONE}).items():
        want[w] = want.get(w, 0) + c * frac(1, 2)
    assert pbw(H3, XI[0] * XI[1]) == {w: c for w, c in want.items() if c}


def test_pbw_matches_plain_symmetrization_without_connection():
    U = EnvelopingAlgebra(so3())
    for idx in [(0, 1), (0, 1, 2), (0, 0, 1), (2, 1, 1, 0)]:
        assert U.pbw_word(idx) == U.symmetrize(idx)


@pytest.mark.parametrize("make", [heisenberg, so3, aff1])
def test_pbw_inverse_is_inverse(make):
    A = make()
    U = EnvelopingAlgebra(A)
    for F in monomial_probes(A.space, 3):
        pieces = U.pbw_inv(U.pbw(F), A.space)
        assert sum(pieces.values(), Poly.zero(A.space)) == F
        assert set(pieces) <= {sum(next(iter(F.terms)))}


def test_heisenberg_commutator():
    got = gutt_product(H3, XI[0], XI[1]) - gutt_product(H3, XI[1], XI[0])
    assert got == HB * XI[2]


def test_twisted_abelian_commutator():
    A = abelian(2)
    sp = A.space
    x1, x2 = Poly.xi(sp, 0), Poly.xi(sp, 1)
    B = form2(A, {(0, 1): 1})
    h = Poly.hbar(sp)
    assert gutt_product(A, x1, x2, B) - gutt_product(A, x2, x1, B) == h * h


def test_product_with_generator_on_the_right():
    # F * xi1 has no correction when F involves only xi1 and central directions
    F = XI[0] ** 2 * XI[2]
    assert gutt_product(H3, F, XI[0]) == F * XI[0]


def test_degree_grading():
    # the hbar^i term has fibre degree k + l - i
    rnd = random.Random(7)
    probes = monomial_probes(SP, 3)
    for _ in range(20):
        F, G = rnd.choice(probes), rnd.choice(probes)
        k, l = max(F.fibre_degrees()), max(G.fibre_degrees())
        for e in gutt_product(so3(), F, G).terms:
            assert e[0] + sum(e[1:]) == k + l


@settings(max_examples=20)
@given(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3), st.integers(0, 2), st.integers(0, 2))
def test_twisted_commutator_consistency(b12, b13, b23, s, t):
    # [xi_s, xi_t] = hbar c_st^k xi_k + hbar^2 B_st for the twisted enveloping algebra
    B = form2(H3, {(0, 1): b12, (0, 2): b13, (1, 2): b23})
    got = gutt_product(H3, XI[s], XI[t], B) - gutt_product(H3, XI[t], XI[s], B)
    lin = sum((H3.c[s][t][k] * XI[k] for k in range(3)), Poly.zero(SP))
    assert got == HB * lin + HB * HB * B.at((s, t))


def test_non_closed_twist_is_rejected():
    # aff1 plus a central direction; e2^e3 is not closed there
    A = AlgebroidPresentation.from_dicts(0, 3, c={(0, 1, 1): 1})
    with pytest.raises(PreconditionError):
        EnvelopingAlgebra(A, form2(A, {(1, 2): 1}))


def test_needs_a_point_base():
    with pytest.raises(PreconditionError):
        EnvelopingAlgebra(tangent(1))


def test_series_is_a_homogeneous_star():
    s = gutt_as_series(H3, None, 3)
    verify_star(s)
