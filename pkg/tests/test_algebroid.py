import pytest
from hypothesis import given, strategies as st

import helpers as H
from homstar.algebroid import (
    AForm,
    AlgebroidPresentation,
    cohomology,
    d_A,
    kks_bracket,
    parse_form,
    parse_presentation,
    render_form,
    render_presentation,
    validate,
)
from homstar.desk import CATALOGUE, action_xdx, form2, heisenberg, tangent
from homstar.poly import Poly, StructureError

LIE = {
    "heisenberg": [1, 2, 2, 1],
    "so3": [1, 0, 0, 1],
    "aff1": [1, 1, 0],
    "abelian3": [1, 3, 3, 1],
}


@pytest.mark.parametrize("name", sorted(CATALOGUE))
def test_catalogue_is_valid(name):
    assert validate(CATALOGUE[name]()).ok


def test_broken_jacobi_is_reported():
    # [e1,e2]=e3, [e2,e3]=e1, [e3,e1]=e1 fails Jacobi on (1,2,3)
    A = AlgebroidPresentation.from_dicts(0, 3, c={(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 0): 1})
    rep = validate(A)
    assert not rep.ok
    assert ("jacobi", (1, 2, 3)) in rep.failures


def test_anchor_must_be_a_morphism():
    A = AlgebroidPresentation.from_dicts(1, 2, anchor={(0, 0): 1, (1, 0): "x1"})
    assert any(f[0] == "anchor-bracket" for f in validate(A).failures)


@st.composite
def forms(draw, A, p):
    entries = {}
    for _ in range(draw(st.integers(0, 3))):
        idx = tuple(sorted(draw(st.permutations(range(A.m)))[:p]))
        f = draw(H.polys(A.space, 2, 2))
        entries[idx] = Poly(A.space, {e: c for e, c in f.terms.items() if not any(e[1 + A.d:]) and not e[0]})
    return AForm.from_array(A.space, p, entries)


@pytest.mark.parametrize("name", sorted(CATALOGUE))
@given(data=st.data())
def test_differential_squares_to_zero(name, data):
    A = CATALOGUE[name]()
    p = data.draw(st.integers(0, max(A.m - 2, 0)))
    alpha = data.draw(forms(A, p))
    assert d_A(A, d_A(A, alpha)).is_zero()


@pytest.mark.parametrize("name", sorted(LIE))
def test_lie_cohomology_matches_independent_ranks(name):
    A = CATALOGUE[name]()
    got = [cohomology(A, p).dim for p in range(A.m + 1)]
    want = [H.lie_ce_betti(A.c, A.m, p) for p in range(A.m + 1)]
    assert got == want == LIE[name]


def test_polynomial_de_rham_is_trivial():
    A = tangent(2)
    assert [cohomology(A, p, 2).dim for p in range(3)] == [1, 0, 0]


def test_action_algebroid_cohomology():
    # x d/dx kills only constants and misses only constants
    A = action_xdx()
    assert [cohomology(A, p, 2).dim for p in range(2)] == [1, 1]


def test_heisenberg_structure_equation():
    A = heisenberg()
    e3 = AForm.from_array(A.space, 1, {(2,): 1})
    assert d_A(A, e3) == form2(A, {(0, 1): -1})


def test_class_of_exact_form_is_zero():
    A = heisenberg()
    C = cohomology(A, 2)
    assert C.cls(form2(A, {(0, 1): 1})).is_zero()
    assert not C.cls(form2(A, {(0, 2): 1})).is_zero()


@pytest.mark.parametrize("name", sorted(CATALOGUE))
def test_presentation_text_round_trip(name):
    A = CATALOGUE[name]()
    B = parse_presentation(render_presentation(A))
    assert render_presentation(B) == render_presentation(A)
    assert B.digest() == A.digest()


def test_form_text_round_trip():
    A = heisenberg()
    B = form2(A, {(0, 1): 2, (1, 2): -1})
    assert parse_form(render_form(B), A) == B


def test_bad_presentation_is_rejected():
    with pytest.raises((StructureError, ValueError)):
        parse_presentation("dim_base = 0\nrank = 2\nc[1][3][1] = 1")


def test_linear_poisson_brackets():
    # frozen for the convention pi(dxi_i, dxi_j) = -c_ij^k xi_k, pi(dx_a, dxi_i) = rho_i^a
    A = heisenberg()
    sp = A.space
    xi = [Poly.xi(sp, k) for k in range(3)]
    assert kks_bracket(A, xi[0], xi[1]) == -xi[2]
    assert kks_bracket(A, xi[0], xi[2]).is_zero()
    T = tangent(1)
    assert kks_bracket(T, Poly.x(T.space, 0), Poly.xi(T.space, 0)) == Poly.const(T.space, 1)
