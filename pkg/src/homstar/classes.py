"""Characteristic and relative classes; the equivalence decision procedure."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .algebroid import AForm, Cohomology, d_A, render_presentation, vertical_lift
from .cochain import Cochain, EquivalenceSeries, StarSeries, apply, hochschild_d
from .hkr import solve_potential
from .poly import Poly
from .scalar import I
from .star import (
    StarError,
    apply_equivalence,
    check_equivalence,
    equivalence_from,
    normalize_first_order,
)

DEFAULT_XDEG_CAP = 2

_COHOMOLOGY: dict = {}


def cohomology_cached(A, p: int, cap: int) -> Cohomology:
    key = (render_presentation(A), p, cap if A.d else 0)
    H = _COHOMOLOGY.get(key)
    if H is None:
        H = _COHOMOLOGY[key] = Cohomology(A, p, cap)
    return H


def zero_section(F: Poly) -> Poly:
    """iota^*: set all fibre variables to zero."""
    sp = F.space
    return F.restrict(range(sp.d, sp.n))


def second_order_form(star: StarSeries, D: Cochain | None = None) -> AForm:
    """(s,t) -> iota^* D^-(J s, J t) for D = C2 (or a given cochain)."""
    A = star.presentation
    sp = star.space
    D = star.order(2) if D is None else D
    comps = {}
    for s, t in combinations(range(A.m), 2):
        xs, xt = Poly.xi(sp, s), Poly.xi(sp, t)
        v = apply(D, [xs, xt]) - apply(D, [xt, xs])
        if v.fibre_degrees() - {0}:
            raise StarError("second order is not homogeneous on fibre-linear pairs")
        v = zero_section(v)
        if v:
            comps[(s, t)] = v
    return AForm(sp, 2, comps)


def relative_form(star: StarSeries, other: StarSeries) -> AForm:
    """Relative 2-form of two normalized stars sharing their first order."""
    if star.order(1) != other.order(1):
        raise StarError("first orders differ; normalize both stars first")
    phi = second_order_form(star, star.order(2) - other.order(2))
    if not d_A(star.presentation, phi).is_zero():
        raise StarError("relative form is not closed")
    return phi


@dataclass
class ClassReport:
    representative: AForm
    coordinates: tuple
    basis: list
    truncation: dict

    def is_zero(self) -> bool:
        return not any(self.coordinates)


def _cap_for(A, forms, cap):
    if A.d == 0:
        return 0
    if cap is not None:
        return cap
    return max([DEFAULT_XDEG_CAP] + [f.max_xdeg() for f in forms])


def class_of(A, phi: AForm, cap=None) -> ClassReport:
    cap = _cap_for(A, [phi], cap)
    H = cohomology_cached(A, 2, cap)
    return ClassReport(phi, H.coordinates(phi), H.basis, {"xdeg_cap": cap, "truncated": A.d > 0})


def characteristic_class(star: StarSeries, cap=None, recheck: bool = True) -> ClassReport:
    if star.K < 2:
        raise ValueError("the characteristic class needs K >= 2")
    A = star.presentation
    s2 = star.truncate(2)
    n, _ = normalize_first_order(s2)
    rep = class_of(A, second_order_form(n), cap)
    if recheck and A.m:
        # a second normalization, pre-composed with a homogeneous automorphism
        sp = star.space
        lift = vertical_lift(A, [Poly.const(sp, 1)] + [Poly.zero(sp)] * (A.m - 1))
        pert = apply_equivalence(equivalence_from(sp, 2, {1: lift}), s2)
        n2, _ = normalize_first_order(pert)
        other = class_of(A, second_order_form(n2), rep.truncation["xdeg_cap"])
        if other.coordinates != rep.coordinates:
            raise StarError("characteristic class depends on the normalization")
    return rep


@dataclass
class EquivalenceVerdict:
    equivalent: bool
    witness: EquivalenceSeries | None = None
    relative_class: ClassReport | None = None
    truncation: dict = field(default_factory=dict)


def decide_equivalence(star: StarSeries, other: StarSeries, cap=None, verify: bool = True) -> EquivalenceVerdict:
    """Witness W with W(F*G) = W(F)*'W(G), or the nonzero relative class."""
    A = star.presentation
    if star.space != other.space or star.K != other.K:
        raise ValueError("stars must share presentation and truncation")
    K = star.K
    na, Wa = normalize_first_order(star)
    nb, Wb = normalize_first_order(other)
    phi = relative_form(na, nb)
    rel = class_of(A, phi, cap)
    trunc = dict(rel.truncation, K=K)
    if not rel.is_zero():
        return EquivalenceVerdict(False, None, rel, trunc)
    sp = star.space
    total = EquivalenceSeries.identity(sp, K)
    cur = na
    if not phi.is_zero():
        H = cohomology_cached(A, 2, rel.truncation["xdeg_cap"])
        alpha = H.primitive(phi)
        if alpha is None:
            raise StarError("exact relative form without a primitive under the cap")
        X = vertical_lift(A, [alpha.at((i,)) for i in range(A.m)]).scale(I)
        W1 = equivalence_from(sp, K, {1: X})
        cur = apply_equivalence(W1, cur)
        total = W1.compose(total)
        if not relative_form(cur, nb).is_zero():
            raise StarError("first-order correction did not remove the relative form")
    for k in range(2, K + 1):
        D = cur.order(k) - nb.order(k)
        if D.is_zero():
            continue
        if not hochschild_d(D).is_zero():
            raise StarError(f"difference at order {k} is not closed", D)
        E = solve_potential(D)
        Wk = equivalence_from(sp, K, {k: E})
        cur = apply_equivalence(Wk, cur)
        total = Wk.compose(total)
        if cur.order(k) != nb.order(k):
            raise StarError(f"order {k} correction failed", cur.order(k) - nb.order(k))
    witness = Wb.inverse().compose(total.compose(Wa))
    if verify and not check_equivalence(witness, star, other):
        raise StarError("witness verification failed")
    return EquivalenceVerdict(True, witness, rel, trunc)
