"""Constraint algebroids, projectable star products, reduction and representations.

Everything here works with split (coordinate-aligned) data.  Total coordinates
are sorted into three groups relative to the submanifold E_N = {x_out = 0, xi_k = 0}
of the dual bundle and the projection E_N -> E_red:

* N  normal coordinates   x_out, xi_k          (generate the vanishing ideal)
* v  fibre coordinates    x_C \\ x_red, xi_c     (forgotten by the projection)
* u  reduced coordinates  x_red, xi_n          (coordinates of E_red)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .algebroid import (
    AForm,
    AlgebroidPresentation,
    Cohomology,
    _parse_kv,
    d_A,
    kks_bracket,
    poisson_cochain,
    validate,
    vertical_lift,
)
from .classes import ClassReport, characteristic_class, class_of, relative_form, second_order_form
from .cochain import (
    Cochain,
    EquivalenceSeries,
    StarSeries,
    apply,
    gerstenhaber,
    hochschild_d,
    is_homogeneous,
    mc_defect,
    substitute,
    tau,
)
from .algebroid import form_vertical_lift
from .hkr import InfeasibleError, block_residuals, hkr, solve_blocks
from .linalg import Solver
from .poly import Poly, StructureError, VarSpec
from .scalar import GQ, I, ONE, ZERO, frac
from .star import (
    StarError,
    apply_equivalence,
    check_equivalence,
    equivalence_from,
    monomial_probes,
    verify_star,
)

HALF = frac(1, 2)


class TheoremViolation(RuntimeError):
    """A computation contradicted a statement that should hold (a bug or a genuine gap)."""

    def __init__(self, msg, data=None):
        super().__init__(msg)
        self.data = data


# ------------------------------------------------------------------ transfer between spaces


def transfer(F: Poly, target: VarSpec, varmap: list, strict: bool = True) -> Poly:
    """Rename variables; varmap[j] is the target index of total variable j or None (set to 0).

    With ``strict`` a surviving term depending on an unmapped variable whose
    map entry is the string ``"forbid"`` raises.
    """
    out = {}
    for e, c in F.terms.items():
        ne = [0] * (target.n + 1)
        ne[0] = e[0]
        dead = False
        for j, k in enumerate(e[1:]):
            if not k:
                continue
            t = varmap[j]
            if t is None:
                dead = True
                break
            if t == "forbid":
                if strict:
                    raise StructureError("polynomial depends on a variable that does not descend")
                dead = True
                break
            ne[1 + t] += k
        if not dead:
            key = tuple(ne)
            v = out.get(key, ZERO) + c
            if v:
                out[key] = v
            else:
                out.pop(key, None)
    return Poly(target, out, F.K)


def sub_presentation(A: AlgebroidPresentation, base_keep: list, fibre_keep: list, forbid_base=()):
    """Presentation on kept base coordinates and kept fibre indices.

    Base coordinates not kept are set to zero, except those in ``forbid_base``
    on which the data must not depend.  Returns (presentation, varmap).
    """
    sp = VarSpec(len(base_keep), len(fibre_keep))
    varmap: list = [None] * A.space.n
    for t, a in enumerate(base_keep):
        varmap[a] = t
    for a in forbid_base:
        varmap[a] = "forbid"
    for t, i in enumerate(fibre_keep):
        varmap[A.d + i] = sp.d + t

    def tr(p):
        return transfer(p, sp, varmap)

    an = [[tr(A.anchor[i][a]) for a in base_keep] for i in fibre_keep]
    cc = [[[tr(A.c[i][j][q]) for q in fibre_keep] for j in fibre_keep] for i in fibre_keep]
    names = [A.basis_names[i] for i in fibre_keep]
    return AlgebroidPresentation(sp.d, sp.m, an, cc, names), varmap


# ------------------------------------------------------------------ constraint data


@dataclass
class ConstraintPresentation:
    A: AlgebroidPresentation
    x_out: tuple
    k: tuple
    n: tuple
    c: tuple
    x_red: tuple | None = None

    def __post_init__(self):
        self.x_out = tuple(sorted(self.x_out))
        self.k, self.n, self.c = tuple(sorted(self.k)), tuple(sorted(self.n)), tuple(sorted(self.c))
        x_C = tuple(a for a in range(self.A.d) if a not in self.x_out)
        if self.x_red is None:
            self.x_red = x_C
        self.x_red = tuple(sorted(self.x_red))
        self.x_C = x_C
        self.x_v = tuple(a for a in x_C if a not in self.x_red)

    @property
    def space(self) -> VarSpec:
        return self.A.space

    @property
    def A_N_indices(self) -> tuple:
        return tuple(sorted(self.k + self.n))

    def groups(self):
        d = self.A.d
        N = set(self.x_out) | {d + i for i in self.k}
        V = set(self.x_v) | {d + i for i in self.c}
        U = set(self.x_red) | {d + i for i in self.n}
        return N, V, U

    def A_N(self):
        return sub_presentation(self.A, list(self.x_C), list(self.A_N_indices))

    def A_red(self):
        return sub_presentation(self.A, list(self.x_red), list(self.n), forbid_base=self.x_v)

    def red_varmap(self) -> list:
        """Total variable -> reduced variable (None for N and v)."""
        sp = self.space
        red = VarSpec(len(self.x_red), len(self.n))
        vm: list = [None] * sp.n
        for t, a in enumerate(self.x_red):
            vm[a] = t
        for t, i in enumerate(self.n):
            vm[sp.d + i] = red.d + t
        return vm

    def lift_varmap(self) -> list:
        """Reduced variable -> total variable."""
        sp = self.space
        out = list(self.x_red) + [sp.d + i for i in self.n]
        return out


def identity_constraint(A: AlgebroidPresentation) -> ConstraintPresentation:
    return ConstraintPresentation(A, (), (), tuple(range(A.m)), ())


@dataclass
class ConstraintReport:
    ok: bool
    failures: list
    A_N: AlgebroidPresentation | None = None
    A_red: AlgebroidPresentation | None = None

    def __bool__(self):
        return self.ok


def _restrict_C(cp, p: Poly) -> Poly:
    return p.restrict(cp.x_out)


def validate_constraint(cp: ConstraintPresentation) -> ConstraintReport:
    A = cp.A
    fails = []
    if not validate(A):
        fails.append(("total-presentation-invalid", None))
    allidx = sorted(cp.k + cp.n + cp.c)
    if allidx != list(range(A.m)):
        fails.append(("fibre-split-not-a-partition", (cp.k, cp.n, cp.c)))
    if set(cp.x_red) - set(cp.x_C) or len(set(cp.x_out)) != len(cp.x_out):
        fails.append(("base-split-invalid", (cp.x_out, cp.x_red)))
    if fails:
        return ConstraintReport(False, fails)
    AN = set(cp.A_N_indices)
    lab = lambda *t: tuple(v + 1 for v in t)
    # A_N is a subalgebroid over C: anchor tangent to C, brackets close
    for i in AN:
        for a in cp.x_out:
            if _restrict_C(cp, A.anchor[i][a]):
                fails.append(("anchor-not-tangent-to-C", lab(i, a)))
    for i, j in combinations(sorted(AN), 2):
        for q in cp.c:
            if _restrict_C(cp, A.c[i][j][q]):
                fails.append(("A_N-not-closed-under-bracket", lab(i, j, q)))
    # ker P = k: [k, A_N] lands in k, anchor of k is vertical for C -> M_red
    for i in cp.k:
        for j in AN:
            for q in cp.n:
                if _restrict_C(cp, A.c[i][j][q]):
                    fails.append(("quotient-bracket-ill-defined", lab(i, j, q)))
        for a in cp.x_red:
            if _restrict_C(cp, A.anchor[i][a]):
                fails.append(("kernel-anchor-not-vertical", lab(i, a)))
    # reduced data must be basic (independent of x_C \ x_red on C)
    vset = set(cp.x_v)
    for i in cp.n:
        for a in cp.x_red:
            p = _restrict_C(cp, A.anchor[i][a])
            if any(e[1 + b] for e in p.terms for b in vset):
                fails.append(("reduced-anchor-not-basic", lab(i, a)))
        for j in cp.n:
            for q in cp.n:
                p = _restrict_C(cp, A.c[i][j][q])
                if any(e[1 + b] for e in p.terms for b in vset):
                    fails.append(("reduced-bracket-not-basic", lab(i, j, q)))
    AN_p = Ared = None
    if not fails:
        AN_p, _ = cp.A_N()
        Ared, _ = cp.A_red()
        if not validate(AN_p):
            fails.append(("A_N-invalid", None))
        if not validate(Ared):
            fails.append(("A_red-invalid", None))
    return ConstraintReport(not fails, fails, AN_p, Ared)


# ------------------------------------------------------------------ coisotropy


def _in_monomial_ideal(F: Poly, gens: set) -> bool:
    return all(any(e[1 + j] for j in gens) for e in F.terms)


@dataclass
class CoisotropicReport:
    coisotropic: bool
    witness: tuple | None = None


def coisotropic_check(A: AlgebroidPresentation, x_out, fibre_zero) -> CoisotropicReport:
    """{J, J} in J for the vanishing ideal J of {x_out = 0, xi_Z = 0}."""
    sp = A.space
    gens = [a for a in sorted(x_out)] + [sp.d + i for i in sorted(fibre_zero)]
    gset = set(gens)
    for g1, g2 in combinations(gens, 2):
        b = kks_bracket(A, Poly.var(sp, g1), Poly.var(sp, g2))
        if not _in_monomial_ideal(b, gset):
            return CoisotropicReport(False, (sp.names()[g1], sp.names()[g2], b))
    return CoisotropicReport(True)


# ------------------------------------------------------------------ projectability rules


class ProjRules:
    """Exact term-wise description of projectable cochains.

    A term coeff-monomial * d^a F * d^b G whose monomial contains a normal
    variable is always harmless.  For normal-free monomials:
      (ii)  b touches N                                  -> violates the left ideal condition
      (iii) a touches N and (b touches N or b lies in u)  -> violates the two-sided condition
      (i)   both arguments basic-visible (touch N or lie in u), not both in u, and v exists,
            or both in u and the monomial involves v      -> violates the subalgebra condition
    Arguments with a = 0 on N but a touching v drop out of every condition.
    """

    def __init__(self, cp: ConstraintPresentation):
        self.cp = cp
        N, V, U = cp.groups()
        self.N, self.V, self.U = tuple(sorted(N)), tuple(sorted(V)), tuple(sorted(U))
        self.tag = (cp.x_out, cp.k, cp.n, cp.c, cp.x_red, cp.A.d, cp.A.m)

    def mono_class(self, e) -> tuple:
        hasN = any(e[1 + j] for j in self.N)
        hasV = any(e[1 + j] for j in self.V)
        return hasN, hasV

    def _kind(self, a) -> str:
        if any(a[j] for j in self.N):
            return "N"
        if any(a[j] for j in self.V):
            return "v"
        return "u"

    def violation2(self, hasN, hasV, a, b):
        if hasN:
            return None
        ka, kb = self._kind(a), self._kind(b)
        if kb == "N":
            return "ii"
        if ka == "N" and kb == "u":
            return "iii"
        if ka != "v" and kb != "v":
            if ka == "u" and kb == "u":
                if hasV:
                    return "i"
            elif self.V:
                return "i"
        return None

    def violation1(self, hasN, hasV, a):
        """Equivalence operators: preserve J and N."""
        if hasN:
            return None
        ka = self._kind(a)
        if ka == "N":
            return "J"
        if ka == "u" and hasV:
            return "N"
        return None

    def allowed(self, arity: int):
        rules = self

        class _A:
            def key(self, e):
                return (rules.tag, arity) + rules.mono_class(e)

            def pred(self, e):
                hN, hV = rules.mono_class(e)
                if arity == 2:
                    return lambda sym: rules.violation2(hN, hV, sym[0], sym[1]) is None
                return lambda sym: rules.violation1(hN, hV, sym[0]) is None

        return _A()

    def cochain_violations(self, D: Cochain) -> list:
        out = []
        for derivs, coef in D.sorted_items():
            for e in sorted(coef):
                hN, hV = self.mono_class(e)
                v = self.violation2(hN, hV, *derivs) if D.arity == 2 else self.violation1(hN, hV, derivs[0])
                if v:
                    out.append((v, derivs, e))
        return out

    def in_J(self, F: Poly) -> bool:
        return _in_monomial_ideal(F, set(self.N))

    def in_N(self, F: Poly) -> bool:
        G = F.restrict(self.N)
        return not any(e[1 + j] for e in G.terms for j in self.V)


@dataclass
class ProjectabilityReport:
    projectable: bool
    first_violation: dict | None = None
    K: int = 0
    probe_degree: int = 0

    def __bool__(self):
        return self.projectable


def _monomial_condition(rules: ProjRules, D: Cochain, F: Poly, G: Poly):
    """Which condition fails for the pair (F, G) under D, if any."""
    FJ, GJ = rules.in_J(F), rules.in_J(G)
    FN, GN = FJ or rules.in_N(F), GJ or rules.in_N(G)
    if not (FN and GN) and not GJ:
        return None
    val = apply(D, [F, G])
    if FN and GN and not rules.in_N(val):
        return "i"
    if GJ and not rules.in_J(val):
        return "ii"
    if FJ and GN and not rules.in_J(val):
        return "iii"
    return None


def projectability_check(star: StarSeries, cp: ConstraintPresentation, K: int | None = None, brute_force: bool = True) -> ProjectabilityReport:
    """Exact projectability test: term rules, confirmed on monomial generators."""
    K = star.K if K is None else min(K, star.K)
    rules = ProjRules(cp)
    order = {"i": 0, "ii": 1, "iii": 2}
    deg = 1 + max((sum(map(sum, dv)) for r in range(1, K + 1) for dv in star.order(r).terms), default=0)
    for r in range(1, K + 1):
        C = star.order(r)
        viol = rules.cochain_violations(C)
        if viol:
            viol.sort(key=lambda t: order[t[0]])
            cond, derivs, e = viol[0]
            sp = star.space
            witness = None
            cands = [(Poly.monomial(sp, derivs[0]), Poly.monomial(sp, derivs[1]))]
            if brute_force:
                probes = monomial_probes(sp, deg)
                cands += [(F, G) for F in probes for G in probes]
            for F, G in cands:
                got = _monomial_condition(rules, C, F, G)
                if got is not None:
                    witness = {"condition": got, "F": str(F), "G": str(G), "value": str(apply(C, [F, G]))}
                    break
            return ProjectabilityReport(False, {"order": r, "condition": cond, "term": (derivs, e), "witness": witness}, K, deg)
        if brute_force:
            for F in monomial_probes(star.space, deg):
                for G in monomial_probes(star.space, deg):
                    got = _monomial_condition(rules, C, F, G)
                    if got is not None:
                        raise TheoremViolation("monomial check disagrees with the term rules", (r, str(F), str(G), got))
    return ProjectabilityReport(True, None, K, deg)


# ------------------------------------------------------------------ reduction


def reduce_star(star: StarSeries, cp: ConstraintPresentation, verify: bool = True) -> StarSeries:
    rep = projectability_check(star, cp, brute_force=False)
    if not rep:
        raise StarError(f"star is not projectable: {rep.first_violation}")
    Ared, _ = cp.A_red()
    rsp = Ared.space
    rules = ProjRules(cp)
    vm = cp.red_varmap()
    sp = star.space
    U = set(rules.U)

    def red_index(a):
        if any(a[j] for j in range(sp.n) if j not in U):
            return None
        return tuple(a[j] for j in cp.x_red) + tuple(a[sp.d + i] for i in cp.n)

    Cs = []
    for r in range(1, star.K + 1):
        terms = {}
        for derivs, coef in star.order(r).terms.items():
            ra, rb = red_index(derivs[0]), red_index(derivs[1])
            if ra is None or rb is None:
                continue
            p = transfer(Poly(sp, coef).restrict(rules.N), rsp, [("forbid" if t is None and j in rules.V else t) for j, t in enumerate(vm)])
            if p:
                terms[(ra, rb)] = dict(p.terms)
        Cs.append(Cochain(rsp, 2, terms))
    red = StarSeries(rsp, star.K, Cs, Ared, star.tag + "-reduced")
    if verify:
        verify_reduction(star, red, cp)
        verify_star(red)
    return red


def reduce_function(F: Poly, cp: ConstraintPresentation, target: VarSpec) -> Poly:
    """F in the normalizer -> the function on E_red it restricts to."""
    rules = ProjRules(cp)
    vm = cp.red_varmap()
    vm = [("forbid" if t is None and j in rules.V else t) for j, t in enumerate(vm)]
    return transfer(F.restrict(rules.N), target, vm)


def lift_function(f: Poly, cp: ConstraintPresentation) -> Poly:
    sp = cp.space
    return transfer(f, sp, cp.lift_varmap())


def verify_reduction(star: StarSeries, red: StarSeries, cp: ConstraintPresentation, deg: int | None = None) -> None:
    """I^*(F * G) = P^*(F~ *_red G~) for normalizer monomials F, G up to degree deg."""
    rules = ProjRules(cp)
    sp = star.space
    deg = deg if deg is not None else min(3, star.K + 1)
    probes = [F for F in monomial_probes(sp, deg) if rules.in_N(F)]
    K = star.K
    for F in probes:
        Fr = reduce_function(F, cp, red.space)
        for G in probes:
            Gr = reduce_function(G, cp, red.space)
            lhs = reduce_function(star.product(F.truncate(K), G.truncate(K)), cp, red.space)
            rhs = red.product(Fr.truncate(K), Gr.truncate(K))
            if lhs != rhs:
                raise TheoremViolation("reduction identity fails", (str(F), str(G), str(lhs - rhs)))


# ------------------------------------------------------------------ projectable forms and classes


def projectable_form_predicate(cp: ConstraintPresentation):
    AN = set(cp.A_N_indices)
    kset, vset, out = set(cp.k), set(cp.x_v), set(cp.x_out)

    def pred(p, key):
        I_, mono = key
        if any(mono[a] for a in out):
            return True
        if not set(I_) <= AN:
            return True
        if set(I_) & kset:
            return False
        return not any(mono[a] for a in vset)

    return pred


def is_projectable_form(cp, alpha: AForm) -> bool:
    pred = projectable_form_predicate(cp)
    d = cp.A.d
    return all(pred(alpha.p, (I_, tuple(e[1:1 + d]))) for I_, v in alpha.comps.items() for e in v.terms)


_PROJ_COH: dict = {}


def projectable_cohomology(cp: ConstraintPresentation, p: int, cap: int | None = None) -> Cohomology:
    if cp.A.d > 0 and cap is None:
        raise ValueError("an x-degree cap is required when the base has positive dimension")
    cap = 0 if cp.A.d == 0 else cap
    from .algebroid import render_presentation

    key = (render_presentation(cp.A), cp.x_out, cp.k, cp.n, cp.c, cp.x_red, p, cap)
    H = _PROJ_COH.get(key)
    if H is None:
        H = _PROJ_COH[key] = Cohomology(cp.A, p, cap, constraint=projectable_form_predicate(cp))
    return H


def _cap(cp, forms, cap):
    if cp.A.d == 0:
        return 0
    if cap is not None:
        return cap
    return max([2] + [f.max_xdeg() for f in forms])


def proj_class_of(cp, phi: AForm, cap=None) -> ClassReport:
    if not is_projectable_form(cp, phi):
        raise StarError("form is not projectable")
    cap = _cap(cp, [phi], cap)
    H = projectable_cohomology(cp, phi.p, cap)
    return ClassReport(phi, H.coordinates(phi), H.basis, {"xdeg_cap": cap, "truncated": cp.A.d > 0, "complex": "projectable"})


def reduce_form(cp: ConstraintPresentation, B: AForm) -> AForm:
    """B_red with I^*B = P^*B_red (components on n-indices over C, pushed to M_red)."""
    if not is_projectable_form(cp, B):
        raise StarError("form is not projectable")
    Ared, varmap = cp.A_red()
    rsp = Ared.space
    pos = {i: t for t, i in enumerate(cp.n)}
    comps = {}
    for I_, v in B.comps.items():
        if set(I_) <= set(cp.n):
            p = transfer(v.restrict(cp.x_out), rsp, varmap)
            if p:
                comps[tuple(pos[i] for i in I_)] = p
    return AForm(rsp, B.p, comps)


def reduce_class(cp: ConstraintPresentation, B: AForm, cap=None) -> ClassReport:
    Ared, _ = cp.A_red()
    Br = reduce_form(cp, B)
    return class_of(Ared, Br, cap if Ared.d else None)


def pullback_form(A, x_out, Z, B: AForm):
    """I^*B on the subalgebroid spanned by the indices Z over {x_out = 0}."""
    x_C = [a for a in range(A.d) if a not in set(x_out)]
    AN, varmap = sub_presentation(A, x_C, sorted(Z))
    pos = {i: t for t, i in enumerate(sorted(Z))}
    comps = {}
    for I_, v in B.comps.items():
        if set(I_) <= set(Z):
            p = transfer(v.restrict(x_out), AN.space, varmap)
            if p:
                comps[tuple(pos[i] for i in I_)] = p
    return AN, AForm(AN.space, B.p, comps)


# ------------------------------------------------------------------ projectable normalization and equivalence


def _solve_constrained(R: Cochain, s: int, rules: ProjRules, alt_target=None) -> Cochain:
    terms = solve_blocks(R, s, allowed=rules.allowed(s), alt_target=alt_target)
    C = Cochain(R.space, s, terms)
    if hochschild_d(C) != R:
        raise TheoremViolation("constrained potential does not reproduce the input")
    return C


def proj_align(star: StarSeries, other: StarSeries, cp: ConstraintPresentation):
    """Move ``star`` by a projectable equivalence W so that its first order equals that of ``other``."""
    rules = ProjRules(cp)
    sp = star.space
    diff = star.order(1) - other.order(1)
    if diff.is_zero():
        return star, EquivalenceSeries.identity(sp, star.K)
    if not hochschild_d(diff).is_zero() or diff != tau(diff):
        raise StarError("first orders differ by more than a symmetric closed cochain")
    try:
        P = _solve_constrained(diff, 1, rules)
    except InfeasibleError as exc:
        raise TheoremViolation("no projectable potential aligning the first orders", exc.residual) from exc
    W = equivalence_from(sp, star.K, {1: P})
    out = apply_equivalence(W, star)
    if out.order(1) != other.order(1):
        raise TheoremViolation("first-order alignment failed")
    return out, W


def proj_relative_class(star: StarSeries, other: StarSeries, cp: ConstraintPresentation, cap=None) -> ClassReport:
    na, _ = proj_align(star, other, cp)
    return proj_class_of(cp, relative_form(na, other), cap)


@dataclass
class ProjEquivalenceVerdict:
    equivalent: bool
    witness: EquivalenceSeries | None = None
    relative_class: ClassReport | None = None
    truncation: dict = field(default_factory=dict)


def preserves_constraint(W: EquivalenceSeries, rules: ProjRules) -> bool:
    return all(not rules.cochain_violations(S) for S in W.S)


def decide_proj_equivalence(star: StarSeries, other: StarSeries, cp: ConstraintPresentation, cap=None, verify=True) -> ProjEquivalenceVerdict:
    rules = ProjRules(cp)
    A = cp.A
    sp = star.space
    K = star.K
    na, Wa = proj_align(star, other, cp)
    nb = other
    phi = relative_form(na, nb)
    rel = proj_class_of(cp, phi, cap)
    trunc = dict(rel.truncation, K=K)
    if not rel.is_zero():
        return ProjEquivalenceVerdict(False, None, rel, trunc)
    total = EquivalenceSeries.identity(sp, K)
    cur = na
    if not phi.is_zero():
        H = projectable_cohomology(cp, 2, rel.truncation["xdeg_cap"])
        alpha = H.primitive(phi)
        if alpha is None:
            raise TheoremViolation("exact projectable form without projectable primitive")
        X = vertical_lift(A, [alpha.at((i,)) for i in range(A.m)]).scale(I)
        W1 = equivalence_from(sp, K, {1: X})
        cur = apply_equivalence(W1, cur)
        total = W1.compose(total)
    for k in range(2, K + 1):
        D = cur.order(k) - nb.order(k)
        if D.is_zero():
            continue
        try:
            E = _solve_constrained(D, 1, rules)
        except InfeasibleError as exc:
            raise TheoremViolation(f"no projectable potential at order {k}", exc.residual) from exc
        Wk = equivalence_from(sp, K, {k: E})
        cur = apply_equivalence(Wk, cur)
        total = Wk.compose(total)
    witness = total.compose(Wa)
    if verify:
        if not preserves_constraint(witness, rules):
            raise TheoremViolation("witness does not preserve the normalizer and the vanishing ideal")
        if not check_equivalence(witness, star, other):
            raise TheoremViolation("projectable witness verification failed")
    return ProjEquivalenceVerdict(True, witness, rel, trunc)


# ------------------------------------------------------------------ make_projectable


def make_projectable(B: AForm, cp: ConstraintPresentation, K: int, verify: bool = True) -> StarSeries:
    """A projectable homogeneous star product with characteristic class [B].

    Orders are solved directly inside the projectable subspace: C1 closed with
    Alt(C1) = (i/2) hkr(pi); C2 with dC2 = -1/2[C1,C1] and Alt(C2) = hkr(W^ver)
    where W corrects for the shift produced by normalizing C1; higher orders by
    constrained potentials.
    """
    A = cp.A
    sp = A.space
    rep = validate_constraint(cp)
    if not rep:
        raise StructureError(f"invalid constraint: {rep.failures}")
    if not d_A(A, B).is_zero():
        raise StructureError("B is not closed")
    if not is_projectable_form(cp, B):
        raise StructureError("B is not projectable")
    rules = ProjRules(cp)
    target1 = poisson_cochain(A).scale(I * HALF)

    def solve(R, s, alt_target=None):
        try:
            return _solve_constrained(R, s, rules, alt_target)
        except InfeasibleError as exc:
            raise TheoremViolation("projectable repair solve is infeasible", exc.residual) from exc

    C1 = target1 if not rules.cochain_violations(target1) else solve(Cochain.zero(sp, 3), 2, alt_target=target1)
    C = [C1]
    if K >= 2:
        from .cochain import alt
        from .star import normalize_first_order

        R2 = -gerstenhaber(C1, C1).scale(HALF)
        trial = solve(R2, 2)
        n_trial, _ = normalize_first_order(StarSeries(sp, 2, [C1, trial], A))
        # the normalized class is affine in Alt(C2) with unit slope
        fix = B - second_order_form(n_trial)
        C2 = trial if fix.is_zero() else solve(R2, 2, alt_target=alt(trial) + hkr(form_vertical_lift(fix)))
        C.append(C2)
    for r in range(3, K + 1):
        R = Cochain.zero(sp, 3)
        for l in range(1, r):
            if l < r - l:
                R = R + gerstenhaber(C[l - 1], C[r - l - 1])
            elif l == r - l:
                R = R + gerstenhaber(C[l - 1], C[l - 1]).scale(HALF)
        C.append(solve(-R, 2))
    star = StarSeries(sp, K, C, A, "projectable")
    if verify:
        verify_star(star)
        rp = projectability_check(star, cp)
        if not rp:
            raise TheoremViolation("constructed star is not projectable", rp.first_violation)
        if K >= 2:
            got = characteristic_class(star)
            want = class_of(A, B, got.truncation["xdeg_cap"])
            if got.coordinates != want.coordinates:
                raise TheoremViolation("class of the constructed star differs from [B]")
    return star


# ------------------------------------------------------------------ representations


def submanifold_dirs(A, x_out, Z):
    sp = A.space
    normal = set(x_out) | {sp.d + i for i in Z}
    return tuple(j for j in range(sp.n) if j not in normal), tuple(sorted(normal))


def _restrict_terms(D: Cochain, normal) -> Cochain:
    out = {}
    for derivs, coef in D.terms.items():
        p = Poly(D.space, coef).restrict(normal)
        if p:
            out[derivs] = dict(p.terms)
    return Cochain(D.space, D.arity, out)


def rho0(space: VarSpec) -> Cochain:
    z = space.zero_index()
    return Cochain(space, 2, {(z, z): {(0,) * (space.n + 1): ONE}})


def _rep_defect(star, rho: list, n: int, normal) -> Cochain:
    """D_n = sum_{i<n} rho_i(C_{n-i}(F,G)) - sum_{0<i<n} rho_i(F) rho_{n-i}(G)."""
    sp = star.space
    ident = Cochain.identity(sp)
    acc = Cochain.zero(sp, 3)
    for i in range(n):
        acc = acc + substitute(rho[i], [star.order(n - i), ident])
    for i in range(1, n):
        acc = acc - substitute(rho[i], [ident, rho[n - i]])
    return _restrict_terms(acc, normal)


def rep_apply(rho: list, F: Poly, phi: Poly, normal, K: int) -> Poly:
    sp = F.space
    h = Poly.hbar(sp, K)
    acc = Poly.zero(sp, K)
    hp = Poly.const(sp, 1, K)
    for r, R in enumerate(rho):
        if r > K:
            break
        acc = acc + hp * apply(R, [F.truncate(K), phi.truncate(K)]).restrict(normal)
        hp = hp * h
    return acc


@dataclass
class RepresentationResult:
    ok: bool
    rho: list
    order_reached: int
    failed_order: int | None = None
    obstruction: ClassReport | None = None
    obstruction_form: AForm | None = None
    witness: tuple | None = None
    adjusted: bool = False


def representation_solver(star: StarSeries, x_out, Z, K: int | None = None, xdeg_cap: int = 2, verify: bool = True) -> RepresentationResult:
    """Order-by-order module structure rho(F*G) = rho(F) rho(G) on functions on {x_out = 0, xi_Z = 0}."""
    A = star.presentation
    sp = star.space
    K = star.K if K is None else min(K, star.K)
    tangent, normal = submanifold_dirs(A, x_out, Z)
    rho = [rho0(sp)]
    adjusted = False
    for n in range(1, K + 1):
        Dn = _rep_defect(star, rho, n, normal)
        if n == 2:
            res = block_residuals(Dn, 1, tangent)
            if res:
                fixed = _adjust_first_order(star, rho, tangent, normal, x_out, Z, xdeg_cap)
                if fixed is not None:
                    rho[1] = fixed
                    adjusted = True
                    Dn = _rep_defect(star, rho, n, normal)
        try:
            terms = solve_blocks(Dn, 1, module_dirs=tangent)
        except InfeasibleError:
            if n == 1:
                co = coisotropic_check(A, x_out, Z)
                return RepresentationResult(False, rho, 0, 1, witness=co.witness)
            if n == 2:
                AN, O = obstruction_form(A, Dn, x_out, Z)
                cls = class_of(AN, O, xdeg_cap if AN.d else None)
                return RepresentationResult(False, rho, 1, 2, cls, O, adjusted=adjusted)
            raise TheoremViolation(f"representation obstructed at order {n} >= 3")
        rn = Cochain(sp, 2, terms)
        rho.append(rn)
    if verify:
        verify_representation(star, rho, normal, tangent, K)
    return RepresentationResult(True, rho, K, adjusted=adjusted)


def _adjust_first_order(star, rho, tangent, normal, x_out, Z, cap):
    """Shift rho_1 by normal vector fields sum a_i(x) d/dxi_i so that order 2 becomes solvable."""
    A = star.presentation
    sp = star.space
    x_C = [a for a in range(A.d) if a not in set(x_out)]
    monos = [()]
    for _ in x_C:
        monos = [m + (k,) for m in monos for k in range(cap + 1)]
    monos = sorted((m for m in monos if sum(m) <= cap), key=lambda m: (sum(m), m))
    z = sp.zero_index()
    cands = []
    for i in sorted(Z):
        for mono in monos:
            e = [0] * (sp.n + 1)
            for a, k in zip(x_C, mono):
                e[1 + a] = k
            cands.append(Cochain(sp, 2, {(sp.unit(sp.d + i), z): {tuple(e): ONE}}))
    base = _rep_defect(star, rho, 2, normal)
    res0 = block_residuals(base, 1, tangent)
    lin = []
    for Zk in cands:
        trial = list(rho)
        trial[1] = rho[1] + Zk
        Dk = _rep_defect(star, trial, 2, normal)
        lin.append(Dk - base)
    # residuals are affine in the shift: solve sum t_k res(L_k) = -res(D0)
    res_l = [block_residuals(L, 1, tangent) for L in lin]
    keys = sorted(set(res0) | {k for r in res_l for k in r}, key=repr)
    kidx = {k: j for j, k in enumerate(keys)}
    cols = [{kidx[k]: v for k, v in r.items()} for r in res_l]
    rhs = {kidx[k]: -v for k, v in res0.items()}
    sol = Solver(cols, len(keys)).solve(rhs)
    if sol is None:
        return None
    new = rho[1]
    for j, t in sol.items():
        new = new + cands[j].scale(t)
    trial = list(rho)
    trial[1] = new
    if block_residuals(_rep_defect(star, trial, 2, normal), 1, tangent):
        return None
    return new


def obstruction_form(A, D2: Cochain, x_out, Z):
    """(s,t) -> D(J s, J t)(1) - D(J t, J s)(1) on the subalgebroid, as a 2-form."""
    sp = A.space
    one = Poly.const(sp, 1)
    Zs = sorted(Z)
    x_C = [a for a in range(A.d) if a not in set(x_out)]
    AN, varmap = sub_presentation(A, x_C, Zs)
    normal = set(x_out) | {sp.d + i for i in Zs}
    comps = {}
    for p, q in combinations(range(len(Zs)), 2):
        s, t = Zs[p], Zs[q]
        xs, xt = Poly.xi(sp, s), Poly.xi(sp, t)
        v = apply(D2, [xs, xt, one]) - apply(D2, [xt, xs, one])
        v = v.restrict(normal)
        w = transfer(v.restrict(range(sp.d, sp.n)), AN.space, varmap)
        if w:
            comps[(p, q)] = w
    return AN, AForm(AN.space, 2, comps)


def verify_representation(star, rho, normal, tangent, K, deg: int = 2) -> None:
    sp = star.space
    probes = monomial_probes(sp, deg)
    phis = [P for P in monomial_probes(sp, deg) if not any(e[1 + j] for e in P.terms for j in normal)]
    for F in probes:
        for G in probes:
            FG = star.product(F.truncate(K), G.truncate(K))
            for phi in phis:
                lhs = rep_apply(rho, FG, phi, normal, K)
                rhs = rep_apply(rho, F, rep_apply(rho, G, phi, normal, K), normal, K)
                if lhs != rhs:
                    raise TheoremViolation("representation property fails", (str(F), str(G), str(phi)))


def adapted_normal_form(star: StarSeries, x_out, Z):
    """Equivalent star with I^*C1(J s, pr^* f) = 0 for f in the vanishing ideal of C.

    Uses S = id - (i hbar/2) D with D = sum_{i in Z} rho_i^a d_xi_i d_x^a - sum_{j not in Z} rho_j^a d_xi_j d_x^a.
    """
    A = star.presentation
    sp = star.space
    terms: dict = {}
    for i in range(A.m):
        sgn = ONE if i in set(Z) else -ONE
        for a in range(A.d):
            r = A.anchor[i][a]
            if r:
                key = (tuple(sp.unit(sp.d + i)[j] + sp.unit(a)[j] for j in range(sp.n)),)
                slot = terms.setdefault(key, {})
                for e, c in r.terms.items():
                    slot[e] = slot.get(e, ZERO) + c * sgn
    D = Cochain(sp, 1, {k: {e: c for e, c in v.items() if c} for k, v in terms.items()})
    if D.is_zero():
        return star, EquivalenceSeries.identity(sp, star.K)
    W = equivalence_from(sp, star.K, {1: D.scale(-(I * HALF))})
    out = apply_equivalence(W, star)
    C1 = out.order(1)
    for s in range(A.m):
        for a in x_out:
            v = apply(C1, [Poly.xi(sp, s), Poly.x(sp, a)]).restrict(list(x_out) + [sp.d + i for i in Z])
            if v:
                raise TheoremViolation("adapted normal form property fails", (s, a, str(v)))
    return out, W


@dataclass
class PullbackVerdict:
    class_vanishes: bool
    representable: bool
    pullback_class: ClassReport
    representation: RepresentationResult


def subalgebroid_failures(A, x_out, Z) -> list:
    """Anchor tangent to {x_out = 0} and brackets closing on Z over it."""
    fails = []
    Zs, out = sorted(Z), list(x_out)
    for i in Zs:
        for a in out:
            if A.anchor[i][a].restrict(out):
                fails.append(("anchor-not-tangent", (i + 1, a + 1)))
    for i, j in combinations(Zs, 2):
        for q in range(A.m):
            if q not in Z and A.c[i][j][q].restrict(out):
                fails.append(("not-closed-under-bracket", (i + 1, j + 1, q + 1)))
    return fails


def pullback_class_test(star: StarSeries, x_out, Z, xdeg_cap: int = 2) -> PullbackVerdict:
    A = star.presentation
    fails = subalgebroid_failures(A, x_out, Z)
    if fails:
        raise StructureError(f"not a subalgebroid: {fails}")
    ready, _ = adapted_normal_form(star, x_out, Z)
    phi = characteristic_class(star, cap=xdeg_cap if A.d else None)
    AN, pb = pullback_form(A, x_out, Z, phi.representative)
    cls = class_of(AN, pb, xdeg_cap if AN.d else None)
    rep = representation_solver(ready, x_out, Z, xdeg_cap=xdeg_cap)
    if rep.ok == (not cls.is_zero()):
        raise TheoremViolation("representability disagrees with the pulled-back class", (rep.ok, cls.coordinates))
    return PullbackVerdict(cls.is_zero(), rep.ok, cls, rep)


# ------------------------------------------------------------------ quantization commutes with reduction


@dataclass
class QRVerdict:
    ok: bool
    path_reduce_then_quantize: tuple
    path_quantize_then_reduce: tuple
    upper_square: bool
    truncation: dict


def qr_diagram_check(cp: ConstraintPresentation, B: AForm, K: int, cap=None) -> QRVerdict:
    A = cp.A
    Ared, _ = cp.A_red()
    # path 1: reduce the class, then quantize on the reduced algebroid
    Br = reduce_form(cp, B)
    from .star import build_star

    s1 = build_star(Ared, Br, K)
    c1 = characteristic_class(s1, cap=cap if Ared.d else None)
    # path 2: quantize projectably, then reduce
    star = make_projectable(B, cp, K)
    red = reduce_star(star, cp)
    c2 = characteristic_class(red, cap=c1.truncation["xdeg_cap"] if Ared.d else None)
    # upper square against the reference star built from B = 0
    ref = make_projectable(AForm.zero(A.space, 2), cp, K)
    rel = proj_relative_class(star, ref, cp, cap)
    total = characteristic_class(star, cap=rel.truncation["xdeg_cap"] if A.d else None)
    rel_total = class_of(A, rel.representative, total.truncation["xdeg_cap"])
    upper = rel_total.coordinates == total.coordinates
    ok = c1.coordinates == c2.coordinates and upper
    return QRVerdict(ok, c1.coordinates, c2.coordinates, upper, {"K": K, "xdeg_cap": c1.truncation["xdeg_cap"]})


# ------------------------------------------------------------------ files


def _index_list(v: str) -> tuple:
    return tuple(int(t) - 1 for t in v.replace(",", " ").split())


def parse_constraint(text: str, A: AlgebroidPresentation) -> ConstraintPresentation:
    kv = {k: v for k, v, _ in _parse_kv(text)}
    unknown = set(kv) - {"x_out", "x_red", "fibre_k", "fibre_n", "fibre_c"}
    if unknown:
        raise StructureError(f"unknown keys {sorted(unknown)}")
    k, n, c = (_index_list(kv.get(f"fibre_{t}", "")) for t in "knc")
    x_red = _index_list(kv["x_red"]) if "x_red" in kv else None
    cp = ConstraintPresentation(A, _index_list(kv.get("x_out", "")), k, n, c, x_red)
    for idx in (cp.k, cp.n, cp.c):
        if any(not 0 <= i < A.m for i in idx):
            raise StructureError("fibre index out of range")
    if any(not 0 <= a < A.d for a in cp.x_out + cp.x_red):
        raise StructureError("base index out of range")
    return cp


def render_constraint(cp: ConstraintPresentation) -> str:
    f = lambda t: " ".join(str(i + 1) for i in t)
    return (
        f"x_out = {f(cp.x_out)}\nx_red = {f(cp.x_red)}\n"
        f"fibre_k = {f(cp.k)}\nfibre_n = {f(cp.n)}\nfibre_c = {f(cp.c)}\n"
    )


def parse_submanifold(text: str, A: AlgebroidPresentation):
    """Keys x_out and fibre_zero; also accepts a constraint file (uses A_N = k + n)."""
    kv = {k: v for k, v, _ in _parse_kv(text)}
    if "fibre_zero" in kv:
        return _index_list(kv.get("x_out", "")), _index_list(kv["fibre_zero"])
    cp = parse_constraint(text, A)
    return cp.x_out, cp.A_N_indices
