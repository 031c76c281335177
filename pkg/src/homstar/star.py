"""Homogeneous star products: construction, normalization, equivalences, Moyal."""
from __future__ import annotations

import hashlib
from itertools import product as iproduct
from math import factorial

from .algebroid import (
    AForm,
    AlgebroidPresentation,
    d_A,
    form_vertical_lift,
    parse_presentation,
    poisson_cochain,
    render_presentation,
)
from .cochain import (
    Cochain,
    EquivalenceSeries,
    StarSeries,
    apply,
    compose_ops,
    gerstenhaber,
    hochschild_d,
    homogeneity_degree,
    is_homogeneous,
    mc_defect,
    mu0,
    substitute,
    tau,
)
from .desk import tangent
from .hkr import InfeasibleError, PreconditionError, hkr, solve_potential
from .poly import Poly, StructureError, VarSpec, parse, render
from .scalar import GQ, I, ONE, frac

HALF = frac(1, 2)


class StarError(RuntimeError):
    """A construction or verification step failed; ``residual`` carries the offending cochain."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


def first_order(A: AlgebroidPresentation) -> Cochain:
    return poisson_cochain(A).scale(I * HALF)


def _rhs(C: list, r: int) -> Cochain:
    """-1/2 sum_{l=1}^{r-1} [C_l, C_{r-l}] (the cochain dC_r must equal)."""
    space = C[0].space
    acc = Cochain.zero(space, 3)
    # [C_l, C_{r-l}] = [C_{r-l}, C_l] in degree one, so each pair is computed once
    for l in range(1, r):
        if l < r - l:
            acc = acc + gerstenhaber(C[l - 1], C[r - l - 1])
        elif l == r - l:
            acc = acc + gerstenhaber(C[l - 1], C[l - 1]).scale(HALF)
    return -acc


def _next_order(C: list, r: int) -> Cochain:
    R = _rhs(C, r)
    if not hochschild_d(R).is_zero():
        raise StarError(f"order {r}: right-hand side is not closed", R)
    try:
        return solve_potential(R)
    except PreconditionError as exc:
        raise StarError(f"order {r}: {exc}", R) from exc


def build_star(A: AlgebroidPresentation, B: AForm | None, K: int) -> StarSeries:
    """Homogeneous star product with first order (i/2){,} and class [B]."""
    space = A.space
    if B is None:
        B = AForm.zero(space, 2)
    if B.p != 2:
        raise ValueError("B must be a 2-form")
    if not d_A(A, B).is_zero():
        raise PreconditionError("B is not closed")
    C1 = first_order(A)
    C = [C1]
    if K >= 2:
        R2 = -gerstenhaber(C1, C1).scale(HALF)
        P = solve_potential(R2)
        C2 = (P + tau(P)).scale(HALF) + hkr(form_vertical_lift(B))
        if hochschild_d(C2) != R2:
            raise StarError("order 2: symmetrized potential does not solve the equation", R2)
        C.append(C2)
    for r in range(3, K + 1):
        C.append(_next_order(C, r))
    return StarSeries(space, K, C, A, "internal")


def extend_star(star: StarSeries, K: int) -> StarSeries:
    """Continue a star product given to order >= 3 up to order K."""
    if star.K < 3:
        raise ValueError("extend_star needs the first three orders")
    for r in range(1, star.K + 1):
        dfc = mc_defect(star, r)
        if not dfc.is_zero():
            raise StarError(f"input defect at order {r}", dfc)
    C = list(star.C)
    for r in range(star.K + 1, K + 1):
        C.append(_next_order(C, r))
    return StarSeries(star.space, K, C, star.presentation, star.tag)


def apply_equivalence(W: EquivalenceSeries, star: StarSeries) -> StarSeries:
    """The product W o star o (W^-1 (x) W^-1), so that W(F*G) = W(F) *' W(G)."""
    K = min(W.K, star.K)
    V = W.inverse()
    space = star.space
    inner: dict = {}
    # inner_r = sum_{b+c+e=r} C_b(V_c ., V_e .)
    for b in range(K + 1):
        Cb = star.order(b)
        if Cb.is_zero():
            continue
        for c in range(K + 1 - b):
            Vc = V.order(c)
            if c and Vc.is_zero():
                continue
            for e in range(K + 1 - b - c):
                Ve = V.order(e)
                if e and Ve.is_zero():
                    continue
                t = Cb if c == 0 and e == 0 else substitute(Cb, [Vc, Ve])
                r = b + c + e
                inner[r] = inner[r] + t if r in inner else t
    out = []
    for r in range(1, K + 1):
        acc = Cochain.zero(space, 2)
        for a in range(r + 1):
            Wa = W.order(a)
            if a and Wa.is_zero():
                continue
            t = inner.get(r - a)
            if t is None or t.is_zero():
                continue
            acc = acc + (t if a == 0 else compose_ops(Wa, t))
        out.append(acc)
    return StarSeries(space, K, out, star.presentation, star.tag)


def equivalence_from(space: VarSpec, K: int, parts: dict) -> EquivalenceSeries:
    """id + sum hbar^r parts[r]."""
    S = [parts.get(r, Cochain.zero(space, 1)) for r in range(1, K + 1)]
    return EquivalenceSeries(space, K, S)


def normalize_first_order(star: StarSeries):
    """Return (star', W) with C1' = (i/2){,} and W(F*G) = W(F) *' W(G)."""
    A = star.presentation
    space = star.space
    C1 = star.order(1)
    plus, minus = C1 + tau(C1), C1 - tau(C1)
    if A is not None and minus != poisson_cochain(A).scale(I):
        raise StarError("antisymmetric first order is not i times the Poisson bracket", minus - poisson_cochain(A).scale(I))
    if plus.is_zero():
        return star, EquivalenceSeries.identity(space, star.K)
    P = solve_potential(plus)
    W = equivalence_from(space, star.K, {1: P.scale(HALF)})
    out = apply_equivalence(W, star)
    if out.order(1) != minus.scale(HALF):
        raise StarError("normalization failed", out.order(1) - minus.scale(HALF))
    return out, W


def check_equivalence(W: EquivalenceSeries, star: StarSeries, other: StarSeries, probes=None) -> bool:
    """W(F*G) == W(F) *' W(G) on a monomial probe set (exact, to order K)."""
    probes = probes or monomial_probes(star.space, max(2, min(star.K, 3)))
    for F in probes:
        WF = W.apply_to(F)
        for G in probes:
            lhs = W.apply_to(star.product(F, G))
            rhs = other.product(WF, W.apply_to(G))
            if lhs != rhs:
                return False
    return True


def monomial_probes(space: VarSpec, deg: int, base_deg: int | None = None) -> list:
    """All monomials of total degree <= deg (x-degree limited by base_deg)."""
    bd = deg if base_deg is None else base_deg
    exps = [()]
    for j in range(space.n):
        exps = [e + (k,) for e in exps for k in range(deg + 1)]
    out = []
    for e in exps:
        if sum(e) <= deg and sum(e[: space.d]) <= bd:
            out.append(Poly.monomial(space, e))
    out.sort(key=lambda p: (sum(next(iter(p.terms))), next(iter(p.terms))))
    return out


# ---------------------------------------------------------------- Moyal


def _exp_symbol(space: VarSpec, gen: dict, scale: GQ, K: int) -> list:
    """C_k = (scale^k / k!) * gen^k for a constant-coefficient bidifferential symbol gen."""
    z = (0,) * (space.n + 1)
    out = []
    cur = {(space.zero_index(), space.zero_index()): ONE}
    for k in range(1, K + 1):
        nxt: dict = {}
        for (a1, b1), c1 in cur.items():
            for (a2, b2), c2 in gen.items():
                key = (tuple(x + y for x, y in zip(a1, a2)), tuple(x + y for x, y in zip(b1, b2)))
                v = nxt.get(key, GQ(0)) + c1 * c2
                if v:
                    nxt[key] = v
                else:
                    nxt.pop(key, None)
        cur = nxt
        f = scale**k * frac(1, factorial(k))
        out.append(Cochain(space, 2, {key: {z: c * f} for key, c in cur.items()}))
    return out


def moyal_star(d: int, variant: str, K: int, verify: bool = True) -> StarSeries:
    """Moyal-type products on T*R^d with q = x, p = xi.

    ``paper``: coefficients (i hbar)^k/(2^k k!) with q-derivatives on the first and
    p-derivatives on the second argument; ``standard``: (i hbar)^k/k!, same shape;
    ``weyl``: exp((i hbar/2)(dq (x) dp - dp (x) dq)).
    """
    if variant == "paper":
        A, scale = tangent(d, frac(1, 2)), I * HALF
    elif variant == "standard":
        A, scale = tangent(d), I
    elif variant == "weyl":
        A, scale = tangent(d), I * HALF
    else:
        raise ValueError(f"unknown variant {variant!r}")
    space = A.space
    gen = {}
    for j in range(d):
        q, p = space.unit(j), space.unit(d + j)
        gen[(q, p)] = ONE
        if variant == "weyl":
            gen[(p, q)] = -ONE
    star = StarSeries(space, K, _exp_symbol(space, gen, scale, K), A, f"moyal-{variant}")
    if verify:
        verify_star(star)
    return star


# ---------------------------------------------------------------- checks


def verify_star(star: StarSeries, assoc: bool = True, homogeneity: bool = True) -> None:
    for r in range(1, star.K + 1):
        if homogeneity and not is_homogeneous(star.order(r), -r):
            raise StarError(f"order {r} is not homogeneous of degree {-r}", star.order(r))
        if assoc:
            dfc = mc_defect(star, r)
            if not dfc.is_zero():
                raise StarError(f"associativity defect at order {r}", dfc)


def star_bracket_probe(star: StarSeries, s: int, t: int | None = None, f: Poly | None = None) -> Poly:
    """[xi_s, xi_t] or [xi_s, f]; asserts the closed-form expansion of a normalized star."""
    A = star.presentation
    space = star.space
    K = star.K
    h = Poly.hbar(space, K)
    xs = Poly.xi(space, s, K)
    if t is not None:
        xt = Poly.xi(space, t, K)
        got = star.bracket(xs, xt)
        jb = Poly.zero(space, K)
        for k in range(A.m):
            if A.c[s][t][k]:
                jb = jb + A.c[s][t][k] * Poly.xi(space, k, K)
        want = -(I * h * jb)
        if K >= 2:
            C2 = star.order(2)
            want = want + h * h * (apply(C2, [xs, xt]) - apply(C2, [xt, xs]))
    else:
        f = f.truncate(K)
        got = star.bracket(xs, f)
        # i hbar {xi_s, f} with {f, xi_s} = rho(e_s) f
        want = -(I * h * A.anchor_apply(A.basis_section(s), f))
    if got != want:
        raise StarError("bracket expansion identity fails", got - want)
    return got


def eval_hbar(star: StarSeries, F: Poly, G: Poly, value) -> Poly:
    """F*G with hbar set to a number; exact because C_r(F,G) = 0 once r exceeds the fibre degrees."""
    need = max(F.fibre_degrees() | {0}) + max(G.fibre_degrees() | {0})
    if star.K < need:
        raise ValueError(f"truncation {star.K} too small to evaluate exactly (need {need})")
    return star.product(F, G).eval_hbar(value)


# ---------------------------------------------------------------- star file


def _render_multi(a) -> str:
    return ",".join(map(str, a))


def render_star(star: StarSeries) -> str:
    body = []
    for r, Cr in enumerate(star.C, 1):
        for derivs, c in Cr.sorted_items():
            key = "|".join(_render_multi(a) for a in derivs)
            body.append(f"C[{r}][{key}] = {render(Poly(star.space, c))}")
    pres = render_presentation(star.presentation) if star.presentation is not None else ""
    digest = hashlib.sha256(("\n".join(body) + "\n" + pres).encode()).hexdigest()
    head = [
        "format = homstar-star/1",
        f"K = {star.K}",
        f"convention = {star.tag}",
        f"presentation_hash = {star.presentation.digest() if star.presentation is not None else '-'}",
        f"digest = {digest}",
    ]
    pres_lines = ["presentation." + ln for ln in pres.splitlines()]
    return "\n".join(head + pres_lines + body) + "\n"


def parse_star(text: str, verify: bool = True) -> StarSeries:
    head, pres_lines, body = {}, [], []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("presentation."):
            pres_lines.append(line[len("presentation."):])
        elif line.startswith("C["):
            body.append((line, ln))
        elif "=" in line:
            k, v = line.split("=", 1)
            head[k.strip()] = v.strip()
        else:
            raise StructureError(f"line {ln}: unrecognized")
    if head.get("format") != "homstar-star/1":
        raise StructureError("not a star file")
    A = parse_presentation("\n".join(pres_lines) + "\n")
    if head.get("presentation_hash") != A.digest():
        raise StructureError("presentation hash mismatch")
    K = int(head["K"])
    space = A.space
    terms = [dict() for _ in range(K)]
    for line, ln in body:
        lhs, rhs = line.split("=", 1)
        lhs = lhs.strip()
        r_s, key = lhs[2:].split("][", 1)
        r = int(r_s)
        key = key.rstrip("]")
        derivs = tuple(tuple(int(v) for v in part.split(",")) for part in key.split("|"))
        if not 1 <= r <= K or len(derivs) != 2 or any(len(a) != space.n for a in derivs):
            raise StructureError(f"line {ln}: bad cochain term")
        terms[r - 1][derivs] = dict(parse(rhs.strip(), space).terms)
    star = StarSeries(space, K, [Cochain(space, 2, t) for t in terms], A, head.get("convention", "internal"))
    if render_star(star) != _canonical(text):
        raise StructureError("star file digest mismatch or non-canonical content")
    if verify:
        verify_star(star)
    return star


def _canonical(text: str) -> str:
    return "\n".join(l.strip() for l in text.splitlines() if l.strip() and not l.strip().startswith("#")) + "\n"


def render_equivalence(W: EquivalenceSeries) -> str:
    lines = ["format = homstar-equivalence/1", f"K = {W.K}", f"space = {W.space.d},{W.space.m}"]
    for r, Sr in enumerate(W.S, 1):
        for derivs, c in Sr.sorted_items():
            lines.append(f"S[{r}][{_render_multi(derivs[0])}] = {render(Poly(W.space, c))}")
    return "\n".join(lines) + "\n"
