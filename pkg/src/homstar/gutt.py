"""The PBW (Gutt) star product on duals of Lie algebras, optionally twisted by a 2-cocycle.

Words in the (twisted) enveloping algebra are normal ordered by adjacent
transpositions, e_a e_b = e_b e_a + [e_a, e_b] + B(e_a, e_b) for a > b.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import permutations
from math import comb, factorial

from .algebroid import AForm, AlgebroidPresentation, d_A
from .cochain import Cochain, StarSeries, apply
from .hkr import PreconditionError
from .poly import Poly, VarSpec
from .scalar import GQ, I, ONE, ZERO, frac
from .star import StarError, monomial_probes


def _add(acc: dict, key, c) -> None:
    v = acc.get(key, ZERO) + c
    if v:
        acc[key] = v
    else:
        acc.pop(key, None)


class EnvelopingAlgebra:
    """U_B(g): the enveloping algebra with [e_a, e_b] = c_ab^k e_k + B_ab 1."""

    def __init__(self, A: AlgebroidPresentation, B: AForm | None = None, Gamma=None):
        if A.d != 0:
            raise PreconditionError("the PBW construction is implemented over a point (d = 0)")
        if B is not None and not d_A(A, B).is_zero():
            raise PreconditionError("B is not closed")
        self.A = A
        m = A.m
        self.c = [[[A.c[i][j][k].constant_term() for k in range(m)] for j in range(m)] for i in range(m)]
        self.B = [[(B.at((i, j)).constant_term() if B is not None and i != j else ZERO) for j in range(m)] for i in range(m)]
        self.Gamma = Gamma  # constant Christoffels Gamma[i][j][k] (GQ), or None
        self._order = lru_cache(maxsize=None)(self._normal_order)

    def _normal_order(self, word: tuple) -> tuple:
        for p in range(len(word) - 1):
            a, b = word[p], word[p + 1]
            if a > b:
                acc: dict = {}
                head, tail = word[:p], word[p + 2:]
                for w, c in self._order(head + (b, a) + tail):
                    _add(acc, w, c)
                for k in range(self.A.m):
                    if self.c[a][b][k]:
                        for w, c in self._order(head + (k,) + tail):
                            _add(acc, w, c * self.c[a][b][k])
                if self.B[a][b]:
                    for w, c in self._order(head + tail):
                        _add(acc, w, c * self.B[a][b])
                return tuple(sorted(acc.items()))
        return ((word, ONE),)

    def normal(self, u: dict) -> dict:
        acc: dict = {}
        for w, c in u.items():
            for w2, c2 in self._order(tuple(w)):
                _add(acc, w2, c * c2)
        return acc

    def mul(self, u: dict, v: dict) -> dict:
        acc: dict = {}
        for w1, c1 in u.items():
            for w2, c2 in v.items():
                for w, c in self._order(w1 + w2):
                    _add(acc, w, c1 * c2 * c)
        return acc

    # -------------------------------------------------------------- pbw
    def pbw_word(self, idx: tuple) -> dict:
        """pbw of e_{i1} v ... v e_{ik} by the symmetrizing recursion (with optional connection)."""
        return dict(self._pbw(tuple(sorted(idx))))

    @lru_cache(maxsize=None)
    def _pbw(self, idx: tuple) -> tuple:
        k = len(idx)
        if k == 0:
            return (((), ONE),)
        acc: dict = {}
        f = frac(1, k)
        for i in range(k):
            rest = idx[:i] + idx[i + 1:]
            for w, c in self.mul({(idx[i],): ONE}, dict(self._pbw(rest))).items():
                _add(acc, w, c * f)
            if self.Gamma is not None:
                # pbw(nabla_{e_i}(rest)) with nabla acting as a derivation on symmetric products
                for j in range(len(rest)):
                    for q in range(self.A.m):
                        g = self.Gamma[idx[i]][rest[j]][q]
                        if g:
                            new = tuple(sorted(rest[:j] + (q,) + rest[j + 1:]))
                            for w, c in self._pbw(new):
                                _add(acc, w, c * g * f)
        return tuple(sorted(acc.items()))

    def symmetrize(self, idx: tuple) -> dict:
        """Plain symmetrization (1/k!) sum over orderings, normal ordered."""
        acc: dict = {}
        k = len(idx)
        f = frac(1, factorial(k))
        for p in permutations(idx):
            for w, c in self._order(p):
                _add(acc, w, c * f)
        return acc

    def pbw(self, S: Poly) -> dict:
        """Sym element (xi-polynomial without hbar) to a normal-ordered U element."""
        acc: dict = {}
        for e, c in S.terms.items():
            if e[0]:
                raise ValueError("pbw takes hbar-free input; split by hbar powers first")
            idx = tuple(i for i in range(S.space.m) for _ in range(e[1 + i]))
            for w, c2 in self.pbw_word(idx).items():
                _add(acc, w, c * c2)
        return acc

    def pbw_inv(self, u: dict, space: VarSpec) -> dict:
        """Triangular inversion: returns {degree: Poly} pieces of the Sym element."""
        u = dict(u)
        out: dict = {}
        while u:
            top = max(len(w) for w in u)
            for w in sorted(x for x in u if len(x) == top):
                c = u.get(w)
                if not c:
                    continue
                e = [0] * (space.n + 1)
                for i in w:
                    e[1 + space.d + i] += 1
                out.setdefault(top, {})
                _add(out[top], tuple(e), c)
                for w2, c2 in self.pbw_word(w).items():
                    _add(u, w2, -c * c2)
        return {deg: Poly(space, t) for deg, t in out.items() if t}


def pbw(A, S: Poly, B=None, Gamma=None) -> dict:
    return EnvelopingAlgebra(A, B, Gamma).pbw(S)


def _split_hbar(F: Poly) -> dict:
    out: dict = {}
    for e, c in F.terms.items():
        out.setdefault(e[0], {})[(0,) + e[1:]] = c
    return {k: Poly(F.space, v) for k, v in out.items()}


def gutt_product(A, S: Poly, T: Poly, B=None, degree_cap: int = 4, U: EnvelopingAlgebra | None = None, K=None) -> Poly:
    """S * T = sum_i hbar^i pr_{k+l-i} pbw^-1(pbw S . pbw T) (no i in this convention)."""
    U = U or EnvelopingAlgebra(A, B)
    sp = A.space
    for F in (S, T):
        if max(F.fibre_degrees() | {0}) > degree_cap:
            raise ValueError("input exceeds the degree cap")
    acc = Poly.zero(sp, K)
    h = Poly.hbar(sp, K)
    for hs, Sp in _split_hbar(S).items():
        for ht, Tp in _split_hbar(T).items():
            for es, cs in Sp.terms.items():
                for et, ct in Tp.terms.items():
                    ks, kt = sum(es[1:]), sum(et[1:])
                    prod_ = U.mul(U.pbw(Poly(sp, {es: ONE})), U.pbw(Poly(sp, {et: ONE})))
                    for deg, piece in U.pbw_inv(prod_, sp).items():
                        acc = acc + piece * (cs * ct) * h ** (hs + ht + ks + kt - deg)
    return acc


def _binom_poly(sp: VarSpec, a: tuple) -> list:
    """Terms of (y - xi)^a = sum_{a1 <= a} binom (-xi)^{a-a1} y^{a1} as (a1, coeff Poly)."""
    out = [((), Poly.const(sp, 1))]
    for j, aj in enumerate(a):
        nxt = []
        for (pre, c) in out:
            for t in range(aj + 1):
                coef = c * comb(aj, t) * (Poly.xi(sp, j) * -1) ** (aj - t)
                nxt.append((pre + (t,), coef))
        out = nxt
    return out


def _multi_indices(m: int, maxdeg: int) -> list:
    out = [()]
    for _ in range(m):
        out = [e + (k,) for e in out for k in range(maxdeg + 1)]
    return sorted((e for e in out if sum(e) <= maxdeg), key=lambda e: (sum(e), e))


def gutt_as_series(A: AlgebroidPresentation, B: AForm | None, K: int, order_cap: int | None = None, check: bool = True) -> StarSeries:
    """Bidifferential cochains of the Gutt product, converted to the internal convention.

    The internal series is C_r(F, G) = i^r C^G_r(G, F): the opposite product with
    hbar replaced by i hbar, so that the first order becomes (i/2){,}.
    """
    sp = A.space
    order_cap = K + 1 if order_cap is None else order_cap
    U = EnvelopingAlgebra(A, B)
    idx = _multi_indices(A.m, order_cap)
    # values on monomials
    vals: dict = {}

    def val(a1, b1):
        key = (a1, b1)
        if key not in vals:
            F = Poly.monomial(sp, a1)
            G = Poly.monomial(sp, b1)
            vals[key] = _split_hbar(gutt_product(A, F, G, B, degree_cap=2 * order_cap + 2, U=U))
        return vals[key]

    C = [dict() for _ in range(K)]
    for a in idx:
        ta = _binom_poly(sp, a)
        fa = multi_fact(a)
        for b in idx:
            tb = _binom_poly(sp, b)
            fb = multi_fact(b)
            coeff: dict = {}
            for a1, ca in ta:
                for b1, cb in tb:
                    for r, piece in val(a1, b1).items():
                        if 1 <= r <= K:
                            coeff[r] = coeff.get(r, Poly.zero(sp)) + ca * cb * piece
            for r, c in coeff.items():
                c = c * frac(1, fa * fb)
                if c:
                    if sum(a) > r or sum(b) > r:
                        raise StarError(f"order {r} needs more than {r} derivatives per argument")
                    # opposite product: swap slots; hbar -> i hbar
                    C[r - 1][(b, a)] = dict((c * (I ** r)).terms)
    series = StarSeries(sp, K, [Cochain(sp, 2, t) for t in C], A, "gutt-adapted")
    if check:
        probes = monomial_probes(sp, order_cap + 1)
        for F in probes:
            for G in probes:
                want = _split_hbar(gutt_product(A, G, F, B, degree_cap=order_cap + 1, U=U))
                for r in range(1, K + 1):
                    got = apply(series.order(r), [F, G])
                    w = want.get(r, Poly.zero(sp)) * (I ** r)
                    if got != w:
                        raise StarError(f"reconstruction does not reproduce the product at order {r}", got - w)
    return series


def multi_fact(a) -> int:
    r = 1
    for v in a:
        r *= factorial(v)
    return r
