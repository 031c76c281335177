"""Polydifferential cochains and the Hochschild/Gerstenhaber calculus.

A cochain of degree n has n+1 arguments and is stored as a map
``derivs -> coefficient`` where ``derivs`` is a tuple of n+1 multi-indices and
the coefficient is a raw polynomial dict (see :mod:`homstar.poly`).  The value
on arguments is ``sum coeff * prod_j d^{derivs[j]} f_j``.  This normal form is
unique, so equality of operators is equality of dicts.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations, product
from math import factorial

from .poly import Poly, VarSpec, StructureError, radd_into, rmul, rderiv, rscale
from .scalar import GQ, ONE, ZERO, frac


@lru_cache(maxsize=None)
def compositions(n: int, p: int) -> tuple:
    """All ordered p-tuples of nonnegative ints summing to n."""
    if p == 1:
        return ((n,),)
    out = []
    for a in range(n, -1, -1):
        for rest in compositions(n - a, p - 1):
            out.append((a,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def splits(alpha: tuple, p: int) -> tuple:
    """Leibniz splittings of d^alpha over p factors: ((parts...), multinomial)."""
    per = [compositions(a, p) for a in alpha]
    out = []
    for choice in product(*per):
        parts = tuple(tuple(choice[j][q] for j in range(len(alpha))) for q in range(p))
        coef = 1
        for j, a in enumerate(alpha):
            c = factorial(a)
            for q in range(p):
                c //= factorial(choice[j][q])
            coef *= c
        out.append((parts, coef))
    return tuple(out)


def _madd(a: tuple, b: tuple) -> tuple:
    return tuple([x + y for x, y in zip(a, b)])


def perm_sign(p) -> int:
    s, seen = 1, [False] * len(p)
    for i in range(len(p)):
        if seen[i]:
            continue
        j, L = i, 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            L += 1
        if L % 2 == 0:
            s = -s
    return s


class Cochain:
    """Polydifferential operator with polynomial coefficients."""

    __slots__ = ("space", "arity", "terms")

    def __init__(self, space: VarSpec, arity: int, terms: dict | None = None):
        self.space = space
        self.arity = arity
        t = {}
        if terms:
            for k, v in terms.items():
                if len(k) != arity:
                    raise StructureError("term arity mismatch")
                if isinstance(v, Poly):
                    v = v.terms
                if v:
                    t[k] = v
        self.terms = t

    @property
    def degree(self) -> int:
        return self.arity - 1

    # construction
    @classmethod
    def zero(cls, space, arity):
        return cls(space, arity, {})

    @classmethod
    def function(cls, f: Poly):
        return cls(f.space, 0, {(): dict(f.terms)})

    @classmethod
    def identity(cls, space):
        return cls(space, 1, {(space.zero_index(),): {(0,) * (space.n + 1): ONE}})

    @classmethod
    def term(cls, space, coeff, derivs):
        if not isinstance(coeff, Poly):
            coeff = Poly.const(space, coeff)
        return cls(space, len(derivs), {tuple(tuple(a) for a in derivs): dict(coeff.terms)})

    @property
    def vanishes_on_constants(self) -> bool:
        return all(all(any(a) for a in k) for k in self.terms)

    def _check(self, o):
        if o.space != self.space:
            raise StructureError("ambient mismatch")
        if o.arity != self.arity:
            raise StructureError(f"arity mismatch {self.arity} vs {o.arity}")

    # linear structure
    def __add__(self, o):
        self._check(o)
        t = {k: dict(v) for k, v in self.terms.items()}
        for k, v in o.terms.items():
            acc = t.setdefault(k, {})
            radd_into(acc, v)
            if not acc:
                del t[k]
        return Cochain(self.space, self.arity, t)

    def __neg__(self):
        return Cochain(self.space, self.arity, {k: {e: -c for e, c in v.items()} for k, v in self.terms.items()})

    def __sub__(self, o):
        return self + (-o)

    def scale(self, s) -> "Cochain":
        s = GQ.coerce(s)
        if not s:
            return Cochain.zero(self.space, self.arity)
        return Cochain(self.space, self.arity, {k: rscale(v, s) for k, v in self.terms.items()})

    def __mul__(self, s):
        return self.scale(s)

    __rmul__ = __mul__

    def __eq__(self, o):
        if not isinstance(o, Cochain):
            return NotImplemented
        return self.space == o.space and self.arity == o.arity and self.terms == o.terms

    def __hash__(self):
        return hash((self.arity, len(self.terms)))

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def coeff(self, derivs) -> Poly:
        return Poly(self.space, self.terms.get(tuple(tuple(a) for a in derivs), {}))

    def max_order(self) -> int:
        return max((sum(a) for k in self.terms for a in k), default=0)

    def sorted_items(self) -> list:
        from .poly import term_key

        return sorted(self.terms.items(), key=lambda kv: (tuple(sum(a) for a in kv[0]), tuple(tuple(-x for x in a) for a in kv[0])))

    def __repr__(self):
        return f"Cochain(arity={self.arity}, terms={len(self.terms)})"


# -------------------------------------------------------------- evaluation


def apply(D: Cochain, args) -> Poly:
    """Evaluate D on Poly arguments (hbar allowed in the arguments)."""
    if len(args) != D.arity:
        raise StructureError(f"arity mismatch: {D.arity} arguments expected, {len(args)} given")
    space = D.space
    K = None
    for a in args:
        if a.space != space:
            raise StructureError("ambient mismatch")
        if a.K is not None:
            K = a.K if K is None else min(K, a.K)
    cache: dict = {}
    acc: dict = {}
    for derivs, c in D.terms.items():
        prod_ = c
        for j, al in enumerate(derivs):
            key = (j, al)
            dv = cache.get(key)
            if dv is None:
                dv = rderiv(args[j].terms, al)
                cache[key] = dv
            if not dv:
                prod_ = {}
                break
            prod_ = rmul(prod_, dv, K)
        radd_into(acc, prod_)
    return Poly(space, acc, K)


def _expand_derivative(E: Cochain, alpha: tuple) -> list:
    """d^alpha applied to E(f..): list of (coeff raw, derivs tuple)."""
    out = []
    p = E.arity + 1
    for derivs, c in E.terms.items():
        for parts, mult in splits(alpha, p):
            dc = rderiv(c, parts[0])
            if not dc:
                continue
            if mult != 1:
                dc = rscale(dc, GQ(mult))
            nd = tuple(_madd(derivs[l], parts[l + 1]) for l in range(E.arity))
            out.append((dc, nd))
    return out


def substitute(D: Cochain, inner) -> Cochain:
    """The cochain (f..) -> D(inner[0](..), inner[1](..), ...)."""
    if len(inner) != D.arity:
        raise StructureError("substitute: need one inner cochain per slot")
    space = D.space
    arity = sum(E.arity for E in inner)
    cache: dict = {}
    acc: dict = {}
    for derivs, c in D.terms.items():
        lists = []
        for j, al in enumerate(derivs):
            key = (j, al)
            ex = cache.get(key)
            if ex is None:
                ex = _expand_derivative(inner[j], al)
                cache[key] = ex
            lists.append(ex)
        for combo in product(*lists):
            coef = c
            nd: tuple = ()
            for dc, d_ in combo:
                coef = rmul(coef, dc)
                if not coef:
                    break
                nd = nd + d_
            if not coef:
                continue
            slot = acc.setdefault(nd, {})
            radd_into(slot, coef)
            if not slot:
                del acc[nd]
    return Cochain(space, arity, acc)


def circle(D: Cochain, E: Cochain) -> Cochain:
    """D o E = sum_i (-1)^{i|E|} D(.., E(f_i..f_{i+|E|}), ..)."""
    if D.space != E.space:
        raise StructureError("ambient mismatch")
    space = D.space
    k, l = D.degree, E.degree
    res = Cochain.zero(space, k + l + 1)
    if k < 0:
        return res
    ident = Cochain.identity(space)
    for i in range(k + 1):
        inner = [ident] * (k + 1)
        inner[i] = E
        t = substitute(D, inner)
        res = res + (t if (i * l) % 2 == 0 else -t)
    return res


def gerstenhaber(D: Cochain, E: Cochain) -> Cochain:
    """[D,E] = (-1)^{|D||E|} (D o E - (-1)^{|D||E|} E o D)."""
    s = -1 if (D.degree * E.degree) % 2 else 1
    a = circle(D, E)
    b = circle(E, D)
    r = a - b if s == 1 else a + b
    return r if s == 1 else -r


def hochschild_d(D: Cochain) -> Cochain:
    """The Hochschild differential, expanded on symbols (coefficients are passive)."""
    space = D.space
    n = D.degree
    z = space.zero_index()
    acc: dict = {}

    def put(key, coef, s):
        slot = acc.setdefault(key, {})
        radd_into(slot, coef, None if s == 1 else GQ(s))
        if not slot:
            del acc[key]

    sn = -1 if n % 2 else 1
    for derivs, c in D.terms.items():
        put((z,) + derivs, c, 1)
        put(derivs + (z,), c, sn)
        for i in range(n + 1):
            s = -1 if i % 2 == 0 else 1  # (-1)^{i+1}
            for parts, mult in splits(derivs[i], 2):
                put(derivs[:i] + parts + derivs[i + 1:], c, s * mult)
    return Cochain(space, D.arity + 1, acc)


def permute(D: Cochain, sigma) -> Cochain:
    """(f_0..f_k) -> D(f_sigma(0), .., f_sigma(k))."""
    acc: dict = {}
    for derivs, c in D.terms.items():
        nd = [None] * D.arity
        for j, a in enumerate(derivs):
            nd[sigma[j]] = a
        slot = acc.setdefault(tuple(nd), {})
        radd_into(slot, c)
        if not slot:
            del acc[tuple(nd)]
    return Cochain(D.space, D.arity, acc)


def tau(D: Cochain) -> Cochain:
    if D.arity != 2:
        raise StructureError("tau is defined on bidifferential operators")
    return permute(D, (1, 0))


def sym_parts(D: Cochain):
    """(D + tau D, D - tau D), without a 1/2 factor."""
    t = tau(D)
    return D + t, D - t


def alt(D: Cochain) -> Cochain:
    """Total antisymmetrization with the 1/(k+1)! average."""
    k1 = D.arity
    res = Cochain.zero(D.space, k1)
    for sigma in permutations(range(k1)):
        t = permute(D, sigma)
        res = res + (t if perm_sign(sigma) == 1 else -t)
    return res.scale(frac(1, factorial(k1))) if k1 > 1 else res


def term_degree(space: VarSpec, derivs, coeff: dict) -> set:
    d = space.d
    dcount = sum(sum(a[d:]) for a in derivs)
    return {sum(e[1 + d:]) - dcount for e in coeff}


def homogeneity_degree(D: Cochain):
    if D.is_zero():
        raise ValueError("homogeneity degree of the zero cochain is undefined")
    ds: set = set()
    for derivs, c in D.terms.items():
        ds |= term_degree(D.space, derivs, c)
    return ds.pop() if len(ds) == 1 else "inhomogeneous"


def is_homogeneous(D: Cochain, k: int) -> bool:
    return D.is_zero() or homogeneity_degree(D) == k


# -------------------------------------------------------------- special cochains


def mu0(space: VarSpec) -> Cochain:
    z = space.zero_index()
    return Cochain(space, 2, {(z, z): {(0,) * (space.n + 1): ONE}})


def vector_field(components) -> Cochain:
    """L_X for X = sum_j X^j d_j (components: list of Poly, length n)."""
    space = components[0].space
    t = {}
    for j, p in enumerate(components):
        if p:
            t[(space.unit(j),)] = dict(p.terms)
    return Cochain(space, 1, t)


def euler_field(space: VarSpec) -> Cochain:
    comps = [Poly.zero(space)] * space.d + [Poly.xi(space, i) for i in range(space.m)]
    return vector_field(comps) if space.n else Cochain.zero(space, 1)


def compose_ops(S: Cochain, T: Cochain) -> Cochain:
    """Composition of differential operators S o T."""
    return substitute(S, [T])


# -------------------------------------------------------------- series


@dataclass
class StarSeries:
    """star = mu0 + sum_{r=1}^K hbar^r C_r."""

    space: VarSpec
    K: int
    C: list
    presentation: object = None
    tag: str = "internal"

    def order(self, r: int) -> Cochain:
        if r == 0:
            return mu0(self.space)
        if r > self.K:
            raise ValueError(f"order {r} exceeds truncation {self.K}")
        return self.C[r - 1]

    def product(self, F: Poly, G: Poly) -> Poly:
        K = self.K
        h = Poly.hbar(self.space, K)
        acc = Poly.zero(self.space, K)
        F, G = F.truncate(K), G.truncate(K)
        hp = Poly.const(self.space, 1, K)
        for r in range(0, K + 1):
            acc = acc + hp * apply(self.order(r), [F, G])
            hp = hp * h
        return acc

    def bracket(self, F: Poly, G: Poly) -> Poly:
        return self.product(F, G) - self.product(G, F)

    def truncate(self, K: int) -> "StarSeries":
        return StarSeries(self.space, K, list(self.C[:K]), self.presentation, self.tag)

    def __eq__(self, o):
        return isinstance(o, StarSeries) and self.space == o.space and self.K == o.K and self.C == o.C


@dataclass
class EquivalenceSeries:
    """S = id + sum_{r=1}^K hbar^r S_r."""

    space: VarSpec
    K: int
    S: list = field(default_factory=list)

    @classmethod
    def identity(cls, space, K):
        return cls(space, K, [Cochain.zero(space, 1) for _ in range(K)])

    def order(self, r: int) -> Cochain:
        if r == 0:
            return Cochain.identity(self.space)
        return self.S[r - 1]

    def apply_to(self, F: Poly) -> Poly:
        K = self.K
        F = F.truncate(K)
        h = Poly.hbar(self.space, K)
        acc, hp = Poly.zero(self.space, K), Poly.const(self.space, 1, K)
        for r in range(K + 1):
            acc = acc + hp * apply(self.order(r), [F])
            hp = hp * h
        return acc

    def compose(self, other: "EquivalenceSeries") -> "EquivalenceSeries":
        """self o other."""
        K = min(self.K, other.K)
        out = []
        for r in range(1, K + 1):
            acc = Cochain.zero(self.space, 1)
            for a in range(r + 1):
                A, B = self.order(a), other.order(r - a)
                if a == 0:
                    acc = acc + B
                elif a == r:
                    acc = acc + A
                else:
                    acc = acc + compose_ops(A, B)
            out.append(acc)
        return EquivalenceSeries(self.space, K, out)

    def inverse(self) -> "EquivalenceSeries":
        # T_r = -sum_{a=1}^r S_a o T_{r-a}
        T = []
        for r in range(1, self.K + 1):
            acc = Cochain.zero(self.space, 1)
            for a in range(1, r + 1):
                Sa = self.order(a)
                acc = acc - (Sa if a == r else compose_ops(Sa, T[r - a - 1]))
            T.append(acc)
        return EquivalenceSeries(self.space, self.K, T)

    def is_identity(self) -> bool:
        return all(s.is_zero() for s in self.S)

    def __eq__(self, o):
        return isinstance(o, EquivalenceSeries) and self.K == o.K and self.S == o.S


def mc_defect(star: StarSeries, r: int) -> Cochain:
    """dC_r + 1/2 sum_{l=1}^{r-1} [C_l, C_{r-l}]."""
    if r > star.K or r < 1:
        raise ValueError(f"order {r} outside 1..{star.K}")
    res = hochschild_d(star.order(r))
    half = frac(1, 2)
    for l in range(1, r):
        res = res + gerstenhaber(star.order(l), star.order(r - l)).scale(half)
    return res
