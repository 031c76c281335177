"""Random generators, hypothesis strategies and brute-force oracles for the tests.

The oracles here deliberately avoid the library's symbol-level machinery:
operators are evaluated on actual polynomials, and polynomial arithmetic is
cross-checked against sympy.
"""
from __future__ import annotations

import os
import random
from itertools import combinations, permutations

import sympy
from hypothesis import strategies as st

from homstar.cochain import Cochain, apply, perm_sign
from homstar.poly import Poly, VarSpec
from homstar.scalar import GQ, I, frac

SEED = int(os.environ.get("HOMSTAR_TEST_SEED", "20240611"))

ACCEPTANCE: dict = {}


def record(n: int, ok: bool, detail: str) -> None:
    """Keep one pass/fail line per acceptance criterion and print it."""
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)


SCALARS = [GQ(1), GQ(-1), GQ(2), frac(1, 2), frac(-3, 2), I, -I, GQ(1, 1)]


# ------------------------------------------------------------------ seeded generators


def rng(tag: str) -> random.Random:
    return random.Random(f"{SEED}:{tag}")


def rand_space(r: random.Random, max_n: int = 4) -> VarSpec:
    n = r.randint(1, max_n)
    d = r.randint(0, n)
    return VarSpec(d, n - d)


def rand_multi(r: random.Random, n: int, max_order: int, nonzero: bool = True) -> tuple:
    while True:
        total = r.randint(1 if nonzero else 0, max_order)
        a = [0] * n
        for _ in range(total):
            a[r.randrange(n)] += 1
        if any(a) or not nonzero:
            return tuple(a)


def rand_poly(r: random.Random, sp: VarSpec, terms: int = 3, deg: int = 2) -> Poly:
    acc = Poly.zero(sp)
    for _ in range(terms):
        e = rand_multi(r, sp.n, deg, nonzero=False)
        acc = acc + Poly.monomial(sp, e, r.choice(SCALARS))
    return acc


def rand_cochain(r: random.Random, sp: VarSpec, arity: int, max_order: int = 3, terms: int = 3, deg: int = 2) -> Cochain:
    """A normalized cochain (every slot differentiated at least once)."""
    out = Cochain.zero(sp, arity)
    for _ in range(terms):
        derivs = tuple(rand_multi(r, sp.n, max_order) for _ in range(arity))
        out = out + Cochain.term(sp, rand_poly(r, sp, 2, deg), derivs)
    return out


# ------------------------------------------------------------------ hypothesis strategies

scalars = st.sampled_from(SCALARS)


@st.composite
def spaces(draw, max_n: int = 3):
    n = draw(st.integers(1, max_n))
    d = draw(st.integers(0, n))
    return VarSpec(d, n - d)


@st.composite
def multi_indices(draw, n: int, max_order: int = 2, nonzero: bool = False):
    a = tuple(draw(st.lists(st.integers(0, max_order), min_size=n, max_size=n)))
    if sum(a) > max_order:
        a = tuple(min(v, 1) for v in a)
    if nonzero and not any(a):
        a = (1,) + a[1:]
    return a


@st.composite
def polys(draw, sp: VarSpec, max_terms: int = 3, deg: int = 2):
    acc = Poly.zero(sp)
    for _ in range(draw(st.integers(0, max_terms))):
        acc = acc + Poly.monomial(sp, draw(multi_indices(sp.n, deg)), draw(scalars))
    return acc


@st.composite
def cochains(draw, sp: VarSpec, arity: int, max_order: int = 2, max_terms: int = 2):
    out = Cochain.zero(sp, arity)
    for _ in range(draw(st.integers(1, max_terms))):
        derivs = tuple(draw(multi_indices(sp.n, max_order, nonzero=True)) for _ in range(arity))
        out = out + Cochain.term(sp, draw(polys(sp, 2, 1)), derivs)
    return out


# ------------------------------------------------------------------ oracles


def to_sympy(p: Poly):
    syms = sympy.symbols(["h"] + p.space.names())
    expr = sympy.Integer(0)
    for e, c in p.terms.items():
        coef = sympy.Rational(int(c.re.numerator), int(c.re.denominator)) + sympy.I * sympy.Rational(
            int(c.im.numerator), int(c.im.denominator)
        )
        mono = sympy.Integer(1)
        for s, k in zip(syms, e):
            mono *= s**k
        expr += coef * mono
    return sympy.expand(expr), syms


def hochschild_on_functions(D: Cochain, fs: list) -> Poly:
    """(dD)(f_0..f_{n+1}) with the [mu0, D] sign convention, by direct evaluation."""
    n = D.degree
    out = fs[0] * apply(D, fs[1:])
    for i in range(n + 1):
        merged = fs[:i] + [fs[i] * fs[i + 1]] + fs[i + 2:]
        v = apply(D, merged)
        out = out + (-v if i % 2 == 0 else v)
    last = apply(D, fs[:-1]) * fs[-1]
    return out + (-last if n % 2 else last)


def circle_on_functions(D: Cochain, E: Cochain, fs: list) -> Poly:
    """(D o E)(f..) = sum_i (-1)^{i|E|} D(.., E(f_i..), ..), by direct evaluation."""
    k, l = D.degree, E.degree
    out = Poly.zero(D.space)
    for i in range(k + 1):
        inner = apply(E, fs[i:i + l + 1])
        args = fs[:i] + [inner] + fs[i + l + 1:]
        v = apply(D, args)
        out = out + (v if (i * l) % 2 == 0 else -v)
    return out


def bracket_on_functions(D: Cochain, E: Cochain, fs: list) -> Poly:
    s = -1 if (D.degree * E.degree) % 2 else 1
    a = circle_on_functions(D, E, fs)
    b = circle_on_functions(E, D, fs)
    r = a - b if s == 1 else a + b
    return r if s == 1 else -r


def lie_ce_betti(c: list, m: int, p: int) -> int:
    """dim H^p of a Lie algebra from its structure constants, via sympy ranks.

    Cochains are alternating maps on basis p-subsets; the differential is the
    textbook one, (d w)(e_I) = sum_{s<t} (-1)^{s+t} w([e_s,e_t], e_rest).
    """

    def dmat(q: int):
        rows = list(combinations(range(m), q + 1))
        cols = list(combinations(range(m), q))
        col_idx = {J: j for j, J in enumerate(cols)}
        M = sympy.zeros(len(rows), len(cols))
        for r_, Iq in enumerate(rows):
            for s in range(q + 1):
                for t in range(s + 1, q + 1):
                    rest = [Iq[u] for u in range(q + 1) if u not in (s, t)]
                    for k in range(m):
                        v = c[Iq[s]][Iq[t]][k]
                        if not v:
                            continue
                        seq = [k] + rest
                        if len(set(seq)) < len(seq):
                            continue
                        order = sorted(range(q), key=lambda u: seq[u])
                        J = tuple(seq[u] for u in order)
                        M[r_, col_idx[J]] += (-1) ** (s + t) * perm_sign(order) * sympy.Rational(str(v))
        return M

    dim = len(list(combinations(range(m), p)))
    rk_out = dmat(p).rank() if p < m else 0
    rk_in = dmat(p - 1).rank() if p >= 1 else 0
    return dim - rk_out - rk_in


def monomials(sp: VarSpec, deg: int) -> list:
    out = [()]
    for _ in range(sp.n):
        out = [e + (k,) for e in out for k in range(deg + 1)]
    return [Poly.monomial(sp, e) for e in sorted(out) if sum(e) <= deg]


def perm_pairs(k: int):
    return [(s, perm_sign(s)) for s in permutations(range(k))]
