"""Graded block solver for the Hochschild differential on symbols.

The Hochschild differential of a polydifferential operator acts only on the
derivative symbols: coefficients ride along untouched, and the total
multi-index (sum of all slot multi-indices) is preserved.  The complex of
normalized cochains therefore splits into finite blocks indexed by
(coefficient monomial, total multi-index), and a potential can be found block
by block with an exact RREF solve.  The same holds for the bimodule complex of
operators ``D(F_0..F_{s-1})(G)`` valued in differential operators on a
submanifold, where the last slot ``G`` only sees tangent directions.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import permutations
from math import comb, factorial

from .cochain import perm_sign, splits
from .linalg import Solver
from .scalar import GQ, frac


def _nonzero_below(gamma: tuple, dirs=None):
    """All multi-indices 0 < a <= gamma (restricted to dirs if given), deterministic order."""
    out = [()]
    for j, g in enumerate(gamma):
        top = g if dirs is None or j in dirs else 0
        out = [a + (k,) for a in out for k in range(top, -1, -1)]
    return out


@lru_cache(maxsize=None)
def block_symbols(gamma: tuple, s: int, module_dirs: tuple | None, bound: int | None):
    """Symbols of normalized cochains in block gamma.

    Plain complex: tuples of s nonzero multi-indices summing to gamma.
    Bimodule complex (module_dirs given): s nonzero function-slot indices
    followed by one module index supported on module_dirs.
    """
    res = []

    def rec(rest, k, acc):
        if k == 0:
            if not any(rest):
                res.append(acc)
            return
        for a in _nonzero_below(rest):
            if not any(a):
                continue
            if bound is not None and sum(a) > bound:
                continue
            rec(tuple(x - y for x, y in zip(rest, a)), k - 1, acc + (a,))

    if module_dirs is None:
        rec(gamma, s, ())
    else:
        dset = set(module_dirs)
        for b in _nonzero_below(gamma, dset):
            if bound is not None and sum(b) > bound:
                continue
            rest = tuple(x - y for x, y in zip(gamma, b))
            before = len(res)
            rec(rest, s, ())
            for i in range(before, len(res)):
                res[i] = res[i] + (b,)
    return tuple(res)


def reduced_d(sym: tuple, s: int, module_dirs: tuple | None) -> dict:
    """Reduced differential of one symbol: {target symbol: integer coefficient}."""
    out: dict = {}
    for i in range(s):
        sign = -1 if i % 2 == 0 else 1
        for (b, b2), mult in splits(sym[i], 2):
            if not any(b) or not any(b2):
                continue
            t = sym[:i] + (b, b2) + sym[i + 1:]
            out[t] = out.get(t, 0) + sign * mult
    if module_dirs is not None:
        beta = sym[s]
        sign = 1 if (s + 1) % 2 == 0 else -1
        dset = set(module_dirs)
        for b in _nonzero_below(beta, dset):
            if not any(b):
                continue
            mult = 1
            for j in range(len(beta)):
                mult *= comb(beta[j], b[j])
            t = sym[:s] + (b, tuple(x - y for x, y in zip(beta, b)))
            out[t] = out.get(t, 0) + sign * mult
    return {k: v for k, v in out.items() if v}


def alt_rows(sym: tuple, s: int) -> dict:
    """Contribution of C[sym] to Alt(C): {symbol: coefficient}."""
    out: dict = {}
    f = frac(1, factorial(s))
    for sigma in permutations(range(s)):
        nd = [None] * s
        for j in range(s):
            nd[sigma[j]] = sym[j]
        t = tuple(nd)
        out[t] = out.get(t, GQ(0)) + f * perm_sign(sigma)
    return {k: v for k, v in out.items() if v}


_SOLVERS: dict = {}


def block_solver(gamma, s, module_dirs, bound, allowed_key, allowed, with_alt=False):
    """Cached (Solver, unknown symbols, row index) for one block."""
    key = (gamma, s, module_dirs, bound, allowed_key, with_alt)
    hit = _SOLVERS.get(key)
    if hit is not None:
        return hit
    syms = [u for u in block_symbols(gamma, s, module_dirs, bound) if allowed is None or allowed(u)]
    rowidx: dict = {}
    cols = []
    for u in syms:
        col = {}
        for t, v in reduced_d(u, s, module_dirs).items():
            r = rowidx.setdefault(("d", t), len(rowidx))
            col[r] = GQ(v)
        if with_alt:
            for t, v in alt_rows(u, s).items():
                r = rowidx.setdefault(("a", t), len(rowidx))
                col[r] = col.get(r, GQ(0)) + v
        cols.append(col)
    solver = Solver(cols, len(rowidx))
    hit = (solver, syms, rowidx)
    _SOLVERS[key] = hit
    return hit


def clear_cache():
    _SOLVERS.clear()
    block_symbols.cache_clear()
