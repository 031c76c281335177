"""HKR map, its inverse on closed cochains, and the exact potential solver."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from math import factorial

from . import cobar
from .cochain import Cochain, alt, hochschild_d, perm_sign
from .poly import Poly, VarSpec, StructureError, radd_into
from .scalar import GQ, frac


class PreconditionError(ValueError):
    pass


class InfeasibleError(RuntimeError):
    """No potential in the candidate space; carries the residual block."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


@dataclass
class Multivector:
    """X = sum_{a_1<..<a_p} X^{a} d_{a_1} ^ .. ^ d_{a_p} over the derivative coordinates."""

    space: VarSpec
    p: int
    comps: dict  # increasing index tuple -> Poly

    @classmethod
    def zero(cls, space, p):
        return cls(space, p, {})

    @classmethod
    def from_array(cls, space, p, entries: dict):
        """Build from possibly unordered index tuples, using antisymmetry."""
        comps: dict = {}
        for idx, val in entries.items():
            if len(set(idx)) < len(idx):
                continue
            order = sorted(range(p), key=lambda k: idx[k])
            key = tuple(idx[k] for k in order)
            sgn = perm_sign(order)
            v = val if sgn == 1 else -val
            comps[key] = comps.get(key, Poly.zero(space)) + v
        return cls(space, p, {k: v for k, v in comps.items() if v})

    def component(self, idx) -> Poly:
        idx = tuple(idx)
        if len(set(idx)) < len(idx):
            return Poly.zero(self.space)
        order = sorted(range(self.p), key=lambda k: idx[k])
        v = self.comps.get(tuple(idx[k] for k in order), Poly.zero(self.space))
        return v if perm_sign(order) == 1 else -v

    def __add__(self, o):
        c = dict(self.comps)
        for k, v in o.comps.items():
            c[k] = c.get(k, Poly.zero(self.space)) + v
        return Multivector(self.space, self.p, {k: v for k, v in c.items() if v})

    def scale(self, s):
        return Multivector(self.space, self.p, {k: v * s for k, v in self.comps.items() if s})

    def __eq__(self, o):
        return isinstance(o, Multivector) and self.p == o.p and {k: v for k, v in self.comps.items() if v} == {
            k: v for k, v in o.comps.items() if v
        }

    def is_zero(self):
        return not any(self.comps.values())

    def homogeneity_degree(self):
        d = self.space.d
        ds = set()
        for k, v in self.comps.items():
            nf = sum(1 for a in k if a >= d)
            ds |= {f - nf for f in v.fibre_degrees()}
        if not ds:
            raise ValueError("zero multivector")
        return ds.pop() if len(ds) == 1 else "inhomogeneous"


def hkr(X: Multivector) -> Cochain:
    """hkr(X)(f_1..f_p) = 1/p! sum_sigma sign X^{a} prod d_{a_sigma(j)} f_j."""
    space, p = X.space, X.p
    if p == 0:
        return Cochain(space, 0, {(): dict(X.comps.get((), Poly.zero(space)).terms)})
    f = frac(1, factorial(p))
    terms: dict = {}
    for idx, val in X.comps.items():
        for sigma in permutations(range(p)):
            derivs = tuple(space.unit(idx[sigma[j]]) for j in range(p))
            s = f * perm_sign(sigma)
            slot = terms.setdefault(derivs, {})
            radd_into(slot, val.terms, s)
    return Cochain(space, p, terms)


def hkr_inv_closed(D: Cochain, check: bool = True) -> Multivector:
    """The multivector X with hkr(X) = Alt(D), for closed D."""
    if check and not hochschild_d(D).is_zero():
        raise PreconditionError("hkr_inv_closed: cochain is not closed")
    A = alt(D)
    p = D.arity
    space = D.space
    comps = {}
    for derivs, c in A.terms.items():
        if all(sum(a) == 1 for a in derivs):
            idx = tuple(a.index(1) for a in derivs)
            if list(idx) == sorted(set(idx)) and len(set(idx)) == p:
                comps[idx] = Poly(space, c) * factorial(p)
    X = Multivector(space, p, comps)
    if check and hkr(X) != A:
        raise PreconditionError("Alt(D) is not a multivector: input is not closed")
    return X


def _blocks(R: Cochain):
    """Group R by (coefficient monomial, total multi-index)."""
    blocks: dict = {}
    for derivs, coef in R.terms.items():
        gamma = tuple(map(sum, zip(*derivs)))
        for e, c in coef.items():
            blocks.setdefault((e, gamma), {})[derivs] = c
    return blocks


def solve_blocks(
    R: Cochain,
    s: int,
    module_dirs=None,
    bound=None,
    allowed=None,
    alt_target: Cochain | None = None,
):
    """Solve d C = R blockwise; returns terms dict for C or raises InfeasibleError.

    ``allowed(e, sym)`` restricts the unknowns (returns (key, predicate) pair via
    ``allowed.key(e)`` and ``allowed.pred(e)``); ``alt_target`` adds Alt(C) = target.
    """
    blocks = _blocks(R)
    if alt_target is not None:
        for (e, gamma), rhs in _blocks(alt_target).items():
            blocks.setdefault((e, gamma), {})
    out: dict = {}
    alt_blocks = _blocks(alt_target) if alt_target is not None else {}
    for (e, gamma) in sorted(blocks, key=lambda k: (k[1], k[0])):
        rhs_syms = blocks[(e, gamma)]
        akey, pred = (None, None) if allowed is None else (allowed.key(e), allowed.pred(e))
        solver, syms, rowidx = cobar.block_solver(
            gamma, s, module_dirs, bound, akey, pred, with_alt=alt_target is not None
        )
        rhs = {}
        missing = False
        for t, c in rhs_syms.items():
            r = rowidx.get(("d", t))
            if r is None:
                missing = True
                break
            rhs[r] = c
        if not missing:
            for t, c in alt_blocks.get((e, gamma), {}).items():
                r = rowidx.get(("a", t))
                if r is None:
                    missing = True
                    break
                rhs[r] = c
        sol = None if missing else solver.solve(rhs)
        if sol is None:
            raise InfeasibleError(f"no potential in block gamma={gamma}, monomial={e}", residual=(e, gamma, rhs_syms))
        for j, v in sol.items():
            out.setdefault(syms[j], {})[e] = v
    return out


def solve_potential(R: Cochain, order_bound: int | None = None, check: bool = True, allowed=None) -> Cochain:
    """Canonical C with dC = R (R closed, Alt(R) = 0, vanishing on constants)."""
    if R.arity < 2:
        raise PreconditionError("solve_potential needs a cochain of degree >= 1")
    if check:
        if not R.vanishes_on_constants:
            raise PreconditionError("solve_potential: input must vanish on constants")
        if not hochschild_d(R).is_zero():
            raise PreconditionError("solve_potential: input is not closed")
        if not alt(R).is_zero():
            raise PreconditionError("solve_potential: Alt of the input is nonzero")
    if R.is_zero():
        return Cochain.zero(R.space, R.arity - 1)
    if order_bound is None:
        order_bound = R.arity * R.max_order() + 1
    last = None
    for bound in (order_bound, order_bound + 1, order_bound + 2):
        try:
            terms = solve_blocks(R, R.arity - 1, bound=bound, allowed=allowed)
        except InfeasibleError as exc:
            last = exc
            continue
        C = Cochain(R.space, R.arity - 1, terms)
        if check and hochschild_d(C) != R:
            raise RuntimeError("internal error: potential does not reproduce the input")
        return C
    raise last


def block_residuals(R: Cochain, s: int, module_dirs=None, bound=None, blocks=None) -> dict:
    """Linear consistency functionals of dC = R, keyed canonically.

    Zero everywhere iff the equation is solvable (within ``bound``).  ``blocks``
    fixes the set of blocks examined so that results for different right-hand
    sides are comparable.
    """
    rb = _blocks(R)
    keys = sorted(set(rb) | set(blocks or ()), key=lambda k: (k[1], k[0]))
    out: dict = {}
    for (e, gamma) in keys:
        rhs_syms = rb.get((e, gamma), {})
        solver, syms, rowidx = cobar.block_solver(gamma, s, module_dirs, bound, None, None)
        rhs = {}
        for t, c in rhs_syms.items():
            r = rowidx.get(("d", t))
            if r is None:
                out[(e, gamma, "missing", t)] = c
            else:
                rhs[r] = c
        for j, v in enumerate(solver.residuals(rhs)):
            if v:
                out[(e, gamma, "check", j)] = v
    return out
