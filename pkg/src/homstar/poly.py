"""Sparse polynomials in base variables x1..xd, fibre variables xi1..xim and hbar.

Monomials are exponent tuples ``(h, x1, .., xd, xi1, .., xim)``; the hbar
exponent sits in slot 0 so that derivatives never touch it.  Coefficients are
:class:`GQ` values.  A Poly optionally carries a truncation order ``K`` for hbar.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass
from math import factorial

from .scalar import GQ, ONE, ZERO, I, render_scalar


class StructureError(ValueError):
    """Mismatched ambient spaces or malformed structural input."""


@dataclass(frozen=True)
class VarSpec:
    d: int
    m: int

    @property
    def n(self) -> int:
        return self.d + self.m

    def names(self) -> list[str]:
        return [f"x{a + 1}" for a in range(self.d)] + [f"xi{i + 1}" for i in range(self.m)]

    def index(self, name: str) -> int:
        """Variable index in 0..n-1 (derivative coordinates)."""
        if name.startswith("xi"):
            i = int(name[2:]) - 1
            if not 0 <= i < self.m:
                raise StructureError(f"unknown fibre variable {name}")
            return self.d + i
        if name.startswith("x"):
            a = int(name[1:]) - 1
            if not 0 <= a < self.d:
                raise StructureError(f"unknown base variable {name}")
            return a
        raise StructureError(f"unknown variable {name}")

    def is_fibre(self, j: int) -> bool:
        return j >= self.d

    def unit(self, j: int) -> tuple:
        """Multi-index e_j (length n)."""
        return tuple(1 if k == j else 0 for k in range(self.n))

    def zero_index(self) -> tuple:
        return (0,) * self.n


# ---------------------------------------------------------------- raw kernels
# A raw polynomial is a dict {exponent tuple (h, ...): GQ}.


def radd_into(acc: dict, a: dict, scale: GQ | None = None) -> None:
    for e, c in a.items():
        if scale is not None:
            c = c * scale
        v = acc.get(e)
        if v is None:
            acc[e] = c
        else:
            v = v + c
            if v:
                acc[e] = v
            else:
                del acc[e]


def rmul(a: dict, b: dict, K: int | None = None) -> dict:
    out: dict = {}
    get = out.get
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple([x + y for x, y in zip(ea, eb)])
            if K is not None and e[0] > K:
                continue
            v = get(e)
            out[e] = ca * cb if v is None else v + ca * cb
    return {e: c for e, c in out.items() if c}


def falling(n: int, k: int) -> int:
    r = 1
    for t in range(k):
        r *= n - t
    return r


def rderiv(a: dict, alpha: tuple) -> dict:
    """Apply d^alpha (alpha over the n derivative coordinates)."""
    if not any(alpha):
        return a
    out: dict = {}
    for e, c in a.items():
        f = 1
        ne = [e[0]]
        for j, k in enumerate(alpha):
            ej = e[j + 1]
            if k:
                if ej < k:
                    f = 0
                    break
                f *= falling(ej, k)
            ne.append(ej - k)
        if f:
            t = tuple(ne)
            out[t] = out.get(t, ZERO) + c * GQ(f)
    return {e: c for e, c in out.items() if c}


def rscale(a: dict, s: GQ) -> dict:
    if not s:
        return {}
    return {e: c * s for e, c in a.items()}


# ----------------------------------------------------------------- Poly


class Poly:
    """Canonical sparse polynomial over Q(i) with optional hbar truncation."""

    __slots__ = ("space", "terms", "K")

    def __init__(self, space: VarSpec, terms: dict | None = None, K: int | None = None):
        self.space = space
        self.K = K
        t = {}
        if terms:
            for e, c in terms.items():
                if K is not None and e[0] > K:
                    continue
                if not isinstance(c, GQ):
                    c = GQ.coerce(c)
                if c:
                    t[e] = c
        self.terms = t

    # construction
    @classmethod
    def zero(cls, space, K=None):
        return cls(space, {}, K)

    @classmethod
    def const(cls, space, c, K=None):
        return cls(space, {(0,) * (space.n + 1): GQ.coerce(c)}, K)

    @classmethod
    def var(cls, space, name_or_index, K=None):
        j = space.index(name_or_index) if isinstance(name_or_index, str) else name_or_index
        e = [0] * (space.n + 1)
        e[j + 1] = 1
        return cls(space, {tuple(e): ONE}, K)

    @classmethod
    def x(cls, space, a, K=None):
        """Base coordinate x^{a+1} (0-based a)."""
        return cls.var(space, a, K)

    @classmethod
    def xi(cls, space, i, K=None):
        """Fibre coordinate xi_{i+1} (0-based i)."""
        return cls.var(space, space.d + i, K)

    @classmethod
    def hbar(cls, space, K=None):
        e = [0] * (space.n + 1)
        e[0] = 1
        return cls(space, {tuple(e): ONE}, K)

    @classmethod
    def monomial(cls, space, exps, c=ONE, h=0, K=None):
        return cls(space, {(h,) + tuple(exps): GQ.coerce(c)}, K)

    # helpers
    def _check(self, o: "Poly"):
        if o.space != self.space:
            raise StructureError(f"ambient mismatch {self.space} vs {o.space}")

    def _k(self, o: "Poly"):
        if self.K is None:
            return o.K
        if o.K is None:
            return self.K
        return min(self.K, o.K)

    def _lift(self, o):
        if isinstance(o, Poly):
            self._check(o)
            return o
        return Poly.const(self.space, o)

    # arithmetic
    def __add__(self, o):
        o = self._lift(o)
        t = dict(self.terms)
        radd_into(t, o.terms)
        return Poly(self.space, t, self._k(o))

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.space, {e: -c for e, c in self.terms.items()}, self.K)

    def __sub__(self, o):
        return self + (-self._lift(o))

    def __rsub__(self, o):
        return self._lift(o) - self

    def __mul__(self, o):
        if not isinstance(o, Poly):
            s = GQ.coerce(o)
            return Poly(self.space, rscale(self.terms, s), self.K)
        self._check(o)
        K = self._k(o)
        return Poly(self.space, rmul(self.terms, o.terms, K), K)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Poly):
            if o.is_constant():
                return self * o.constant_term().inv()
            raise StructureError("division by a non-constant polynomial")
        return self * GQ.coerce(o).inv()

    def __pow__(self, n: int):
        r = Poly.const(self.space, 1, self.K)
        for _ in range(n):
            r = r * self
        return r

    def __eq__(self, o):
        if isinstance(o, Poly):
            return self.space == o.space and self.terms == o.terms
        try:
            return self == self._lift(o)
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash((self.space, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> GQ:
        return self.terms.get((0,) * (self.space.n + 1), ZERO)

    def truncate(self, K: int) -> "Poly":
        return Poly(self.space, self.terms, K)

    # calculus and gradings
    def partial(self, alpha) -> "Poly":
        return Poly(self.space, rderiv(self.terms, tuple(alpha)), self.K)

    def fibre_degrees(self) -> set:
        d = self.space.d
        return {sum(e[1 + d:]) for e in self.terms}

    def base_degrees(self) -> set:
        d = self.space.d
        return {sum(e[1:1 + d]) for e in self.terms}

    def hbar_coeff(self, k: int) -> "Poly":
        return Poly(self.space, {(0,) + e[1:]: c for e, c in self.terms.items() if e[0] == k})

    def hbar_degree(self) -> int:
        return max((e[0] for e in self.terms), default=-1)

    def restrict(self, zero_vars) -> "Poly":
        """Set the derivative coordinates in ``zero_vars`` to 0."""
        zs = [j + 1 for j in zero_vars]
        return Poly(self.space, {e: c for e, c in self.terms.items() if not any(e[j] for j in zs)}, self.K)

    def depends_on(self, j: int) -> bool:
        return any(e[j + 1] for e in self.terms)

    def eval_hbar(self, value) -> "Poly":
        """Substitute a Gaussian-rational value for hbar."""
        v = GQ.coerce(value)
        out: dict = {}
        for e, c in self.terms.items():
            k = (0,) + e[1:]
            out[k] = out.get(k, ZERO) + c * v ** e[0]
        return Poly(self.space, out, None)

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda t: term_key(t[0]))

    def __repr__(self):
        return f"Poly({render(self)})"

    def __str__(self):
        return render(self)


def term_key(e: tuple):
    """hbar power, then degree-lexicographic with x1 > x2 > .. > xi1 > .."""
    return (e[0], sum(e[1:]), tuple(-v for v in e[1:]))


def euler_degree(p: Poly):
    """The fibre degree k if p is xi-homogeneous, else the string 'inhomogeneous'."""
    if p.is_zero():
        raise ValueError("euler degree of the zero polynomial is undefined")
    ds = p.fibre_degrees()
    return ds.pop() if len(ds) == 1 else "inhomogeneous"


def euler_operator(p: Poly) -> Poly:
    """L_E p = sum_j xi_j d/dxi_j p."""
    d = p.space.d
    return Poly(p.space, {e: c * GQ(sum(e[1 + d:])) for e, c in p.terms.items()}, p.K)


# ----------------------------------------------------------------- text form


def render_monomial(space: VarSpec, e: tuple) -> str:
    parts = []
    if e[0]:
        parts.append("h" if e[0] == 1 else f"h^{e[0]}")
    for name, k in zip(space.names(), e[1:]):
        if k:
            parts.append(name if k == 1 else f"{name}^{k}")
    return "*".join(parts)


def render(p: Poly) -> str:
    if not p.terms:
        return "0"
    out = []
    for e, c in p.sorted_terms():
        mono = render_monomial(p.space, e)
        cs = render_scalar(c)
        if not mono:
            s = cs
        elif c == ONE:
            s = mono
        elif c == -ONE:
            s = "-" + mono
        else:
            if c.re and c.im:
                cs = f"({cs})"
            s = f"{cs}*{mono}"
        out.append(s)
    return " + ".join(out)


class _Eval(ast.NodeVisitor):
    def __init__(self, space: VarSpec, K):
        self.space = space
        self.K = K

    def visit_Expression(self, node):
        return self.visit(node.body)

    def visit_Constant(self, node):
        if isinstance(node.value, bool) or not isinstance(node.value, int):
            raise StructureError(f"unsupported literal {node.value!r}")
        return Poly.const(self.space, node.value, self.K)

    def visit_Name(self, node):
        if node.id == "i":
            return Poly.const(self.space, I, self.K)
        if node.id == "h":
            return Poly.hbar(self.space, self.K)
        return Poly.var(self.space, node.id, self.K)

    def visit_UnaryOp(self, node):
        v = self.visit(node.operand)
        if isinstance(node.op, ast.USub):
            return -v
        if isinstance(node.op, ast.UAdd):
            return v
        raise StructureError("unsupported unary operator")

    def visit_BinOp(self, node):
        a, b = self.visit(node.left), self.visit(node.right)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        if isinstance(node.op, ast.Div):
            return a / b
        if isinstance(node.op, ast.Pow):
            if not b.is_constant() or b.constant_term().im or b.constant_term().re.denominator != 1:
                raise StructureError("exponent must be a nonnegative integer")
            n = int(b.constant_term().re)
            if n < 0:
                raise StructureError("negative exponent")
            return a ** n
        raise StructureError("unsupported operator")

    def generic_visit(self, node):
        raise StructureError(f"unsupported syntax: {type(node).__name__}")


def parse(text: str, space: VarSpec, K: int | None = None) -> Poly:
    """Parse the canonical text form (or any +,-,*,/,^ expression of it)."""
    try:
        tree = ast.parse(text.strip().replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise StructureError(f"cannot parse polynomial {text!r}") from exc
    return _Eval(space, K).visit(tree)


def parse_expr_scalar(text: str) -> GQ:
    p = parse(text, VarSpec(0, 0))
    if not p.is_constant():
        raise StructureError(f"not a scalar: {text!r}")
    return p.constant_term()


def multi_factorial(alpha) -> int:
    r = 1
    for a in alpha:
        r *= factorial(a)
    return r
