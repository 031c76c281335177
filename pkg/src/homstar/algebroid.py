"""Polynomial Lie algebroid presentations over affine space.

A presentation has base coordinates x1..xd, a frame e_1..e_m with dual fibre
coordinates xi_1..xi_m on the dual bundle, an anchor rho(e_i) = sum_a
rho_i^a d/dx^a and brackets [e_i, e_j] = sum_k c_ij^k e_k.  Anchor and structure
functions are polynomials in x only.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from itertools import combinations, permutations

from .cochain import Cochain, perm_sign, vector_field
from .hkr import Multivector
from .linalg import Solver, nullspace, rref
from .poly import Poly, VarSpec, StructureError, parse, render
from .scalar import GQ, ONE, ZERO


@dataclass
class AlgebroidPresentation:
    d: int
    m: int
    anchor: list  # anchor[i][a] : Poly, rho_i^a
    c: list  # c[i][j][k] : Poly
    basis_names: list = field(default_factory=list)
    connection: list | None = None  # Gamma[i][j][k]

    def __post_init__(self):
        if not self.basis_names:
            self.basis_names = [f"e{i + 1}" for i in range(self.m)]

    @property
    def space(self) -> VarSpec:
        return VarSpec(self.d, self.m)

    @classmethod
    def from_dicts(cls, d, m, anchor=None, c=None, names=None):
        """anchor: {(i,a): poly or text}; c: {(i,j,k): poly or text} (0-based, i<j suffices)."""
        sp = VarSpec(d, m)

        def P(v):
            if isinstance(v, Poly):
                return v
            if isinstance(v, str):
                return parse(v, sp)
            return Poly.const(sp, v)

        an = [[Poly.zero(sp) for _ in range(d)] for _ in range(m)]
        cc = [[[Poly.zero(sp) for _ in range(m)] for _ in range(m)] for _ in range(m)]
        for (i, a), v in (anchor or {}).items():
            an[i][a] = P(v)
        for (i, j, k), v in (c or {}).items():
            cc[i][j][k] = P(v)
            if i != j and not cc[j][i][k]:
                cc[j][i][k] = -P(v)
        return cls(d, m, an, cc, list(names or []))

    # sections are lists of m Polys (x only)
    def anchor_apply(self, s: list, f: Poly) -> Poly:
        acc = Poly.zero(self.space)
        for i, si in enumerate(s):
            if not si:
                continue
            for a in range(self.d):
                r = self.anchor[i][a]
                if r:
                    acc = acc + si * r * f.partial(self.space.unit(a))
        return acc

    def basis_section(self, i) -> list:
        return [Poly.const(self.space, 1 if k == i else 0) for k in range(self.m)]

    def bracket(self, s: list, t: list) -> list:
        """[s,t] = s^i t^j c_ij + s^i rho(e_i)(t^k) e_k - t^j rho(e_j)(s^k) e_k."""
        sp = self.space
        out = [Poly.zero(sp) for _ in range(self.m)]
        for i in range(self.m):
            for j in range(self.m):
                if s[i] and t[j]:
                    st = s[i] * t[j]
                    for k in range(self.m):
                        if self.c[i][j][k]:
                            out[k] = out[k] + st * self.c[i][j][k]
        for k in range(self.m):
            out[k] = out[k] + self.anchor_apply(s, t[k]) - self.anchor_apply(t, s[k])
        return out

    def digest(self) -> str:
        return hashlib.sha256(render_presentation(self).encode()).hexdigest()[:16]


# ------------------------------------------------------------------ validation


@dataclass
class ValidationReport:
    ok: bool
    failures: list

    def __bool__(self):
        return self.ok


def validate(A: AlgebroidPresentation) -> ValidationReport:
    fails = []
    sp = A.space
    for i in range(A.m):
        for a in range(A.d):
            if A.anchor[i][a].fibre_degrees() - {0} or A.anchor[i][a].hbar_degree() > 0:
                fails.append(("anchor-not-base-polynomial", (i + 1, a + 1)))
        for j in range(A.m):
            for k in range(A.m):
                cij = A.c[i][j][k]
                if cij.fibre_degrees() - {0}:
                    fails.append(("structure-not-base-polynomial", (i + 1, j + 1, k + 1)))
                if cij + A.c[j][i][k]:
                    fails.append(("antisymmetry", (i + 1, j + 1, k + 1)))
    E = [A.basis_section(i) for i in range(A.m)]
    xs = [Poly.x(sp, a) for a in range(A.d)]
    # anchor compatibility on coordinate functions
    for i, j in combinations(range(A.m), 2):
        br = A.bracket(E[i], E[j])
        for a, f in enumerate(xs):
            lhs = A.anchor_apply(br, f)
            rhs = A.anchor_apply(E[i], A.anchor_apply(E[j], f)) - A.anchor_apply(E[j], A.anchor_apply(E[i], f))
            if lhs != rhs:
                fails.append(("anchor-bracket", (i + 1, j + 1, a + 1)))
    # Jacobi on basis triples
    for i, j, k in combinations(range(A.m), 3):
        acc = [Poly.zero(sp) for _ in range(A.m)]
        for (p, q, r) in ((i, j, k), (j, k, i), (k, i, j)):
            t = A.bracket(A.bracket(E[p], E[q]), E[r])
            acc = [u + v for u, v in zip(acc, t)]
        if any(acc):
            fails.append(("jacobi", (i + 1, j + 1, k + 1)))
    return ValidationReport(not fails, fails)


# ------------------------------------------------------------------ Poisson


def kks_bivector(A: AlgebroidPresentation) -> Multivector:
    sp = A.space
    d = A.d
    ent = {}
    for i in range(A.m):
        for a in range(d):
            if A.anchor[i][a]:
                ent[(a, d + i)] = A.anchor[i][a]
    for i in range(A.m):
        for j in range(i + 1, A.m):
            v = Poly.zero(sp)
            for k in range(A.m):
                if A.c[i][j][k]:
                    v = v - A.c[i][j][k] * Poly.xi(sp, k)
            if v:
                ent[(d + i, d + j)] = v
    return Multivector.from_array(sp, 2, ent)


def poisson_cochain(A: AlgebroidPresentation) -> Cochain:
    """{F,G} = sum_{A,B} pi^{AB} d_A F d_B G as a bidifferential operator."""
    pi = kks_bivector(A)
    sp = A.space
    t = {}
    for (a, b), v in pi.comps.items():
        t[(sp.unit(a), sp.unit(b))] = dict(v.terms)
        t[(sp.unit(b), sp.unit(a))] = dict((-v).terms)
    return Cochain(sp, 2, t)


def kks_bracket(A: AlgebroidPresentation, F: Poly, G: Poly) -> Poly:
    from .cochain import apply

    return apply(poisson_cochain(A), [F, G])


# ------------------------------------------------------------------ forms


@dataclass
class AForm:
    """p-form on the algebroid: increasing index tuple -> Poly (x only)."""

    space: VarSpec
    p: int
    comps: dict

    @classmethod
    def zero(cls, space, p):
        return cls(space, p, {})

    @classmethod
    def from_array(cls, space, p, entries: dict):
        comps: dict = {}
        for idx, val in entries.items():
            if not isinstance(val, Poly):
                val = Poly.const(space, val)
            if len(set(idx)) < len(idx):
                continue
            order = sorted(range(p), key=lambda k: idx[k])
            key = tuple(idx[k] for k in order)
            v = val if perm_sign(order) == 1 else -val
            comps[key] = comps.get(key, Poly.zero(space)) + v
        return cls(space, p, {k: v for k, v in comps.items() if v})

    def at(self, idx) -> Poly:
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
        return AForm(self.space, self.p, {k: v for k, v in c.items() if v})

    def __neg__(self):
        return AForm(self.space, self.p, {k: -v for k, v in self.comps.items()})

    def __sub__(self, o):
        return self + (-o)

    def scale(self, s):
        return AForm(self.space, self.p, {k: v * s for k, v in self.comps.items() if (v * s)})

    def __eq__(self, o):
        return isinstance(o, AForm) and self.p == o.p and self.comps == o.comps

    def is_zero(self):
        return not self.comps

    def max_xdeg(self) -> int:
        return max((max(v.base_degrees()) for v in self.comps.values()), default=0)


def d_A(A: AlgebroidPresentation, alpha: AForm) -> AForm:
    """Chevalley-Eilenberg differential of the algebroid."""
    p = alpha.p
    sp = A.space
    out = {}
    for idx in combinations(range(A.m), p + 1):
        acc = Poly.zero(sp)
        for r in range(p + 1):
            rest = idx[:r] + idx[r + 1:]
            v = alpha.at(rest)
            if v:
                t = A.anchor_apply(A.basis_section(idx[r]), v)
                acc = acc + (t if r % 2 == 0 else -t)
        for r in range(p + 1):
            for s in range(r + 1, p + 1):
                rest = tuple(x for q, x in enumerate(idx) if q not in (r, s))
                for k in range(A.m):
                    ck = A.c[idx[r]][idx[s]][k]
                    if ck:
                        v = alpha.at((k,) + rest)
                        if v:
                            t = ck * v
                            acc = acc + (t if (r + s) % 2 == 0 else -t)
        if acc:
            out[idx] = acc
    return AForm(sp, p + 1, out)


def wedge_basis_form(space, p, idx, coeff=1) -> AForm:
    return AForm.from_array(space, p, {tuple(idx): coeff})


def _xmonos(d: int, cap: int):
    out = [()]
    for _ in range(d):
        out = [m + (k,) for m in out for k in range(cap + 1)]
    out = [m for m in out if sum(m) <= cap]
    out.sort(key=lambda m: (sum(m), tuple(-v for v in m)))
    return out


class FormSpace:
    """Coordinates for p-forms with x-degree <= cap."""

    def __init__(self, A: AlgebroidPresentation, p: int, cap: int):
        self.A, self.p, self.cap = A, p, cap
        self.keys = [(I, mono) for I in combinations(range(A.m), p) for mono in _xmonos(A.d, cap)]
        self.index = {k: n for n, k in enumerate(self.keys)}

    def form(self, vec: dict) -> AForm:
        sp = self.A.space
        comps: dict = {}
        for n, c in vec.items():
            I, mono = self.keys[n]
            e = (0,) + tuple(mono) + (0,) * sp.m
            comps.setdefault(I, {})[e] = c
        return AForm(sp, self.p, {I: Poly(sp, t) for I, t in comps.items() if t})

    def vector(self, alpha: AForm, strict=True):
        d = self.A.d
        vec = {}
        for I, v in alpha.comps.items():
            for e, c in v.terms.items():
                key = (I, tuple(e[1:1 + d]))
                n = self.index.get(key)
                if n is None:
                    if strict:
                        raise ValueError("form exceeds the x-degree cap")
                    return None
                vec[n] = c
        return vec


@dataclass
class CohomologyClass:
    representative: AForm
    coordinates: tuple
    basis: list
    truncation: dict

    def is_zero(self) -> bool:
        return not any(self.coordinates)


class Cohomology:
    """H^p of the (truncated) algebroid complex with an exact projector."""

    def __init__(self, A: AlgebroidPresentation, p: int, xdeg_cap: int | None = None, constraint=None):
        if A.d > 0 and xdeg_cap is None:
            raise ValueError("an x-degree cap is required when the base has positive dimension")
        cap = 0 if A.d == 0 else xdeg_cap
        self.A, self.p, self.cap = A, p, cap
        self.constraint = constraint  # optional subspace predicate (projectable forms)
        self.Vp = FormSpace(A, p, cap)
        self.Vp1 = FormSpace(A, p + 1, cap + self._spread())
        self.Vm = FormSpace(A, p - 1, cap + 1) if p >= 1 else None
        allowed_p = self._allowed(self.Vp)
        # kernel of d on the allowed p-forms
        cols = [self._dcol(self.Vp, n, self.Vp1) for n in allowed_p]
        ker = nullspace(cols)
        self.kernel = [{allowed_p[j]: v for j, v in vec.items()} for vec in ker]
        # image from (p-1)-forms, intersected with degree <= cap
        self.image = []
        if self.Vm is not None:
            allowed_m = self._allowed(self.Vm)
            low_cols, high_cols = [], []
            for n in allowed_m:
                col = self._dcol(self.Vm, n, None)
                low, high = {}, {}
                for key, c in col.items():
                    idx = self.Vp.index.get(key)
                    if idx is not None:
                        low[idx] = c
                    else:
                        high[key] = c
                low_cols.append(low)
                high_cols.append(high)
            hkeys = sorted({k for h in high_cols for k in h})
            hidx = {k: i for i, k in enumerate(hkeys)}
            combos = nullspace([{hidx[k]: v for k, v in h.items()} for h in high_cols])
            for cvec in combos:
                acc: dict = {}
                for j, a in cvec.items():
                    for i, v in low_cols[j].items():
                        acc[i] = acc.get(i, ZERO) + a * v
                acc = {i: v for i, v in acc.items() if v}
                if acc:
                    self.image.append(acc)
            self.image_primitives = [(cvec, allowed_m) for cvec in combos]
        self.image_basis = rref(self.image)[0] if self.image else []
        # complement of the image inside the kernel
        basis, span = [], list(self.image_basis)
        r = len(rref(span)[1]) if span else 0
        for v in self.kernel:
            trial = span + [v]
            r2 = len(rref(trial)[1])
            if r2 > r:
                basis.append(v)
                span, r = trial, r2
        self.basis_vecs = basis
        self.dim = len(basis)
        self._solver = Solver(self.basis_vecs + self.image_basis, len(self.Vp.keys))

    def _spread(self) -> int:
        A = self.A
        s = 0
        for row in A.anchor:
            for r in row:
                if r:
                    s = max(s, max(r.base_degrees()) - 1)
        for a in A.c:
            for b in a:
                for r in b:
                    if r:
                        s = max(s, max(r.base_degrees()))
        return max(s, 0) + 1

    def _allowed(self, V: FormSpace) -> list:
        if self.constraint is None:
            return list(range(len(V.keys)))
        return [n for n, k in enumerate(V.keys) if self.constraint(V.p, k)]

    def _dcol(self, V: FormSpace, n: int, target: FormSpace | None) -> dict:
        alpha = V.form({n: ONE})
        da = d_A(self.A, alpha)
        out = {}
        d = self.A.d
        for I, v in da.comps.items():
            for e, c in v.terms.items():
                key = (I, tuple(e[1:1 + d]))
                if target is None:
                    out[key] = c
                else:
                    out[target.index[key]] = c
        return out

    @property
    def basis(self) -> list:
        return [self.Vp.form(v) for v in self.basis_vecs]

    def coordinates(self, alpha: AForm) -> tuple:
        if alpha.p != self.p:
            raise ValueError("degree mismatch")
        if not d_A(self.A, alpha).is_zero():
            raise ValueError("form is not closed")
        vec = self.Vp.vector(alpha)
        sol = self._solver.solve(vec)
        if sol is None:
            raise ValueError("closed form outside the computed kernel (cap or constraint violated)")
        return tuple(sol.get(k, ZERO) for k in range(self.dim))

    def cls(self, alpha: AForm) -> CohomologyClass:
        return CohomologyClass(alpha, self.coordinates(alpha), self.basis, self.truncation())

    def truncation(self) -> dict:
        return {"xdeg_cap": self.cap, "truncated": self.A.d > 0}

    def primitive(self, alpha: AForm) -> AForm | None:
        """Some beta (x-degree <= cap+1, allowed) with d beta = alpha, or None."""
        if self.Vm is None:
            return None if not alpha.is_zero() else AForm.zero(self.A.space, -1)
        allowed_m = self._allowed(self.Vm)
        cols, keys = [], {}
        for n in allowed_m:
            col = self._dcol(self.Vm, n, None)
            cols.append({keys.setdefault(k, len(keys)): v for k, v in col.items()})
        d = self.A.d
        rhs = {}
        for I, v in alpha.comps.items():
            for e, c in v.terms.items():
                k = (I, tuple(e[1:1 + d]))
                if k not in keys:
                    keys[k] = len(keys)
                rhs[keys[k]] = c
        sol = Solver(cols, len(keys)).solve(rhs)
        if sol is None:
            return None
        return self.Vm.form({allowed_m[j]: v for j, v in sol.items()})


def cohomology(A, p, xdeg_cap=None) -> Cohomology:
    return Cohomology(A, p, xdeg_cap)


# ------------------------------------------------------------------ lifts


def vertical_lift(A: AlgebroidPresentation, alpha: list) -> Cochain:
    """alpha^ver = sum_i alpha_i d/dxi_i for a section alpha of the dual bundle."""
    sp = A.space
    comps = [Poly.zero(sp)] * A.d + list(alpha)
    return vector_field(comps)


def form_vertical_lift(B: AForm) -> Multivector:
    """B^ver: the fibre bivector (or p-vector) with components B_{i..} on d/dxi."""
    sp = B.space
    return Multivector(sp, B.p, {tuple(sp.d + i for i in I): v for I, v in B.comps.items()})


def horizontal_lift(A: AlgebroidPresentation, s: list, Gamma=None) -> Cochain:
    """s^hor with s^hor(pr*f) = pr*(rho(s)f), s^hor(J(t)) = J(nabla_s t)."""
    sp = A.space
    comps = [Poly.zero(sp) for _ in range(sp.n)]
    for i, si in enumerate(s):
        if not si:
            continue
        for a in range(A.d):
            comps[a] = comps[a] + si * A.anchor[i][a]
        if Gamma is not None:
            for j in range(A.m):
                for k in range(A.m):
                    g = Gamma[i][j][k]
                    if g:
                        comps[sp.d + j] = comps[sp.d + j] + si * g * Poly.xi(sp, k)
    return vector_field(comps)


def connection_apply(A, Gamma, s: list, t: list) -> list:
    """nabla_s t = s^i (rho(e_i) t^k + t^j Gamma_ij^k) e_k."""
    sp = A.space
    out = [A.anchor_apply(s, t[k]) for k in range(A.m)]
    if Gamma is not None:
        for i in range(A.m):
            for j in range(A.m):
                if s[i] and t[j]:
                    for k in range(A.m):
                        if Gamma[i][j][k]:
                            out[k] = out[k] + s[i] * t[j] * Gamma[i][j][k]
    return out


def curvature_trace(A: AlgebroidPresentation, Gamma=None) -> AForm:
    """The 2-form (s,t) -> tr R(s,t) for the connection with Christoffels Gamma."""
    E = [A.basis_section(i) for i in range(A.m)]
    sp = A.space
    out = {}
    for i, j in combinations(range(A.m), 2):
        tr = Poly.zero(sp)
        for k in range(A.m):
            u = E[k]
            a = connection_apply(A, Gamma, E[i], connection_apply(A, Gamma, E[j], u))
            b = connection_apply(A, Gamma, E[j], connection_apply(A, Gamma, E[i], u))
            c = connection_apply(A, Gamma, A.bracket(E[i], E[j]), u)
            tr = tr + a[k] - b[k] - c[k]
        if tr:
            out[(i, j)] = tr
    return AForm(sp, 2, out)


# ------------------------------------------------------------------ text formats


def _parse_kv(text: str) -> list:
    out = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise StructureError(f"line {ln}: expected key = value")
        k, v = line.split("=", 1)
        out.append((k.strip(), v.strip(), ln))
    return out


def _indices(key: str, name: str, n: int) -> tuple:
    body = key[len(name):]
    parts = body.strip("[]").split("][")
    if len(parts) != n or not key.startswith(name + "["):
        raise StructureError(f"malformed key {key!r}")
    return tuple(int(p) - 1 for p in parts)


def parse_presentation(text: str) -> AlgebroidPresentation:
    kv = _parse_kv(text)
    head = {k: v for k, v, _ in kv if "[" not in k}
    try:
        d, m = int(head["dim_base"]), int(head["rank"])
    except KeyError as exc:
        raise StructureError(f"missing field {exc}") from exc
    sp = VarSpec(d, m)
    an = [[Poly.zero(sp) for _ in range(d)] for _ in range(m)]
    cc = [[[Poly.zero(sp) for _ in range(m)] for _ in range(m)] for _ in range(m)]
    gamma = None
    for k, v, ln in kv:
        if k.startswith("anchor["):
            i, a = _indices(k, "anchor", 2)
            if not (0 <= i < m and 0 <= a < d):
                raise StructureError(f"line {ln}: index out of range")
            an[i][a] = parse(v, sp)
        elif k.startswith("c["):
            i, j, kk = _indices(k, "c", 3)
            if not (0 <= i < m and 0 <= j < m and 0 <= kk < m):
                raise StructureError(f"line {ln}: index out of range")
            p = parse(v, sp)
            cc[i][j][kk] = p
            if i != j:
                cc[j][i][kk] = -p
        elif k.startswith("connection["):
            i, j, kk = _indices(k, "connection", 3)
            if gamma is None:
                gamma = [[[Poly.zero(sp) for _ in range(m)] for _ in range(m)] for _ in range(m)]
            gamma[i][j][kk] = parse(v, sp)
        elif k in ("dim_base", "rank", "basis_names"):
            continue
        else:
            raise StructureError(f"line {ln}: unknown key {k!r}")
    names = head.get("basis_names", "").split() or None
    return AlgebroidPresentation(d, m, an, cc, names or [], gamma)


def render_presentation(A: AlgebroidPresentation) -> str:
    lines = [f"dim_base = {A.d}", f"rank = {A.m}", "basis_names = " + " ".join(A.basis_names)]
    for i in range(A.m):
        for a in range(A.d):
            if A.anchor[i][a]:
                lines.append(f"anchor[{i + 1}][{a + 1}] = {render(A.anchor[i][a])}")
    for i in range(A.m):
        for j in range(i + 1, A.m):
            for k in range(A.m):
                if A.c[i][j][k]:
                    lines.append(f"c[{i + 1}][{j + 1}][{k + 1}] = {render(A.c[i][j][k])}")
    if A.connection is not None:
        for i in range(A.m):
            for j in range(A.m):
                for k in range(A.m):
                    if A.connection[i][j][k]:
                        lines.append(f"connection[{i + 1}][{j + 1}][{k + 1}] = {render(A.connection[i][j][k])}")
    return "\n".join(lines) + "\n"


def parse_form(text: str, A: AlgebroidPresentation) -> AForm:
    kv = _parse_kv(text)
    head = {k: v for k, v, _ in kv if "[" not in k}
    p = int(head.get("degree", 2))
    ent = {}
    for k, v, ln in kv:
        if k.startswith("form["):
            idx = _indices(k, "form", p)
            if any(not 0 <= i < A.m for i in idx):
                raise StructureError(f"line {ln}: index out of range")
            ent[idx] = parse(v, A.space)
        elif k != "degree":
            raise StructureError(f"line {ln}: unknown key {k!r}")
    return AForm.from_array(A.space, p, ent)


def render_form(B: AForm) -> str:
    lines = [f"degree = {B.p}"]
    for I in sorted(B.comps):
        lines.append("form" + "".join(f"[{i + 1}]" for i in I) + f" = {render(B.comps[I])}")
    return "\n".join(lines) + "\n"
