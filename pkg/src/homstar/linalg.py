"""Exact sparse linear algebra over Q(i).

Vectors and matrix rows are dicts ``{index: GQ}``.  Elimination visits columns
in increasing index order and picks the first available row, so every result
is deterministic.
"""
from __future__ import annotations

from .scalar import GQ, ZERO


def axpy(y: dict, a: GQ, x: dict) -> None:
    """y += a*x in place, dropping zeros."""
    for k, v in x.items():
        w = y.get(k)
        t = a * v
        if w is None:
            if t:
                y[k] = t
        else:
            w = w + t
            if w:
                y[k] = w
            else:
                del y[k]


def rref(rows: list, pivot_limit: int | None = None):
    """Reduced row echelon form.

    Only columns ``< pivot_limit`` may become pivots (the rest are augmented
    columns).  Returns ``(reduced_rows, pivots)`` where ``pivots[i]`` is the
    pivot column of ``reduced_rows[i]``; zero rows are dropped.
    """
    rows = [dict(r) for r in rows if r]
    cols = sorted({c for r in rows for c in r if pivot_limit is None or c < pivot_limit})
    by_col: dict = {}
    for idx, r in enumerate(rows):
        for c in r:
            by_col.setdefault(c, set()).add(idx)
    done: list = []
    used: set = set()
    for c in cols:
        cand = [i for i in by_col.get(c, ()) if i not in used and c in rows[i]]
        if not cand:
            continue
        p = min(cand)
        used.add(p)
        prow = rows[p]
        inv = prow[c].inv()
        for k in list(prow):
            prow[k] = prow[k] * inv
        for i in list(by_col.get(c, ())):
            if i == p or c not in rows[i]:
                continue
            r = rows[i]
            f = -r[c]
            before = set(r)
            axpy(r, f, prow)
            for k in set(r) - before:
                by_col.setdefault(k, set()).add(i)
        done.append((c, p))
    reduced = [rows[p] for _, p in done]
    pivots = [c for c, _ in done]
    return reduced, pivots


class Solver:
    """Canonical solver for M u = r with a fixed rational-or-Gaussian matrix M.

    ``M`` is given by columns: ``cols[j] = {row: value}``.  The canonical
    solution is the RREF one with free unknowns set to zero.
    """

    def __init__(self, cols: list, nrows: int):
        self.ncols = len(cols)
        self.nrows = nrows
        rows: list = [dict() for _ in range(nrows)]
        for j, col in enumerate(cols):
            for i, v in col.items():
                if v:
                    rows[i][j] = v
        n = self.ncols
        aug = []
        for i in range(nrows):
            r = dict(rows[i])
            r[n + i] = GQ(1)
            aug.append(r)
        red, piv = rref(aug)
        self.pivot_rows = []
        self.checks = []
        for r, c in zip(red, piv):
            e = {k - n: v for k, v in r.items() if k >= n}
            if c < n:
                self.pivot_rows.append((c, e))
            else:
                self.checks.append(e)
        self.rank = len(self.pivot_rows)

    def residuals(self, rhs: dict) -> list:
        """Values of the consistency functionals on rhs (all zero iff solvable)."""
        out = []
        for chk in self.checks:
            s = ZERO
            for i, v in chk.items():
                w = rhs.get(i)
                if w is not None:
                    s = s + v * w
            out.append(s)
        return out

    def solve(self, rhs: dict):
        """Canonical solution dict, or None when rhs is outside the image."""
        for chk in self.checks:
            s = ZERO
            for i, v in chk.items():
                w = rhs.get(i)
                if w is not None:
                    s = s + v * w
            if s:
                return None
        sol = {}
        for c, er in self.pivot_rows:
            s = ZERO
            for i, v in er.items():
                w = rhs.get(i)
                if w is not None:
                    s = s + v * w
            if s:
                sol[c] = s
        return sol


def solve(cols: list, nrows: int, rhs: dict):
    return Solver(cols, nrows).solve(rhs)


def span_basis(vectors: list) -> list:
    """Row-reduced basis of the span (deterministic)."""
    red, _ = rref(vectors)
    return red


def nullspace(cols: list) -> list:
    """Basis of {u : sum_j u_j cols[j] = 0}, one vector per free column."""
    n = len(cols)
    rows: dict = {}
    for j, col in enumerate(cols):
        for i, v in col.items():
            if v:
                rows.setdefault(i, {})[j] = v
    red, piv = rref([rows[i] for i in sorted(rows)])
    pivset = set(piv)
    basis = []
    for f in range(n):
        if f in pivset:
            continue
        vec = {f: GQ(1)}
        for r, c in zip(red, piv):
            v = r.get(f)
            if v:
                vec[c] = -v
        basis.append(vec)
    return basis


def rank(vectors: list) -> int:
    return len(rref(vectors)[1])
