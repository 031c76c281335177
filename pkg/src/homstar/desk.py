"""Small presentations used throughout tests, scripts and the CLI."""
from __future__ import annotations

from .algebroid import AlgebroidPresentation, AForm
from .poly import Poly


def abelian(m: int) -> AlgebroidPresentation:
    return AlgebroidPresentation.from_dicts(0, m)


def heisenberg() -> AlgebroidPresentation:
    return AlgebroidPresentation.from_dicts(0, 3, c={(0, 1, 2): 1})


def so3() -> AlgebroidPresentation:
    return AlgebroidPresentation.from_dicts(0, 3, c={(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1})


def aff1() -> AlgebroidPresentation:
    return AlgebroidPresentation.from_dicts(0, 2, c={(0, 1, 1): 1})


def tangent(d: int, scale=1) -> AlgebroidPresentation:
    return AlgebroidPresentation.from_dicts(d, d, anchor={(i, i): scale for i in range(d)})


def action_xdx() -> AlgebroidPresentation:
    """The action algebroid of R acting on R by the vector field x d/dx."""
    return AlgebroidPresentation.from_dicts(1, 1, anchor={(0, 0): "x1"})


def form2(A, entries: dict) -> AForm:
    """2-form from {(i, j): value} with 0-based indices."""
    return AForm.from_array(A.space, 2, {k: (v if isinstance(v, Poly) else Poly.const(A.space, v)) for k, v in entries.items()})


CATALOGUE = {
    "abelian2": lambda: abelian(2),
    "abelian3": lambda: abelian(3),
    "heisenberg": heisenberg,
    "so3": so3,
    "aff1": aff1,
    "tangent1": lambda: tangent(1),
    "tangent2": lambda: tangent(2),
    "action": action_xdx,
}
