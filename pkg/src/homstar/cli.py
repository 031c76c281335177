"""Batch command-line frontend.

Every subcommand reads plain-text inputs, writes its products atomically and
emits one report (versioned JSON by default, or ``key: value`` text).  Exit
codes: 0 success or verdict true, 1 verdict false, 2 input error, 3 a
computation contradicted a theorem-backed expectation.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field

from .algebroid import AForm, cohomology, parse_form, parse_presentation, validate
from .classes import DEFAULT_XDEG_CAP, characteristic_class, decide_equivalence
from .cochain import is_homogeneous, mc_defect
from .gutt import gutt_as_series, gutt_product
from .hkr import InfeasibleError, PreconditionError
from .poly import Poly, StructureError
from .reduction import (
    TheoremViolation,
    coisotropic_check,
    make_projectable,
    parse_constraint,
    parse_submanifold,
    projectability_check,
    pullback_class_test,
    qr_diagram_check,
    reduce_star,
    render_constraint,
    subalgebroid_failures,
    validate_constraint,
    verify_reduction,
)
from .scalar import GQ, render_scalar
from .star import StarError, moyal_star, monomial_probes, parse_star, render_equivalence, render_star, build_star

REPORT_SCHEMA = "homstar-report/1"
ENV_K = "HOMSTAR_K"
FALLBACK_K = 3

EXIT_OK, EXIT_FALSE, EXIT_INPUT, EXIT_THEOREM = 0, 1, 2, 3


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    K: int | None = None
    xdeg_cap: int | None = None
    degree_cap: int | None = None
    variant: str | None = None
    output: str | None = None
    report_format: str = "structured"
    report_path: str | None = None
    seed: int | None = None
    flags: dict = field(default_factory=dict)

    def check(self) -> None:
        if self.K is not None and self.K < 1:
            raise InputError("K must be at least 1")
        for name in ("xdeg_cap", "degree_cap"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise InputError(f"{name} must be non-negative")
        if self.report_format not in ("structured", "text"):
            raise InputError(f"unknown report format {self.report_format!r}")


def default_K() -> int:
    raw = os.environ.get(ENV_K)
    if raw is None:
        return FALLBACK_K
    try:
        K = int(raw)
    except ValueError as exc:
        raise InputError(f"{ENV_K} is not an integer: {raw!r}") from exc
    if K < 1:
        raise InputError(f"{ENV_K} must be at least 1")
    return K


# ------------------------------------------------------------------ io


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".homstar-", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def jsonable(v):
    """Exact, deterministic JSON view of library values."""
    if isinstance(v, GQ):
        return render_scalar(v)
    if isinstance(v, Poly):
        return str(v)
    if isinstance(v, AForm):
        return {"degree": v.p, "components": {",".join(str(i + 1) for i in I): str(c) for I, c in sorted(v.comps.items()) if c}}
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if v is None or isinstance(v, (bool, int, str)):
        return v
    return str(v)


def render_report(report: dict, fmt: str) -> str:
    if fmt == "structured":
        return json.dumps(jsonable(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    lines = []

    def walk(prefix, v):
        if isinstance(v, dict):
            for k in sorted(v):
                walk(f"{prefix}.{k}" if prefix else str(k), v[k])
        else:
            lines.append(f"{prefix}: {json.dumps(v, ensure_ascii=False)}")

    walk("", jsonable(report))
    return "\n".join(lines) + "\n"


class Context:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.digests: dict = {}

    def text(self, role: str, path: str) -> str:
        t = _read(path)
        self.digests[role] = _sha(t)
        return t

    def presentation(self, path: str):
        return parse_presentation(self.text("presentation", path))

    def form(self, path: str | None, A):
        if path is None:
            return None
        B = parse_form(self.text("form", path), A)
        if B.p != 2:
            raise InputError("the twisting form must have degree 2")
        return B

    def star(self, path: str, role: str = "star", verify: bool = True):
        return parse_star(self.text(role, path), verify=verify)

    @property
    def K(self) -> int:
        return self.cfg.K if self.cfg.K is not None else default_K()

    def cap(self, A) -> int | None:
        # None lets the library pick a cap that covers the inputs
        return self.cfg.xdeg_cap if A.d else None


def class_json(rep) -> dict:
    return {
        "coordinates": rep.coordinates,
        "representative": rep.representative,
        "zero": rep.is_zero(),
        "basis": rep.basis,
    }


# ------------------------------------------------------------------ commands


def cmd_validate(ctx, a):
    A = ctx.presentation(a.presentation)
    rep = validate(A)
    return rep.ok, {"failures": rep.failures, "dim_base": A.d, "rank": A.m}, {}


def cmd_cohomology(ctx, a):
    A = ctx.presentation(a.presentation)
    if a.degree < 0:
        raise InputError("degree must be non-negative")
    H = cohomology(A, a.degree, ctx.cap(A))
    return True, {"degree": a.degree, "dim": H.dim, "basis": H.basis}, H.truncation()


def cmd_build_star(ctx, a):
    A = ctx.presentation(a.presentation)
    _require_valid(A)
    B = ctx.form(a.B, A)
    star = build_star(A, B, ctx.K)
    text = render_star(star)
    _emit(ctx, text)
    return True, {"star_sha256": _sha(text), "convention": star.tag}, {"K": star.K}


def cmd_check(ctx, a):
    star = ctx.star(a.star, verify=False)
    both = not (a.assoc or a.homogeneity)
    orders = []
    ok = True
    for r in range(1, star.K + 1):
        row = {"order": r}
        if a.assoc or both:
            row["associative"] = mc_defect(star, r).is_zero()
            ok &= row["associative"]
        if a.homogeneity or both:
            row["homogeneous"] = is_homogeneous(star.order(r), -r)
            ok &= row["homogeneous"]
        orders.append(row)
    return ok, {"orders": orders, "convention": star.tag}, {"K": star.K}


def cmd_char_class(ctx, a):
    star = ctx.star(a.star)
    A = star.presentation
    rep = characteristic_class(star, cap=ctx.cap(A))
    return True, {"class": class_json(rep)}, dict(rep.truncation, K=star.K)


def cmd_equiv(ctx, a):
    s1 = ctx.star(a.star1, "star1")
    s2 = ctx.star(a.star2, "star2")
    if s1.presentation.digest() != s2.presentation.digest():
        raise InputError("stars are built on different presentations")
    if s1.K != s2.K:
        raise InputError("stars have different truncation orders")
    v = decide_equivalence(s1, s2, cap=ctx.cap(s1.presentation))
    res = {"equivalent": v.equivalent, "relative_class": class_json(v.relative_class)}
    if v.equivalent:
        text = render_equivalence(v.witness)
        res["witness_sha256"] = _sha(text)
        _emit(ctx, text)
    return v.equivalent, res, v.truncation


def cmd_moyal(ctx, a):
    if a.dim < 1:
        raise InputError("dimension must be at least 1")
    star = moyal_star(a.dim, a.variant, ctx.K)
    h = Poly.hbar(star.space, star.K)
    q = Poly.x(star.space, 0, star.K)
    p = Poly.xi(star.space, 0, star.K)
    text = render_star(star)
    _emit(ctx, text)
    res = {"variant": a.variant, "commutator_q_p": star.bracket(q, p), "hbar": str(h), "star_sha256": _sha(text)}
    return True, res, {"K": star.K}


def cmd_gutt(ctx, a):
    A = ctx.presentation(a.presentation)
    if A.d != 0:
        raise InputError("the enveloping-algebra product needs a Lie algebra (dim_base = 0)")
    _require_valid(A)
    B = ctx.form(a.B, A)
    cap = a.degree_cap
    sp = A.space
    probes = monomial_probes(sp, cap)
    deg = lambda F: max(F.fibre_degrees() | {0})
    failures = []
    checked = 0
    for F in probes:
        for G in probes:
            for H in probes:
                if deg(F) + deg(G) + deg(H) > cap:
                    continue
                left = gutt_product(A, gutt_product(A, F, G, B, cap), H, B, cap)
                right = gutt_product(A, F, gutt_product(A, G, H, B, cap), B, cap)
                checked += 1
                if left != right:
                    failures.append([F, G, H])
    res = {"associativity_triples": checked, "associativity_failures": failures[:5]}
    trunc = {"degree_cap": cap}
    if B is not None or A.m:
        star = gutt_as_series(A, B, ctx.K)
        rep = characteristic_class(star)
        text = render_star(star)
        _emit(ctx, text)
        res["class"] = class_json(rep)
        res["star_sha256"] = _sha(text)
        trunc["K"] = star.K
    return not failures, res, trunc


def _constraint(ctx, path, A):
    cp = parse_constraint(ctx.text("constraint", path), A)
    rep = validate_constraint(cp)
    if not rep.ok:
        raise InputError(f"invalid constraint: {rep.failures}")
    return cp


def cmd_coisotropic(ctx, a):
    A = ctx.presentation(a.presentation)
    x_out, Z = parse_submanifold(ctx.text("constraint", a.constraint), A)
    rep = coisotropic_check(A, x_out, Z)
    return rep.coisotropic, {"coisotropic": rep.coisotropic, "witness": rep.witness, "x_out": [i + 1 for i in x_out], "fibre_zero": [i + 1 for i in Z]}, {}


def cmd_check_projectable(ctx, a):
    star = ctx.star(a.star)
    cp = _constraint(ctx, a.constraint, star.presentation)
    rep = projectability_check(star, cp)
    return rep.projectable, {"projectable": rep.projectable, "first_violation": rep.first_violation}, {"K": rep.K, "probe_degree": rep.probe_degree}


def cmd_reduce(ctx, a):
    star = ctx.star(a.star)
    cp = _constraint(ctx, a.constraint, star.presentation)
    rep = projectability_check(star, cp)
    if not rep.projectable:
        return False, {"projectable": False, "first_violation": rep.first_violation}, {"K": star.K}
    red = reduce_star(star, cp)
    verify_reduction(star, red, cp)
    text = render_star(red)
    _emit(ctx, text)
    return True, {"projectable": True, "reduced_presentation_hash": red.presentation.digest(), "star_sha256": _sha(text)}, {"K": red.K}


def cmd_represent(ctx, a):
    star = ctx.star(a.star)
    A = star.presentation
    x_out, Z = parse_submanifold(ctx.text("submanifold", a.submanifold), A)
    fails = subalgebroid_failures(A, x_out, Z)
    cap = ctx.cfg.xdeg_cap if ctx.cfg.xdeg_cap is not None else DEFAULT_XDEG_CAP
    res = {"x_out": [i + 1 for i in x_out], "fibre_zero": [i + 1 for i in Z]}
    if fails:
        # not a subalgebroid: only the first-order (coisotropy) question is meaningful
        co = coisotropic_check(A, x_out, Z)
        res.update(subalgebroid=False, coisotropic=co.coisotropic, witness=co.witness, representable_to_order=0 if not co.coisotropic else None)
        return False, res, {"K": star.K, "xdeg_cap": cap}
    v = pullback_class_test(star, x_out, Z, xdeg_cap=cap)
    rep = v.representation
    res.update(
        subalgebroid=True,
        representable=rep.ok,
        order_reached=rep.order_reached,
        failed_order=rep.failed_order,
        first_order_adjusted=rep.adjusted,
        pullback_class=class_json(v.pullback_class),
    )
    if rep.obstruction is not None:
        res["obstruction"] = class_json(rep.obstruction)
    if rep.witness is not None:
        res["witness"] = rep.witness
    return rep.ok, res, {"K": star.K, "xdeg_cap": cap}


def cmd_make_projectable(ctx, a):
    A = ctx.presentation(a.presentation)
    _require_valid(A)
    cp = _constraint(ctx, a.constraint, A)
    B = ctx.form(a.B, A)
    star = make_projectable(B, cp, ctx.K)
    text = render_star(star)
    _emit(ctx, text)
    rep = characteristic_class(star, cap=ctx.cap(A))
    return True, {"star_sha256": _sha(text), "class": class_json(rep), "constraint": render_constraint(cp)}, dict(rep.truncation, K=star.K)


def cmd_qr_check(ctx, a):
    A = ctx.presentation(a.presentation)
    _require_valid(A)
    cp = _constraint(ctx, a.constraint, A)
    B = ctx.form(a.B, A)
    v = qr_diagram_check(cp, B, ctx.K, cap=ctx.cfg.xdeg_cap)
    res = {
        "ok": v.ok,
        "reduce_then_quantize": v.path_reduce_then_quantize,
        "quantize_then_reduce": v.path_quantize_then_reduce,
        "upper_square": v.upper_square,
    }
    return v.ok, res, v.truncation


def _require_valid(A) -> None:
    rep = validate(A)
    if not rep.ok:
        raise InputError(f"presentation is not a Lie algebroid: {rep.failures[:3]}")


def _emit(ctx, text: str) -> None:
    if ctx.cfg.output:
        write_atomic(ctx.cfg.output, text)


# ------------------------------------------------------------------ parser


def _common(p, K=False, cap=False, out=False, out_required=False):
    if K:
        p.add_argument("-K", type=int, default=None, help=f"truncation order (default ${ENV_K} or {FALLBACK_K})")
    if cap:
        p.add_argument("--xdeg-cap", type=int, default=None, help="x-degree cap for cohomology on a positive-dimensional base")
    if out:
        p.add_argument("-o", "--output", required=out_required, default=None)


def _report_options(p, default) -> None:
    p.add_argument("--report", default=default, help="write the report here instead of stdout")
    p.add_argument("--format", choices=("structured", "text"), default="structured" if default is None else default)
    p.add_argument("--seed", type=int, default=default, help="seed for randomized harnesses (never used by core computations)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="homstar", description="Homogeneous star products on duals of Lie algebroids.")
    _report_options(ap, None)
    # the same options after the subcommand; SUPPRESS keeps the global value when absent
    shared = argparse.ArgumentParser(add_help=False)
    _report_options(shared, argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)
    _add = sub.add_parser
    sub.add_parser = lambda name, **kw: _add(name, parents=[shared], **kw)

    p = sub.add_parser("validate")
    p.add_argument("presentation")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("cohomology")
    p.add_argument("presentation")
    p.add_argument("-p", dest="degree", type=int, required=True)
    _common(p, cap=True)
    p.set_defaults(func=cmd_cohomology)

    p = sub.add_parser("build-star")
    p.add_argument("presentation")
    p.add_argument("--B", default=None)
    _common(p, K=True, out=True, out_required=True)
    p.set_defaults(func=cmd_build_star)

    p = sub.add_parser("check")
    p.add_argument("star")
    p.add_argument("--assoc", action="store_true")
    p.add_argument("--homogeneity", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("char-class")
    p.add_argument("star")
    _common(p, cap=True)
    p.set_defaults(func=cmd_char_class)

    p = sub.add_parser("equiv")
    p.add_argument("star1")
    p.add_argument("star2")
    _common(p, cap=True, out=True)
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("moyal")
    p.add_argument("-d", dest="dim", type=int, required=True)
    p.add_argument("--variant", choices=("paper", "standard", "weyl"), required=True)
    _common(p, K=True, out=True)
    p.set_defaults(func=cmd_moyal)

    p = sub.add_parser("gutt")
    p.add_argument("presentation")
    p.add_argument("--B", default=None)
    p.add_argument("--degree-cap", type=int, required=True)
    _common(p, K=True, out=True)
    p.set_defaults(func=cmd_gutt)

    p = sub.add_parser("coisotropic")
    p.add_argument("presentation")
    p.add_argument("--constraint", required=True)
    p.set_defaults(func=cmd_coisotropic)

    p = sub.add_parser("check-projectable")
    p.add_argument("star")
    p.add_argument("--constraint", required=True)
    p.set_defaults(func=cmd_check_projectable)

    p = sub.add_parser("reduce")
    p.add_argument("star")
    p.add_argument("--constraint", required=True)
    _common(p, out=True, out_required=True)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("represent")
    p.add_argument("star")
    p.add_argument("--submanifold", required=True)
    _common(p, cap=True)
    p.set_defaults(func=cmd_represent)

    p = sub.add_parser("make-projectable")
    p.add_argument("presentation")
    p.add_argument("--constraint", required=True)
    p.add_argument("--B", required=True)
    _common(p, K=True, cap=True, out=True)
    p.set_defaults(func=cmd_make_projectable)

    p = sub.add_parser("qr-check")
    p.add_argument("presentation")
    p.add_argument("--constraint", required=True)
    p.add_argument("--B", required=True)
    _common(p, K=True, cap=True)
    p.set_defaults(func=cmd_qr_check)
    return ap


def _config(args) -> RunConfig:
    skip = {"func", "command", "report", "format", "seed", "K", "xdeg_cap", "degree_cap", "variant", "output"}
    inputs = {k: v for k, v in vars(args).items() if k not in skip and isinstance(v, str)}
    flags = {k: v for k, v in vars(args).items() if k not in skip and isinstance(v, bool)}
    return RunConfig(
        command=args.command,
        inputs=inputs,
        K=getattr(args, "K", None),
        xdeg_cap=getattr(args, "xdeg_cap", None),
        degree_cap=getattr(args, "degree_cap", None),
        variant=getattr(args, "variant", None),
        output=getattr(args, "output", None),
        report_format=args.format,
        report_path=args.report,
        seed=args.seed,
        flags=flags,
    )


def run(argv=None) -> tuple:
    """Parse, execute, and return (exit code, report dict, config)."""
    args = build_parser().parse_args(argv)
    cfg = _config(args)
    report = {"schema": REPORT_SCHEMA, "command": cfg.command}
    ctx = Context(cfg)
    try:
        cfg.check()
        verdict, result, trunc = args.func(ctx, args)
        code = EXIT_OK if verdict else EXIT_FALSE
        report.update(verdict=bool(verdict), result=result, truncation=trunc)
    except (InputError, StructureError, PreconditionError, ValueError) as exc:
        code = EXIT_INPUT
        report.update(verdict=None, error={"kind": "input", "message": str(exc)})
    except (TheoremViolation, StarError, InfeasibleError) as exc:
        code = EXIT_THEOREM
        report.update(verdict=None, error={"kind": "theorem-violation", "message": str(exc)})
    report["exit_code"] = code
    report["inputs_sha256"] = ctx.digests
    return code, report, cfg


def main(argv=None) -> int:
    code, report, cfg = run(argv)
    text = render_report(report, cfg.report_format)
    if cfg.report_path:
        write_atomic(cfg.report_path, text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
