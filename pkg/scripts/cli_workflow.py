#!/usr/bin/env python3
"""Run a fixed batch of CLI commands over the bundled data files.

Every star file, witness and report lands in OUTDIR, so two runs can be
compared byte for byte.  Prints one line per command with its exit code.

    python scripts/cli_workflow.py OUTDIR [--K 3]
"""
from __future__ import annotations

import argparse
import os
import sys

from homstar.cli import main

DATA = os.path.join(os.path.dirname(os.path.abspath(__file__)), os.pardir, "data")


def steps(out: str, K: int) -> list:
    d = lambda f: os.path.join(DATA, f)
    o = lambda f: os.path.join(out, f)
    k = ["-K", str(K)]
    return [
        ("validate-h3", ["validate", d("heisenberg.alg")], 0),
        ("validate-tangent2", ["validate", d("tangent2.alg")], 0),
        ("cohomology-h3", ["cohomology", d("heisenberg.alg"), "-p", "2"], 0),
        ("cohomology-tangent2", ["cohomology", d("tangent2.alg"), "-p", "1", "--xdeg-cap", "2"], 0),
        ("build-h3-0", ["build-star", d("heisenberg.alg"), *k, "-o", o("h3_0.star")], 0),
        ("build-h3-e12", ["build-star", d("heisenberg.alg"), "--B", d("e12.form"), *k, "-o", o("h3_e12.star")], 0),
        ("build-h3-e13", ["build-star", d("heisenberg.alg"), "--B", d("e13.form"), *k, "-o", o("h3_e13.star")], 0),
        ("build-ab2-e12", ["build-star", d("abelian2.alg"), "--B", d("e12.form"), *k, "-o", o("ab2_e12.star")], 0),
        ("build-tangent2", ["build-star", d("tangent2.alg"), "-K", "2", "-o", o("t2.star")], 0),
        ("check-h3-e13", ["check", o("h3_e13.star")], 0),
        ("char-class-h3-e13", ["char-class", o("h3_e13.star")], 0),
        ("char-class-ab2", ["char-class", o("ab2_e12.star")], 0),
        ("equiv-exact-shift", ["equiv", o("h3_0.star"), o("h3_e12.star"), "-o", o("h3_witness.eqv")], 0),
        ("equiv-distinct", ["equiv", o("h3_0.star"), o("h3_e13.star")], 1),
        ("moyal-paper", ["moyal", "-d", "1", "--variant", "paper", *k, "-o", o("moyal_paper.star")], 0),
        ("moyal-weyl", ["moyal", "-d", "2", "--variant", "weyl", "-K", "2", "-o", o("moyal_weyl.star")], 0),
        ("gutt-h3", ["gutt", d("heisenberg.alg"), "--degree-cap", "3", "-K", "2", "-o", o("gutt_h3.star")], 0),
        ("coisotropic-centre", ["coisotropic", d("heisenberg.alg"), "--constraint", d("h3_centre.con")], 0),
        ("coisotropic-xi12", ["coisotropic", d("heisenberg.alg"), "--constraint", d("h3_xi12.sub")], 1),
        ("projectable-h3", ["check-projectable", o("h3_e12.star"), "--constraint", d("h3_centre.con")], 0),
        ("projectable-violation", ["check-projectable", o("t2.star"), "--constraint", d("tangent2_line.con")], 1),
        ("make-projectable", ["make-projectable", d("heisenberg.alg"), "--constraint", d("h3_centre.con"), "--B", d("e12.form"), *k, "-o", o("h3_proj.star")], 0),
        ("reduce", ["reduce", o("h3_proj.star"), "--constraint", d("h3_centre.con"), "-o", o("h3_red.star")], 0),
        ("represent-full", ["represent", o("h3_e12.star"), "--submanifold", d("h3_centre.con")], 0),
        ("represent-xi12", ["represent", o("h3_0.star"), "--submanifold", d("h3_xi12.sub")], 1),
        ("qr-abelian3", ["qr-check", d("abelian3.alg"), "--constraint", d("abelian3.con"), "--B", d("e12.form"), *k], 0),
        ("qr-h3-centre", ["qr-check", d("heisenberg.alg"), "--constraint", d("h3_centre.con"), "--B", d("e12.form"), *k], 0),
    ]


def run_all(out: str, K: int = 3) -> list:
    os.makedirs(out, exist_ok=True)
    results = []
    for name, argv, expected in steps(out, K):
        code = main(["--report", os.path.join(out, f"{name}.json"), *argv])
        results.append((name, code, expected))
    return results


def cli(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir")
    ap.add_argument("--K", type=int, default=3)
    a = ap.parse_args(argv)
    bad = 0
    for name, code, expected in run_all(a.outdir, a.K):
        flag = "ok" if code == expected else f"UNEXPECTED (wanted {expected})"
        bad += code != expected
        print(f"{name:24s} exit {code}  {flag}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(cli())
