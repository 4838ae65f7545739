"""Command-line interface: ``kronmle <command> [options]``.

Exit codes: 0 success, 1 bad input, 2 the data or shape has no MLE
(``NoMLE`` verdicts, diverged fits, defective ``2 x 2`` pairs), 3 the fit ran
out of iterations.  Errors are reported on stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys

import numpy as np

from . import __version__
from .closedform import TwoByTwoCase, classify_2x2
from .core import FitStatus, KronMLEError
from .flipflop import FlipFlopConfig, Init, fit
from .io import dumps_json, read_sample, sample_to_dict, trace_csv
from .minrank import Verdict, numeric_min_rank_search, r2, s2, s2_table_csv
from .montecarlo import (
    default_seed,
    empirical_threshold,
    prob_real_eigs_2x2,
    rng_stream,
)
from .pencil import canonical_pair, canonicalize_pair, real_jordan_pair
from .thresholds import table1_csv, thresholds

EXIT_OK, EXIT_INPUT, EXIT_NO_MLE, EXIT_MAX_ITER = 0, 1, 2, 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise InputError(f"missing required option(s): {', '.join(missing)}")


def _positive(args, *names):
    for n in names:
        v = getattr(args, n)
        if v is not None and v < 1:
            raise InputError(f"--{n.replace('_', '-')} must be a positive integer")


# ---------------------------------------------------------------------------
# commands


def cmd_fit(args, out):
    _need(args, "input")
    sample = read_sample(args.input)
    init = Init.random_spd(args.seed) if args.init == "random" else Init.identity()
    kwargs = {"init": init, "accelerate": not args.plain}
    if args.max_iter is not None:
        kwargs["max_iterations"] = args.max_iter
    if args.tol is not None:
        kwargs["rel_tol"] = args.tol
    report = fit(sample, FlipFlopConfig(**kwargs))
    if args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(trace_csv(report.trace_rows()))
    if args.format == "csv":
        out.write(trace_csv(report.trace_rows()))
    else:
        out.write(dumps_json(report.to_dict()))
    if report.status.converged:
        return EXIT_OK
    return EXIT_NO_MLE if report.status is FitStatus.DIVERGED else EXIT_MAX_ITER


def cmd_threshold(args, out):
    if args.table is not None:
        _positive(args, "table")
        out.write(table1_csv(args.table, args.mean_unknown))
        return EXIT_OK
    _need(args, "m1", "m2")
    _positive(args, "m1", "m2")
    rep = thresholds(args.m1, args.m2, args.mean_unknown)
    if args.format == "csv":
        d = rep.to_dict()
        cells = [d["m1"], d["m2"]] + [str(getattr(rep, k)) for k in ("n_b", "n_e", "n_u")]
        out.write(_csv(["m1", "m2", "n_b", "n_e", "n_u", "source"], [cells + [d["source"]]]))
    else:
        out.write(dumps_json(rep.to_dict()))
    return EXIT_OK


def _s2_cell(m1, m2):
    a, b = max(m1, m2), min(m1, m2)
    if b < 2:
        raise InputError("S_2 needs both dimensions >= 2")
    if a > 2 * b:
        doc = {"m1": m1, "m2": m2, "n": 2, "value": None, "minimizing_k": [], "verdict": Verdict.NONE.value}
        return doc, Verdict.NONE
    rep = s2(a, b)
    doc = rep.to_dict()
    doc.update(m1=m1, m2=m2)
    return doc, rep.verdict


def cmd_s2(args, out):
    if args.table is not None:
        if args.table < 2:
            raise InputError("--table must be >= 2")
        out.write(s2_table_csv(args.table))
        return EXIT_OK
    _need(args, "m1", "m2")
    doc, verdict = _s2_cell(args.m1, args.m2)
    if args.format == "csv":
        v = doc["value"]
        cell = "" if v is None else (f"{v['real_case']}|{v['complex_case']}" if isinstance(v, dict) else v)
        out.write(_csv(["m1", "m2", "s2", "verdict"], [[args.m1, args.m2, cell, doc["verdict"] or "Conditional"]]))
    else:
        out.write(dumps_json(doc))
    return EXIT_NO_MLE if verdict is Verdict.NONE else EXIT_OK


def cmd_minrank(args, out):
    if args.s2_table is not None:
        return cmd_s2(argparse.Namespace(table=args.s2_table), out)
    if args.input:
        _need(args, "k")
        sample = read_sample(args.input)
        r = numeric_min_rank_search(sample, args.k, restarts=args.restarts, seed=args.seed)
        out.write(dumps_json({
            "m1": sample.m1, "m2": sample.m2, "n": sample.n, "k": args.k,
            "rank_upper_bound": r, "restarts": args.restarts, "seed": args.seed,
        }))
        return EXIT_OK
    _need(args, "m1", "m2", "k")
    cert = r2(args.m1, args.m2, args.k)
    doc = cert.to_dict()
    doc["stacked_rank"] = cert.witness_rank()
    out.write(dumps_json(doc))
    return EXIT_OK


def cmd_canonical(args, out):
    _need(args, "input")
    sample = read_sample(args.input)
    if sample.n != 2:
        raise InputError("canonical form needs exactly two matrices")
    y1, y2 = sample.matrices
    if sample.m1 == sample.m2:
        a, b, info = real_jordan_pair(y1, y2)
        doc = {
            "kind": "RealJordan",
            "a": a.tolist(),
            "b": b.tolist(),
            "block_sizes": list(info.block_sizes),
            "eigenvalues_real": [float(v.real) for v in info.eigenvalues],
            "eigenvalues_imag": [float(v.imag) for v in info.eigenvalues],
        }
    else:
        if sample.m1 < sample.m2:
            raise InputError("canonical form needs m1 >= m2; transpose the data")
        canon = canonicalize_pair(y1, y2)
        doc = canon.to_dict()
        doc["kind"] = "StackedIdentity"
        c1, c2 = canonical_pair(sample.m1, sample.m2)
        t1, t2 = canon.apply(y1, y2)
        doc["check"] = {"y1_error": float(np.max(np.abs(t1 - c1))), "y2_error": float(np.max(np.abs(t2 - c2)))}
    out.write(dumps_json(doc))
    return EXIT_OK


def cmd_classify2x2(args, out):
    _need(args, "input")
    sample = read_sample(args.input)
    if (sample.n, sample.m1, sample.m2) != (2, 2, 2):
        raise InputError("classify2x2 needs two 2x2 matrices")
    rep = classify_2x2(*sample.matrices)
    out.write(dumps_json(rep.to_dict()))
    return EXIT_NO_MLE if rep.case is TwoByTwoCase.REAL_DEFECTIVE else EXIT_OK


def cmd_montecarlo(args, out):
    _positive(args, "trials", "jobs")
    if args.experiment == "eig2x2":
        rep = prob_real_eigs_2x2(args.trials, args.seed, jobs=args.jobs)
    else:
        _need(args, "m1", "m2", "n")
        _positive(args, "m1", "m2", "n")
        kwargs = {}
        if args.max_iter is not None:
            kwargs["max_iterations"] = args.max_iter
        if args.tol is not None:
            kwargs["rel_tol"] = args.tol
        rep = empirical_threshold(args.m1, args.m2, args.n, args.trials, args.seed,
                                  FlipFlopConfig(**kwargs), jobs=args.jobs)
    out.write(dumps_json(rep.to_dict()))
    return EXIT_OK


def cmd_sample(args, out):
    if args.canonical:
        _need(args, "m1", "m2")
        y = canonical_pair(args.m1, args.m2)
    else:
        _need(args, "m1", "m2", "n")
        _positive(args, "m1", "m2", "n")
        y = rng_stream(args.seed).standard_normal((args.n, args.m1, args.m2))
    doc = dumps_json(sample_to_dict(y))
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(doc)
    else:
        out.write(doc)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser():
    seed = default_seed()
    p = _Parser(prog="kronmle", description="Existence, uniqueness and computation of Kronecker MLEs.")
    p.add_argument("--version", action="version", version=f"kronmle {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def dims(sp, k=False, n=False):
        sp.add_argument("--m1", type=int)
        sp.add_argument("--m2", type=int)
        if n:
            sp.add_argument("--n", type=int)
        if k:
            sp.add_argument("--k", type=int)

    sp = sub.add_parser("fit", help="run flip-flop on a sample file")
    sp.add_argument("--input", required=False)
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--trace", metavar="PATH")
    sp.add_argument("--plain", action="store_true", help="textbook iteration without acceleration")
    sp.add_argument("--init", choices=["identity", "random"], default="identity")
    sp.add_argument("--seed", type=int, default=seed)
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("threshold", help="sample-size thresholds N_b, N_e, N_u")
    dims(sp)
    sp.add_argument("--mean-unknown", action="store_true")
    sp.add_argument("--table", type=int, metavar="N")
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("s2", help="S_2(m1, m2) and its verdict")
    dims(sp)
    sp.add_argument("--table", type=int, metavar="N")
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.set_defaults(func=cmd_s2)

    sp = sub.add_parser("minrank", help="minimal rank r_2 with witness, or a numeric bound for a sample")
    dims(sp, k=True)
    sp.add_argument("--input")
    sp.add_argument("--restarts", type=int, default=10)
    sp.add_argument("--seed", type=int, default=seed)
    sp.add_argument("--s2-table", type=int, metavar="N")
    sp.set_defaults(func=cmd_minrank)

    sp = sub.add_parser("canonical", help="canonical form of a pair of matrices")
    sp.add_argument("--input")
    sp.set_defaults(func=cmd_canonical)

    sp = sub.add_parser("classify2x2", help="three-way classification of a 2x2 pair")
    sp.add_argument("--input")
    sp.set_defaults(func=cmd_classify2x2)

    sp = sub.add_parser("montecarlo", help="Monte Carlo experiments")
    sp.add_argument("experiment", choices=["eig2x2", "threshold"])
    dims(sp, n=True)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=seed)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--tol", type=float)
    sp.set_defaults(func=cmd_montecarlo)

    sp = sub.add_parser("sample", help="write a random or canonical sample file")
    dims(sp, n=True)
    sp.add_argument("--seed", type=int, default=seed)
    sp.add_argument("--canonical", action="store_true")
    sp.add_argument("--output", metavar="PATH")
    sp.set_defaults(func=cmd_sample)
    return p


def _fail(exc, err):
    err.write(dumps_json({"error": type(exc).__name__, "message": str(exc)}))
    return EXIT_INPUT


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "func", None) is None:
            raise InputError("a command is required")
        return args.func(args, out)
    except (InputError, KronMLEError, ValueError, OSError) as exc:
        return _fail(exc, err)


if __name__ == "__main__":
    sys.exit(main())
