"""Command-line entry point: one JSON document on stdout per invocation.

Exit codes: 0 success, 1 a mathematical property failed, 2 bad usage or
malformed input, 3 budget exhausted before the work finished.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import classify as classify_mod
from . import lemma_lab
from .field import parse_field
from .maps import StandardMapSpec, TabulatedMap, check_preserver, make_degenerate_vec, random_standard_spec, tabulate
from .matrix import Matrix, adjacency_chain, distance

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class InputError(Exception):
    """Malformed input; reported with exit code 2."""


def _emit(doc: dict, out=None):
    out = out or sys.stdout
    out.write(json.dumps(doc, sort_keys=True) + "\n")


def _read_text(source: str) -> tuple[str, str]:
    if source == "-":
        return sys.stdin.read(), "<stdin>"
    try:
        with open(source) as fh:
            return fh.read(), source
    except OSError as exc:
        raise InputError(f"{source}: cannot read: {exc.strerror}") from exc


def _load_json(text: str, where: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{where}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _decode(where: str, fn, obj):
    try:
        return fn(obj)
    except KeyError as exc:
        raise InputError(f"{where}: missing key {exc.args[0]!r}") from exc
    except (ValueError, TypeError, IndexError) as exc:
        raise InputError(f"{where}: {exc}") from exc


def _field(args):
    try:
        return parse_field(args.field or "2,1")
    except ValueError as exc:
        raise InputError(f"--field {args.field!r}: {exc}") from exc


def _shape(text: str, flag: str) -> tuple[int, int]:
    try:
        m, n = (int(s) for s in text.split(","))
    except ValueError as exc:
        raise InputError(f"{flag} {text!r}: expected two integers 'm,n'") from exc
    if m < 1 or n < 1:
        raise InputError(f"{flag} {text!r}: dimensions must be positive")
    return m, n


def _matrix(F, text: str, flag: str) -> Matrix:
    obj = _load_json(text, flag)
    return _decode(flag, lambda o: Matrix.from_json(F, o), obj)


def _load_table(source: str) -> TabulatedMap:
    text, where = _read_text(source)
    return _decode(where, TabulatedMap.from_json, _load_json(text, where))


def _load_spec(source: str) -> StandardMapSpec:
    text, where = _read_text(source)
    return _decode(where, StandardMapSpec.from_json, _load_json(text, where))


# ---------------------------------------------------------------------------
# commands; each returns (document, exit code)


def cmd_rank(args):
    A = _matrix(_field(args), args.matrix, "--matrix")
    return {"rank": A.rank()}, EXIT_OK


def cmd_distance(args):
    F = _field(args)
    A, B = _matrix(F, args.a, "--a"), _matrix(F, args.b, "--b")
    if A.shape != B.shape:
        raise InputError(f"--a has shape {A.shape} but --b has shape {B.shape}")
    d = distance(A, B)
    return {"distance": d, "adjacent": d == 1}, EXIT_OK


def cmd_chain(args):
    F = _field(args)
    A, B = _matrix(F, args.a, "--a"), _matrix(F, args.b, "--b")
    if A.shape != B.shape:
        raise InputError(f"--a has shape {A.shape} but --b has shape {B.shape}")
    chain = adjacency_chain(A, B)
    return {"chain": [M.to_json() for M in chain], "length": len(chain)}, EXIT_OK


def cmd_gen_standard(args):
    F = _field(args)
    domain = _shape(args.domain, "--domain")
    codomain = _shape(args.codomain, "--codomain") if args.codomain else domain
    rng = np.random.default_rng(args.seed)
    try:
        spec = random_standard_spec(F, domain, codomain, rng, transposed=args.transposed, translate=not args.no_translate)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return spec.to_json(), EXIT_OK


def cmd_gen_degenerate(args):
    F = _field(args)
    m, n = _shape(args.domain, "--domain")
    if F.order ** (m * n) > 1 << 16:
        raise InputError("domain too large to tabulate")
    return make_degenerate_vec(m, n, F, args.q_target).to_json(), EXIT_OK


def cmd_tabulate(args):
    spec = _load_spec(args.spec)
    m, n = spec.domain
    if spec.field.order ** (m * n) > 1 << 16:
        raise InputError("domain too large to tabulate")
    return tabulate(spec).to_json(), EXIT_OK


def cmd_check(args):
    report = check_preserver(_load_table(args.map))
    return report.to_json(), EXIT_OK if report.preserves_adjacency else EXIT_VIOLATION


def cmd_classify(args):
    phi = _load_table(args.map)
    try:
        result = classify_mod.classify(phi)
    except classify_mod.NotAPreserver as exc:
        raise InputError(f"{args.map}: not an adjacency preserver: {exc}") from exc
    except classify_mod.RecoveryFailed as exc:
        return {"verdict": "neither", "reason": str(exc), "error": type(exc).__name__}, EXIT_VIOLATION
    return result.to_json(), EXIT_OK


def cmd_lemmas(args):
    F = _field(args)
    if args.all:
        ids = list(lemma_lab.LEMMA_IDS)
    elif args.id:
        ids = args.id
    else:
        raise InputError("lemmas: give --id ID (repeatable) or --all")
    reports = []
    for lid in ids:
        if lid not in lemma_lab.LEMMA_IDS + lemma_lab.EXTRA_IDS:
            raise InputError(f"--id {lid!r}: unknown; choose from {', '.join(lemma_lab.LEMMA_IDS + lemma_lab.EXTRA_IDS)}")
        # without --field the eas sweep covers its own extension fields
        grid = lemma_lab.default_grid(lid, None if lid == "eas" and args.field is None else [F])
        reports.append(lemma_lab.verify_lemma(lid, grid, budget=args.max_instances, jobs=args.jobs))
    doc = {
        "reports": [r.to_json(timing=args.timing) for r in reports],
        "violations": sum(len(r.violations) for r in reports),
        "complete": all(r.complete for r in reports),
    }
    if doc["violations"]:
        return doc, EXIT_VIOLATION
    return doc, EXIT_OK if doc["complete"] else EXIT_BUDGET


def cmd_enumerate(args):
    if args.resume:
        try:
            task, summary = lemma_lab.load_checkpoint(args.resume)
        except OSError as exc:
            raise InputError(f"{args.resume}: cannot read: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.resume}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(f"{args.resume}: {exc}") from exc
    else:
        F = _field(args)
        try:
            task = lemma_lab.EnumerationTask(
                F,
                _shape(args.domain, "--domain"),
                _shape(args.codomain, "--codomain") if args.codomain else _shape(args.domain, "--domain"),
                fix_zero=not args.free_zero,
            )
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        summary = None
    checkpoint = args.checkpoint or args.resume
    outcome = lemma_lab.classify_stream(
        task,
        summary=summary,
        max_nodes=args.max_nodes,
        budget_seconds=args.budget,
        jobs=args.jobs,
        checkpoint_path=checkpoint,
    )
    doc = outcome.checkpoint()
    doc["finished"] = outcome.task.finished
    if outcome.counterexample is not None:
        doc["counterexample"] = outcome.counterexample
        return doc, EXIT_VIOLATION
    return doc, EXIT_OK if outcome.task.finished else EXIT_BUDGET


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--field", default=None, help="p,k[,c0,...,ck] (default 2,1)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--budget", type=float, default=None, help="wall-clock cap in seconds")
    common.add_argument("--timing", action="store_true", help="include wall-clock timings in the output")

    parser = argparse.ArgumentParser(prog="rankgeom", description="Adjacency geometry of matrix spaces over finite fields.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", parents=[common], help="rank of a matrix")
    p.add_argument("--matrix", required=True, help='inline matrix such as "[[1,1],[1,0]]"')
    p.set_defaults(func=cmd_rank)

    for name, func, text in (("distance", cmd_distance, "arithmetic distance rank(A - B)"), ("chain", cmd_chain, "adjacency chain from A to B")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--a", required=True)
        p.add_argument("--b", required=True)
        p.set_defaults(func=func)

    gen = sub.add_parser("gen", help="generate a spec or table").add_subparsers(dest="kind", required=True)
    p = gen.add_parser("standard", parents=[common], help="random standard map spec")
    p.add_argument("--domain", default="2,2")
    p.add_argument("--codomain", default=None)
    tr = p.add_mutually_exclusive_group()
    tr.add_argument("--transposed", dest="transposed", action="store_true", default=None)
    tr.add_argument("--not-transposed", dest="transposed", action="store_false")
    p.add_argument("--no-translate", action="store_true")
    p.set_defaults(func=cmd_gen_standard)
    p = gen.add_parser("degenerate", parents=[common], help="the vec map A -> (vec A) e_1 as a table")
    p.add_argument("--domain", default="2,2")
    p.add_argument("--q-target", type=int, default=1)
    p.set_defaults(func=cmd_gen_degenerate)

    p = sub.add_parser("tabulate", parents=[common], help="tabulate a standard map spec")
    p.add_argument("spec", help="spec file, or - for stdin")
    p.set_defaults(func=cmd_tabulate)

    for name, func, text in (("check", cmd_check, "adjacency preservation report"), ("classify", cmd_classify, "standard or degenerate")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--map", required=True, help="map table file, or - for stdin")
        p.set_defaults(func=func)

    p = sub.add_parser("lemmas", parents=[common], help="exhaustive lemma sweeps")
    p.add_argument("--id", action="append", help="lemma id (repeatable)")
    p.add_argument("--all", action="store_true")
    p.add_argument("--max-instances", type=int, default=lemma_lab.DEFAULT_BUDGET)
    p.set_defaults(func=cmd_lemmas)

    p = sub.add_parser("enumerate", parents=[common], help="enumerate and classify adjacency preservers")
    p.add_argument("--domain", default="2,2")
    p.add_argument("--codomain", default=None)
    p.add_argument("--free-zero", action="store_true", help="do not fix phi(0) = 0")
    p.add_argument("--checkpoint", default=None, help="checkpoint file to write")
    p.add_argument("--resume", default=None, help="checkpoint file to continue from (and update)")
    p.add_argument("--max-nodes", type=int, default=None)
    p.set_defaults(func=cmd_enumerate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    t0 = time.perf_counter()
    try:
        doc, code = args.func(args)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    if args.timing:
        doc["wall_time"] = round(time.perf_counter() - t0, 6)
    _emit(doc)
    return code


if __name__ == "__main__":
    sys.exit(main())
