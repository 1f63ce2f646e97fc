"""Command-line front end: ``weldfactor <fixture|factor|weld|riemann|verify|plot> ...``.

Exit status 0 on success, 1 on a numerical failure (a diagnostics file is
still written) and 2 on invalid input.  Errors print one line
``error=<CODE> message=<text>`` on stderr.
"""
from __future__ import annotations

import argparse
import contextlib
import datetime
import os
import sys
import time

import numpy as np

from . import __version__
from . import schema as js
from .curves import uniform_nodes
from .errors import DomainInvalid, SchemaError, WeldFactorError

EXIT_OK, EXIT_NUMERICAL, EXIT_INPUT = 0, 1, 2
DEFAULT_ORDER = 64
DEFAULT_TOL = 1e-8


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SchemaError(f"bad arguments: {message}")


def _peel_order(text: str | None):
    if text is None or text == "desc":
        return None
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise SchemaError(f"--peel-order must be 'desc' or a comma list of indices, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", help="output path")
    common.add_argument("--order", type=int, default=None, help=f"series truncation order (default {DEFAULT_ORDER})")
    common.add_argument("--tol", type=float, default=None, help=f"tolerance relative to curve diameter (default {DEFAULT_TOL})")
    common.add_argument("--deterministic", action="store_true", help="omit timestamps and timings")

    p = _Parser(prog="weldfactor", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fixture", parents=[common], help="emit a synthetic problem and its truth")
    f.add_argument("--n", type=int, default=2, help="number of holes")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--truth", help="truth output path (default: <output stem>.truth.json)")

    f = sub.add_parser("factor", parents=[common], help="factor a problem")
    f.add_argument("problem")
    f.add_argument("--peel-order", default=None, help="'desc' or comma-separated source indices")

    f = sub.add_parser("verify", parents=[common], help="compare a factorisation with a problem")
    f.add_argument("result")
    f.add_argument("problem")

    f = sub.add_parser("weld", parents=[common], help="solve a welding problem")
    f.add_argument("correspondence")
    f.add_argument("--svg", help="also draw the weld curve")

    f = sub.add_parser("riemann", parents=[common], help="Riemann map onto one side of a curve")
    f.add_argument("curve")
    f.add_argument("--side", choices=("interior", "exterior"), default="interior")

    f = sub.add_parser("plot", parents=[common], help="draw curves, domains and solutions as SVG")
    f.add_argument("input")
    return p


def _stamp(doc: dict, deterministic: bool) -> dict:
    if not deterministic:
        doc = dict(doc, created=datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"))
    return doc


def _emit(path: str | None, doc: dict, deterministic: bool) -> None:
    text = js.dumps(_stamp(doc, deterministic), deterministic=deterministic)
    if path is None:
        sys.stdout.write(text)
    else:
        js.write_atomic(path, text)


def _need_output(args) -> str:
    if not args.output:
        raise SchemaError(f"{args.command} needs -o <path>")
    return args.output


def _read_doc(path: str) -> tuple[str, dict]:
    doc = js.load(path)
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise SchemaError(f"{path}: not a versioned document")
    return js._check_doc(doc), doc


def _curve_or_domain(kind, doc):
    if kind == "curve":
        return js.dec_curve(js._req(doc, "curve"))
    if kind == "domain":
        return js.dec_domain(js._req(doc, "domain"))
    raise SchemaError(f"unsupported document kind '{kind}'")


# ---------------------------------------------------------------- commands

def cmd_fixture(args) -> str:
    from .fixtures import FixtureSpec, make_fixture
    out = _need_output(args)
    fix = make_fixture(FixtureSpec(n=args.n, seed=args.seed, order=args.order or DEFAULT_ORDER))
    truth = args.truth or (os.path.splitext(out)[0] + ".truth.json")
    _emit(out, js.enc_problem(fix.problem), args.deterministic)
    _emit(truth, js.enc_truth(fix), args.deterministic)
    return f"fixture N={fix.problem.n} seed={args.seed} samples={fix.problem.interior_samples.shape[0]}"


def cmd_factor(args) -> str:
    from .factorize import FactorizeOptions, factorize
    out = _need_output(args)
    _, doc = _read_doc(args.problem)
    problem = js.dec_problem(doc)
    opts = FactorizeOptions(order=args.order or DEFAULT_ORDER, tol=args.tol or DEFAULT_TOL,
                            peel_order=_peel_order(args.peel_order))
    t0 = time.perf_counter()
    res = factorize(problem, opts)
    _emit(out, js.enc_result(res), args.deterministic)
    weld = max(d["welding_residual"] for d in res.diagnostics)
    return (f"factor N={problem.n} factors={len(res.factors)} curve_counts={res.curve_counts} "
            f"max_welding_residual={weld:.3e} moebius_residual={res.moebius_residual:.3e} "
            f"seconds={time.perf_counter() - t0:.2f}")


def cmd_verify(args) -> str:
    from .factorize import verify_factorization
    _, rdoc = _read_doc(args.result)
    _, pdoc = _read_doc(args.problem)
    metrics = verify_factorization(js.dec_result(rdoc), js.dec_problem(pdoc))
    if args.output:
        _emit(args.output, js.enc_metrics(metrics), args.deterministic)
    return (f"verify factors={metrics['n_factors']} max_interior_error={metrics.get('max_interior_error', float('nan')):.3e} "
            f"max_boundary_defect={metrics['max_boundary_defect']:.3e} all_injective={metrics.get('all_injective')}")


def cmd_weld(args) -> str:
    from .plot import plot_items, svg_document
    from .welding import WeldingProblem, solve_welding
    out = _need_output(args)
    kind, doc = _read_doc(args.correspondence)
    if kind != "correspondence":
        raise SchemaError(f"weld needs a 'correspondence' document, got '{kind}'")
    phi = js.dec_corr(js._req(doc, "correspondence"))
    sol = solve_welding(WeldingProblem(phi, order=args.order))
    _emit(out, js.enc_welding(sol), args.deterministic)
    if args.svg:
        js.write_atomic(args.svg, svg_document(plot_items("welding", sol), "welding"))
    t = uniform_nodes(512)
    circ = float(np.abs(sol.weld_curve(t) - np.exp(1j * t)).max())
    return f"weld order={sol.f_int.order} residual={sol.residual:.3e} unit_circle_gap={circ:.3e}"


def cmd_riemann(args) -> str:
    from .riemann import riemann_exterior, riemann_interior
    out = _need_output(args)
    kind, doc = _read_doc(args.curve)
    curve = _curve_or_domain(kind, doc)
    if not hasattr(curve, "coeffs"):
        raise SchemaError("riemann needs a 'curve' document")
    if not curve.is_valid():
        raise DomainInvalid("curve is not a Jordan curve")
    tol = None if args.tol is None else args.tol * curve.diameter
    order = args.order or DEFAULT_ORDER
    if args.side == "interior":
        sol = riemann_interior(curve, order=order, tol=tol)
    else:
        sol = riemann_exterior(curve, order=order, tol=tol)
    _emit(out, js.enc_riemann(sol, args.side), args.deterministic)
    return f"riemann side={args.side} order={order} residual={sol.residual:.3e} iterations={sol.iterations}"


def cmd_plot(args) -> str:
    from .plot import plot_items, svg_document
    out = _need_output(args)
    kind, doc = _read_doc(args.input)
    decoders = {"problem": js.dec_problem, "welding": js.dec_welding, "factorization": js.dec_result}
    obj = decoders[kind](doc) if kind in decoders else _curve_or_domain(kind, doc)
    items = plot_items(kind, obj)
    js.write_atomic(out, svg_document(items, kind))
    return f"plot {kind} polylines={len(items)}"


COMMANDS = {"fixture": cmd_fixture, "factor": cmd_factor, "verify": cmd_verify,
            "weld": cmd_weld, "riemann": cmd_riemann, "plot": cmd_plot}


@contextlib.contextmanager
def _thread_cap(deterministic: bool):
    """Cap BLAS/OpenMP pools at ``WELDFACTOR_THREADS``; deterministic runs use one thread.

    Multithreaded BLAS reductions change summation order with the thread
    count, so bit-identical output across caps needs a fixed count.
    """
    from threadpoolctl import threadpool_limits
    cap = os.environ.get("WELDFACTOR_THREADS")
    if deterministic:
        limit = 1
    elif cap:
        try:
            limit = max(1, int(cap))
        except ValueError as exc:
            raise SchemaError(f"WELDFACTOR_THREADS must be an integer, got {cap!r}") from exc
    else:
        limit = None
    with threadpool_limits(limits=limit):
        yield


def _diagnostics_path(args) -> str | None:
    out = getattr(args, "output", None)
    return None if not out else os.path.splitext(out)[0] + ".diagnostics.json"


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = None
    try:
        args = build_parser().parse_args(argv)
        with _thread_cap(args.deterministic):
            summary = COMMANDS[args.command](args)
        print(summary)
        return EXIT_OK
    except WeldFactorError as exc:
        print(f"error={exc.code} message={str(exc).splitlines()[0] if str(exc) else ''}", file=sys.stderr)
        if not exc.numerical:
            return EXIT_INPUT
        path = _diagnostics_path(args) if args is not None else None
        if path:
            doc = {"schema_version": js.SCHEMA_VERSION, "kind": "diagnostics", "status": "failed",
                   "error": exc.code, "message": str(exc),
                   "stage": getattr(exc, "stage", None),
                   "diagnostics": getattr(exc, "diagnostics", {}) or {}}
            _emit(path, doc, args.deterministic)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
