"""Command line interface: dyadic-factor <subcommand> ...

Exit codes: 0 pass, 2 verification failure, 1 usage or input error.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import io as jio
from .combinatorics import Coloring, ramsey_extract
from .dyadic import rectangles_upto
from .errors import DyadicFactorError, MalformedInput, OverrideExceedsCap
from .factor import color_by_diagonal, factor_identity, hardware_caps
from .haar import (
    HaarOperator,
    bmo_norm_exact,
    bmo_norm_lower,
    h1_norm,
    haar_multiplier,
    identity,
    op_norm_lower,
    random_contraction,
    zero,
)
from .blocks import BlockBasis
from .quasidiag import (
    BEST_EFFORT,
    STRICT,
    quasi_diagonalize,
    verify_almost_diagonal,
    verify_block_system,
)

log = logging.getLogger("dyadic_factor")

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(args, data) -> None:
    text = jio.dumps(data, args.json_indent if args.json_indent > 0 else None)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _need(args, name):
    val = getattr(args, name)
    if val is None:
        raise UsageError(f"--{name.replace('_', '-')} is required")
    return val


def _parse_eps(text: str | None):
    """'default', 'constant:x' or 'list:a,b,...'."""
    if text is None or text == "default":
        return None
    kind, _, rest = text.partition(":")
    try:
        if kind == "constant":
            return float(rest)
        if kind == "list":
            return [float(v) for v in rest.split(",") if v]
    except ValueError:
        pass
    raise UsageError(f"bad --eps-schedule {text!r}")


# -- subcommands --------------------------------------------------------------

def cmd_gen_operator(args) -> int:
    depth = _need(args, "depth")
    rng = np.random.default_rng(args.seed)
    if args.kind == "identity":
        T = identity(depth)
    elif args.kind == "zero":
        T = zero(depth)
    elif args.kind == "multiplier":
        diag = rng.integers(0, 2, len(rectangles_upto(depth))).astype(float)
        T = haar_multiplier(depth, diag)
        T.metadata.update({"kind": "multiplier", "seed": args.seed, "values": "{0,1}"})
    else:
        T = random_contraction(depth, args.seed,
                               nnz_per_col=None if args.dense else args.nnz_per_col)
    _emit(args, jio.operator_to_json(T))
    return EXIT_OK


def _load_operator(path) -> HaarOperator:
    return jio.operator_from_json(jio.read_json(path))


def cmd_norms(args) -> int:
    data = jio.read_json(_need(args, "input"))
    if data and isinstance(data, dict) and data.get("entries") and "row" in data["entries"][0]:
        T = jio.operator_from_json(data)
        out = {"kind": "operator",
               "H1": op_norm_lower(T, "H1", args.budget, args.seed).to_json(),
               "BMO": op_norm_lower(T, "BMO", args.budget, args.seed).to_json()}
    else:
        f = jio.vector_from_json(data)
        out = {"kind": "vector", "h1": h1_norm(f)}
        try:
            out["bmo"] = bmo_norm_exact(f, witness=True).to_json()
        except DyadicFactorError as exc:
            out["bmo_exact_error"] = str(exc)
            out["bmo"] = bmo_norm_lower(f, args.budget or 64, args.seed).to_json()
    _emit(args, out)
    return EXIT_OK


def cmd_ramsey(args) -> int:
    if args.input:
        coloring = jio.coloring_from_json(jio.read_json(args.input), args.depth)
    elif args.threshold_op:
        T = _load_operator(args.threshold_op)
        coloring = color_by_diagonal(T, BlockBasis.canonical(T.depth))
    else:
        coloring = Coloring.random(_need(args, "depth"), args.seed, args.p)
    res = ramsey_extract(coloring, args.n0)
    out = res.to_json()
    out["census"] = coloring.census()
    _emit(args, out)
    return EXIT_OK


def cmd_quasidiag(args) -> int:
    T = _load_operator(_need(args, "input"))
    sysb = quasi_diagonalize(T, args.n, _parse_eps(args.eps_schedule), args.mode)
    report = verify_almost_diagonal(T, sysb)
    report.pop("matrix")
    stage = {"stages": [s.to_json() for s in sysb.stages], "almost_diagonal": report,
             "metadata": sysb.metadata}
    if args.stage_report:
        jio.write_json(args.stage_report, stage, args.json_indent)
    _emit(args, jio.system_to_json(sysb))
    return EXIT_OK


def cmd_factor(args) -> int:
    T = _load_operator(_need(args, "input"))
    res = factor_identity(T, args.n, args.n1_work, _parse_eps(args.eps_schedule),
                          args.mode, args.n0, seed=args.seed)
    _emit(args, res.report.to_json(timestamp=not args.no_timestamp))
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(res.report.diagonal_csv())
    return EXIT_OK if res.report.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    sysb = jio.system_from_json(jio.read_json(_need(args, "system")))
    T = _load_operator(args.op) if args.op else None
    out = {"structure": verify_block_system(sysb, T)}
    ok = out["structure"]["ok"]
    if T is not None:
        ad = verify_almost_diagonal(T, sysb)
        ad.pop("matrix")
        out["almost_diagonal"] = ad
        ok = ok and ad["all_pass"]
    out["ok"] = bool(ok)
    _emit(args, out)
    return EXIT_OK if ok else EXIT_FAIL


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input JSON file")
    common.add_argument("--output", help="output JSON file (default stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--depth", type=int)
    common.add_argument("--mode", choices=[BEST_EFFORT, STRICT], default=BEST_EFFORT)
    common.add_argument("--json-indent", type=int, default=2)
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="dyadic-factor", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-operator", parents=[common], help="write a generated operator")
    g.add_argument("--kind", choices=["identity", "zero", "multiplier", "random"],
                   default="identity")
    g.add_argument("--nnz-per-col", type=float, default=4.0)
    g.add_argument("--dense", action="store_true", help="dense random contraction")
    g.set_defaults(func=cmd_gen_operator)

    nm = sub.add_parser("norms", parents=[common], help="norms of a vector or operator")
    nm.add_argument("--budget", type=int)
    nm.set_defaults(func=cmd_norms)

    r = sub.add_parser("ramsey", parents=[common], help="monochromatic product extraction")
    r.add_argument("--n0", type=int, default=1)
    r.add_argument("--p", type=float, default=0.5, help="density of the random coloring")
    r.add_argument("--threshold-op", help="color by |<T h, h>| >= |R|/2 for this operator")
    r.set_defaults(func=cmd_ramsey)

    for name, func, helptext in (("quasidiag", cmd_quasidiag, "almost-diagonalize an operator"),
                                 ("factor", cmd_factor, "factor the identity through T or Id-T")):
        q = sub.add_parser(name, parents=[common], help=helptext)
        q.add_argument("--n", type=int, default=1)
        q.add_argument("--eps-schedule", default="default",
                       help="'default', 'constant:x' or 'list:a,b,...'")
        q.set_defaults(func=func)
    q = sub.choices["quasidiag"]
    q.add_argument("--stage-report", help="write per-stage diagnostics here")
    f = sub.choices["factor"]
    f.add_argument("--n1-work", type=int)
    f.add_argument("--n0", type=int)
    f.add_argument("--csv", help="write the <Hb, b> table as CSV")
    f.add_argument("--no-timestamp", action="store_true")

    v = sub.add_parser("verify", parents=[common], help="re-check a block system")
    v.add_argument("--system", required=True)
    v.add_argument("--op")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.info("caps %s", hardware_caps())
    try:
        return args.func(args)
    except (UsageError, MalformedInput, OverrideExceedsCap, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        diag = getattr(exc, "diagnostics", None)
        if diag:
            print(jio.dumps(diag, None), file=sys.stderr)
        return EXIT_USAGE
    except DyadicFactorError as exc:
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        print(jio.dumps(exc.diagnostics, None), file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
