"""Command-line entry point: ``cellbox <command> [flags]``.

Every command writes one report: a JSON envelope
``{"cmd", "config", "result", "warnings"}`` or, where a table is natural,
CSV.  Exit status is 0 on success, 2 when an input violates a precondition
or fails to parse, and 64 on a usage error such as an unknown flag.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from fractions import Fraction

from . import basis, cells, geometry, lattice, suites
from ._numbers import format_number, parse_number, parse_vector

EX_USAGE = 64
EX_PRECONDITION = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        # a malformed number is bad input, not bad usage
        raise SystemExit(EX_PRECONDITION if "invalid int value" in message else EX_USAGE)


def _fmt(x):
    if isinstance(x, (list, tuple)):
        return [_fmt(y) for y in x]
    if isinstance(x, dict):
        return {k: _fmt(y) for k, y in x.items()}
    if x is None or isinstance(x, str):
        return x
    if isinstance(x, bool):
        return x
    if isinstance(x, (int, Fraction, float)):
        return format_number(x)
    return format_number(float(x))


class Run:
    """Parsed inputs plus the warnings collected while reading them."""

    def __init__(self, args):
        self.args = args
        self.warnings: list[str] = []

    def _note_decimal(self, name, values):
        if any(isinstance(x, float) for x in values):
            self.warnings.append(f"decimal input in --{name} routed to the floating-point path")

    def vector(self, name="normal"):
        text = getattr(self.args, name)
        if text is None:
            raise UsageError(f"--{name} is required")
        values = parse_vector(text)
        self._note_decimal(name, values)
        return tuple(values)

    def number(self, name):
        text = getattr(self.args, name)
        if text is None:
            raise UsageError(f"--{name} is required")
        value = parse_number(text)
        self._note_decimal(name, [value])
        return value

    def integer(self, name, default=None):
        value = getattr(self.args, name)
        if value is None:
            if default is None:
                raise UsageError(f"--{name} is required")
            return default
        return int(value)

    def body(self, name="body"):
        text = getattr(self.args, name)
        if text is None:
            raise UsageError(f"--{name} is required")
        if text.startswith("@"):
            with open(text[1:]) as fh:
                text = fh.read()
        floats = []

        def keep_decimal(s):
            floats.append(s)
            return s

        data = json.loads(text, parse_float=keep_decimal)
        if floats:
            self.warnings.append(f"decimal literals in --{name} read as exact decimals")
        return cells.body_from_dict(data)

    def slabbox(self):
        v = self.vector()
        return cells.SlabBox(v, self.number("lo"), self.number("hi"), self.integer("n"))


# ---------------------------------------------------------------------------
# commands; each returns (result, csv rows or None)


def cmd_slice_vol(run):
    value = geometry.slice_volume(run.vector(), run.number("t"), run.integer("n", 1))
    return {"volume": value, "float": float(value)}


def cmd_strip_vol(run):
    slab = geometry.Slab(run.vector(), run.number("t"), run.number("width"))
    value = geometry.strip_volume(slab, run.integer("n", 1))
    return {"volume": value, "float": float(value)}


def cmd_vd(run):
    if run.args.normal is not None:
        v = run.vector()
    else:
        v = (1,) * run.integer("dim")
    value = geometry.vd_of_direction(v)
    return {"normal": list(v), "exact": value if isinstance(value, Fraction) else None,
            "float": float(value)}


def cmd_vd_max(run):
    res = geometry.vd_max(run.integer("dim"), starts=run.integer("samples", 32),
                          seed=run.integer("seed", 0))
    if not res.converged:
        run.warnings.append(res.message)
    return {"direction": list(res.direction), "value": res.value, "converged": res.converged,
            "evaluations": res.evaluations}


def cmd_levels(run):
    lc = lattice.level_counts(run.vector(), run.integer("n"))
    rows = [["h", "count"]] + [[lc.hmin + i, c] for i, c in enumerate(lc.counts)]
    return {"hmin": lc.hmin, "counts": list(lc.counts), "total": lc.total}, rows


def cmd_slabmax(run):
    res = lattice.strip_count_max(run.vector(), run.integer("n"))
    return {"count": res.count, "k": res.k, "levels": list(res.levels)}


def cmd_search(run):
    res = lattice.best_direction_search(run.integer("dim"), run.integer("n"), run.integer("zmax"),
                                        workers=run.args.workers)
    return {"direction": list(res.direction.z), "count": res.count, "candidates": res.candidates}


def cmd_nd_exact(run):
    n = run.integer("n")
    return {"n": n, "N": lattice.exact_nd_small(run.integer("dim", 2), n, run.args.zmax)}


def cmd_convergence(run):
    if not run.args.ns:
        raise UsageError("--ns is required")
    ns = [int(x) for x in run.args.ns.split(",")]
    table = lattice.convergence_table(run.vector(), ns)
    rows = [["n", "M", "ratio", "V", "gap"]]
    rows += [[r.n, r.M, float(r.ratio), float(r.V), float(r.gap)] for r in table]
    result = [{"n": r.n, "M": r.M, "ratio": r.ratio, "V": r.V, "gap": r.gap} for r in table]
    return result, rows


def cmd_cells_classify(run):
    K = run.body()
    if run.args.cell is None:
        raise UsageError("--cell is required")
    cell = [int(x) for x in run.args.cell.split(",")]
    if len(cell) != K.dim:
        raise ValueError("cell dimension does not match the body")
    return {"cell": cell, "class": cells.classify_cell(K, cell)}


def cmd_cells_count(run):
    return cells.cell_report(run.body())


def _suite_rows(results):
    rows = [["case_id", "ok", "details"]]
    rows += [[r.case_id, "true" if r.ok else "false", r.details] for r in results]
    summary = {"cases": len(results), "passed": sum(r.ok for r in results),
               "failed": [r.case_id for r in results if not r.ok]}
    return summary, rows


def cmd_check_elem(run):
    if run.args.body is not None:
        K = run.body()
        res = cells.check_volume_gap(K)
        return {"gap": res.gap, "boundary": res.boundary, "ok": res.ok}
    return _suite_rows(suites.elem_suite(run.integer("samples", 200), run.integer("seed", 0)))


def cmd_check_monotone(run):
    if run.args.body is not None:
        res = cells.check_boundary_monotonicity(run.body(), run.body("outer"), seed=run.integer("seed", 0))
        return {"bK": res.inner, "bL": res.outer, "ok": res.ok}
    return _suite_rows(suites.monotone_suite(run.integer("samples", 200), run.integer("seed", 0)))


def cmd_mainK(run):
    normal = run.vector() if run.args.normal is not None else (1, 1)
    res = cells.mainK_experiment(run.integer("n", 300), normal)
    return {"n": res.n, "count": res.count, "scaled": res.scaled, "V": res.v_body,
            "relative_error": res.relative_error, "t": res.t}


def cmd_basis_reduce(run):
    K = run.slabbox()
    return basis.well_position(K).to_dict(K)


def cmd_check_basic(run):
    K = run.slabbox()
    if run.args.basis:
        F = [[int(x) for x in row.split(",")] for row in run.args.basis.split(";")]
    else:
        F = basis.well_position(K).basis
    res = basis.check_basic_inequality(K, F)
    return {"status": res.status, "gap": res.gap, "bound": res.bound, "ratio": res.ratio,
            "lattice": res.lattice_points, "volK": res.volume, "gamma": list(res.gamma),
            "basis": F}


COMMANDS = {
    "slice-vol": (cmd_slice_vol, "volume of a hyperplane section of [0,n]^d"),
    "strip-vol": (cmd_strip_vol, "volume of a strip inside [0,n]^d"),
    "vd": (cmd_vd, "V_d(v), exact for rational v (default v = e)"),
    "vd-max": (cmd_vd_max, "multi-start maximization of V_d over unit directions"),
    "levels": (cmd_levels, "lattice level counts of {0..n-1}^d"),
    "slabmax": (cmd_slabmax, "best open slab with integer normal"),
    "search": (cmd_search, "best primitive normal with entries <= zmax"),
    "nd-exact": (cmd_nd_exact, "N^2(n) exactly"),
    "convergence": (cmd_convergence, "M_d(z,n)/n^(d-1) against V_d(z)"),
    "cells-classify": (cmd_cells_classify, "class of one unit cell"),
    "cells-count": (cmd_cells_count, "inside/boundary/lattice counts of a body"),
    "check-elem": (cmd_check_elem, "volume vs lattice count gap (one body or a random suite)"),
    "check-monotone": (cmd_check_monotone, "boundary-cell monotonicity (one pair or a random suite)"),
    "mainK-experiment": (cmd_mainK, "hyperplane through inside cells of a scaled disk"),
    "basis-reduce": (cmd_basis_reduce, "well-position a slab-in-box body"),
    "check-basic": (cmd_check_basic, "lattice count vs volume against the F-box bound"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cellbox", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--dim", type=int)
        p.add_argument("--n", type=int)
        p.add_argument("--normal", help="comma-separated integers, p/q rationals or decimals")
        p.add_argument("--t")
        p.add_argument("--width")
        p.add_argument("--lo")
        p.add_argument("--hi")
        p.add_argument("--zmax", type=int)
        p.add_argument("--ns", help="comma-separated box sizes")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--samples", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--body", help="JSON body description, or @file")
        p.add_argument("--outer", help="JSON body containing --body")
        p.add_argument("--cell", help="comma-separated integer corner")
        p.add_argument("--basis", help="rows separated by ';', entries by ','")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", help="output path (default stdout)")
    return parser


def _write(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
        return
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".cellbox-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _render(args, run, outcome) -> str:
    result, rows = outcome if isinstance(outcome, tuple) else (outcome, None)
    if args.format == "csv":
        if rows is None:
            raise ValueError(f"{args.cmd} has no CSV form; use --format json")
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(
            [[_fmt(c) if not isinstance(c, str) else c for c in row] for row in rows])
        return buf.getvalue()
    config = {k: v for k, v in sorted(vars(args).items()) if v is not None and k not in ("out", "cmd")}
    envelope = {"cmd": args.cmd, "config": config, "result": _fmt(result), "warnings": run.warnings}
    return json.dumps(envelope, indent=2, sort_keys=True) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    run = Run(args)
    handler = COMMANDS[args.cmd][0]
    try:
        text = _render(args, run, handler(run))
    except UsageError as exc:
        print(f"cellbox {args.cmd}: usage error: {exc}", file=sys.stderr)
        return EX_USAGE
    except (ValueError, TypeError, ZeroDivisionError, OSError) as exc:
        print(f"cellbox {args.cmd}: error: {exc}", file=sys.stderr)
        return EX_PRECONDITION
    _write(text, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
