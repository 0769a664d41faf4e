"""Command-line front end: ``lrroc fit | gof | ci | simulate``.

Results go to stdout as JSON documents tagged ``"schema": "lrroc/1"``
(``simulate`` also speaks CSV). Diagnostics and warnings go to stderr.
Exit codes: 0 success, 2 input error, 3 estimation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import secrets
import sys
import warnings
from typing import Optional, Sequence

import numpy as np

from .bp_estimator import fit_bp, gof_bootstrap, summarize
from .data_model import MODES, TwoSampleData
from .errors import InvalidData, LrrocError
from .eval_sim import ALL_METHODS, CATALOG, TARGETS, Scenario, bootstrap_ci, estimate, get_scenario, run_scenario

SCHEMA = "lrroc/1"
EXIT_OK, EXIT_INPUT, EXIT_ESTIMATION = 0, 2, 3


class InputError(Exception):
    """Malformed command-line input; mapped to exit code 2."""


# -- input -----------------------------------------------------------------


def read_records(text: str):
    """Parse ``value,group`` CSV text into ``(values, groups)`` lists."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("empty input") from None
    if [h.strip().lower() for h in header] != ["value", "group"]:
        raise InputError(f"expected header 'value,group', got {','.join(header)!r}")
    values, groups = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise InputError(f"line {lineno}: expected 2 fields, got {len(row)}")
        try:
            v = float(row[0])
        except ValueError:
            raise InputError(f"line {lineno}: bad value {row[0]!r}") from None
        if not math.isfinite(v):
            raise InputError(f"line {lineno}: value must be finite")
        g = row[1].strip()
        if g not in ("0", "1"):
            raise InputError(f"line {lineno}: group must be 0 or 1, got {row[1]!r}")
        values.append(v)
        groups.append(int(g))
    return values, groups


def write_records(values: Sequence[float], groups: Sequence[int]) -> str:
    """Inverse of :func:`read_records`; ``repr`` keeps every float exact."""
    lines = ["value,group"]
    lines += [f"{float(v)!r},{int(g)}" for v, g in zip(values, groups)]
    return "\n".join(lines) + "\n"


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _read_column(path: str) -> list:
    out = []
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            v = float(line)
        except ValueError:
            raise InputError(f"{path}:{lineno}: bad value {line!r}") from None
        if not math.isfinite(v):
            raise InputError(f"{path}:{lineno}: value must be finite")
        out.append(v)
    return out


def load_data(args) -> TwoSampleData:
    if args.input and (args.healthy or args.diseased):
        raise InputError("use either --input or --healthy/--diseased, not both")
    if args.input:
        values, groups = read_records(_read_text(args.input))
        data_args = TwoSampleData.from_records, (values, groups)
    elif args.healthy and args.diseased:
        data_args = TwoSampleData, (_read_column(args.healthy), _read_column(args.diseased))
    else:
        raise InputError("no data: give --input, or both --healthy and --diseased")
    ctor, ctor_args = data_args
    try:
        return ctor(*ctor_args)
    except InvalidData as exc:
        raise InputError(str(exc)) from None


# -- output ----------------------------------------------------------------


def _clean(obj, digits: Optional[int]):
    """Recursively convert to JSON-ready values, rounding floats if asked."""
    if isinstance(obj, dict):
        return {str(k): _clean(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v, digits) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{digits}g}") if digits else x
    return obj


def _digits(args) -> Optional[int]:
    return None if args.precision == "full" else int(args.precision)


def emit_json(doc: dict, args) -> None:
    sys.stdout.write(json.dumps(_clean(doc, _digits(args)), indent=2) + "\n")


def _resolve_seed(args) -> int:
    if args.seed is None:
        seed = secrets.randbelow(2**32)
        print(f"lrroc: no --seed given; using --seed {seed}", file=sys.stderr)
        return seed
    return args.seed


def _roc_points(roc, grid: int) -> list:
    s = np.linspace(0.0, 1.0, grid)
    return [[float(a), float(b)] for a, b in zip(s, np.asarray(roc(s), dtype=float))]


def _summary_doc(summ, data: TwoSampleData, args, command: str) -> dict:
    doc = {
        "schema": SCHEMA,
        "command": command,
        "method": summ.method,
        "n0": data.n0,
        "n1": data.n1,
        "order": summ.order,
        "mode": summ.mode,
        "auc": summ.auc,
        "youden": summ.youden,
        "cutoff": summ.cutoff,
        "cutoff_method": summ.cutoff_method,
        "roc_points": _roc_points(summ.roc, args.roc_grid),
    }
    if args.vertices and summ.vertices is not None:
        doc["vertices"] = np.asarray(summ.vertices).tolist()
    diag = dict(summ.diagnostics)
    if "bic" in diag:
        diag["bic"] = [{"order": k, "bic": v} for k, v in diag["bic"].items()]
    doc["diagnostics"] = diag
    return doc


def _bp_options(args) -> dict:
    order = args.order
    if order != "auto":
        try:
            order = int(order)
        except ValueError:
            raise InputError(f"--order must be 'auto' or an integer, got {order!r}") from None
        if order < 1:
            raise InputError("--order must be >= 1")
    return {"order": order, "mode": args.basis}


# -- commands ----------------------------------------------------------------


def cmd_fit(args) -> int:
    data = load_data(args)
    opts = _bp_options(args)
    summ = estimate(data, args.method, **(opts if args.method == "bp" else {}))
    emit_json(_summary_doc(summ, data, args, "fit"), args)
    return EXIT_OK


def cmd_gof(args) -> int:
    if args.bootstrap < 1:
        raise InputError("--bootstrap must be >= 1")
    data = load_data(args)
    seed = _resolve_seed(args)
    fit = fit_bp(data, **_bp_options(args))
    res = gof_bootstrap(data, B=args.bootstrap, seed=seed, fit=fit)
    doc = _summary_doc(summarize(fit), data, args, "gof")
    doc["gof"] = {
        "delta": res.delta,
        "p_value": res.p_value,
        "bootstrap": res.bootstrap_reps,
        "failures": res.failures,
        "order": res.order,
        "seed": seed,
    }
    emit_json(doc, args)
    return EXIT_OK


def cmd_ci(args) -> int:
    stats = [s.strip() for s in args.stats.split(",") if s.strip()]
    bad = [s for s in stats if s not in TARGETS]
    if bad or not stats:
        raise InputError(f"--stats must be drawn from {','.join(TARGETS)}")
    if not 0 < args.level < 1:
        raise InputError("--level must lie in (0, 1)")
    if args.bootstrap < 2 / (1 - args.level):
        raise InputError(f"--bootstrap must be >= {math.ceil(2 / (1 - args.level))} at this level")
    data = load_data(args)
    seed = _resolve_seed(args)
    opts = _bp_options(args)
    summ = estimate(data, args.method, **(opts if args.method == "bp" else {}))
    cis = bootstrap_ci(
        data, stats, args.method, args.bootstrap, args.level, seed, bp_options=opts
    )
    doc = _summary_doc(summ, data, args, "ci")
    doc["ci"] = {
        "level": args.level,
        "bootstrap": args.bootstrap,
        "seed": seed,
        "failures": next(iter(cis.values())).failures,
        "statistics": {
            s: {"point": c.point, "lower": c.lower, "upper": c.upper} for s, c in cis.items()
        },
    }
    emit_json(doc, args)
    return EXIT_OK


def _parse_params(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise InputError(f"bad parameter list {text!r}") from None


def _scenario(args) -> Scenario:
    if args.scenario:
        if args.family:
            raise InputError("use either --scenario or --family/--params0/--params1")
        if args.scenario not in CATALOG:
            raise InputError(f"unknown scenario {args.scenario!r}; known: {', '.join(CATALOG)}")
        return get_scenario(args.scenario, args.n0, args.n1)
    if not (args.family and args.params0 and args.params1):
        raise InputError("give --scenario, or --family with --params0 and --params1")
    try:
        return Scenario(
            args.family, _parse_params(args.params0), _parse_params(args.params1),
            args.n0, args.n1, name="custom",
        )
    except (ValueError, IndexError) as exc:
        raise InputError(str(exc)) from None


def cmd_simulate(args) -> int:
    scenario = _scenario(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in ALL_METHODS]
    if bad or not methods:
        raise InputError(f"--methods must be drawn from {','.join(ALL_METHODS)}")
    if args.reps < 1:
        raise InputError("--reps must be >= 1")
    seed = _resolve_seed(args)
    reports = run_scenario(scenario, methods, args.reps, seed, bp_options=_bp_options(args))
    rows = [r.row() for r in reports]
    digits = _digits(args)
    if args.format == "csv":
        out = io.StringIO()
        writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            cleaned = _clean(row, digits)
            writer.writerow({k: ("nan" if v is None else v) for k, v in cleaned.items()})
        sys.stdout.write(out.getvalue())
    else:
        for row, rep in zip(rows, reports):
            row["order_counts"] = rep.order_counts
        emit_json({"schema": SCHEMA, "command": "simulate", "rows": rows}, args)
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------


def _add_data_args(p):
    p.add_argument("--input", help="CSV with header 'value,group' (0 healthy, 1 diseased)")
    p.add_argument("--healthy", help="file with one healthy value per line")
    p.add_argument("--diseased", help="file with one diseased value per line")


def _add_bp_args(p):
    p.add_argument("--order", default="auto", help="Bernstein order N, or 'auto' for BIC")
    p.add_argument("--basis", choices=MODES, default=None,
                   help="basis mode; default dual when all values are positive")


def _add_output_args(p, roc=True):
    p.add_argument("--precision", default="6",
                   help="significant digits for numbers, or 'full' (default 6)")
    if roc:
        p.add_argument("--roc-grid", type=int, default=101, help="ROC sample points (default 101)")
        p.add_argument("--vertices", action="store_true", help="include staircase vertices")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lrroc",
        description="ROC estimation under likelihood ratio ordering.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="estimate cdfs, ROC, AUC, Youden index and cutoff")
    _add_data_args(p)
    p.add_argument("--method", choices=ALL_METHODS, default="bp")
    _add_bp_args(p)
    _add_output_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("gof", help="bootstrap goodness-of-fit test of the ordering model")
    _add_data_args(p)
    _add_bp_args(p)
    p.add_argument("--bootstrap", type=int, default=1000, help="bootstrap replicates (default 1000)")
    p.add_argument("--seed", type=int, default=None)
    _add_output_args(p)
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("ci", help="bootstrap percentile confidence intervals")
    _add_data_args(p)
    p.add_argument("--method", choices=ALL_METHODS, default="bp")
    _add_bp_args(p)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--stats", default=",".join(TARGETS), help="comma list of auc,youden,cutoff")
    p.add_argument("--seed", type=int, default=None)
    _add_output_args(p)
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("simulate", help="Monte-Carlo comparison of estimators")
    p.add_argument("--scenario", help=f"built-in design: {', '.join(CATALOG)}")
    p.add_argument("--family", choices=("normal", "gamma", "beta"))
    p.add_argument("--params0", help="healthy parameters, e.g. '10,1' (normal mean,variance)")
    p.add_argument("--params1", help="diseased parameters")
    p.add_argument("--n0", type=int, default=100)
    p.add_argument("--n1", type=int, default=100)
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--methods", default=",".join(ALL_METHODS))
    _add_bp_args(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _add_output_args(p, roc=False)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        if args.precision != "full" and not (args.precision.isdigit() and int(args.precision) > 0):
            raise InputError("--precision must be a positive integer or 'full'")
        if getattr(args, "roc_grid", 2) < 2:
            raise InputError("--roc-grid must be >= 2")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            code = args.func(args)
        seen = set()
        for w in caught:
            msg = str(w.message)
            if issubclass(w.category, UserWarning) and msg not in seen:
                seen.add(msg)
                print(f"lrroc: warning: {msg}", file=sys.stderr)
        return code
    except InputError as exc:
        print(f"lrroc: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (LrrocError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"lrroc: estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
