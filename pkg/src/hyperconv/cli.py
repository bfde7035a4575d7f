"""Command-line front end.

Every subcommand writes one table (CSV or JSON) to stdout, or to
``<out>/<command>.<format>`` when ``--out`` is given.  CSV output starts with
``# key = value`` lines that echo the effective configuration.

Exit codes: 0 success, 1 parse or validation error, 2 numerical-regime
error, 3 verification failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .asymptotics import asymptotic_distances, classify, nu_infty, nu_measure
from .eigen import c_function, phi_lambda
from .errors import DomainError, HyperconvError, ModelFileError
from .expr import compile_expression
from .kernel import HyperbolicGrid, kernel_density, translate_function
from .model import load_model, validate_model
from .verify import TOLERANCES, Suite, _jsonable, report_json, run_suite

EXIT_OK, EXIT_INPUT, EXIT_REGIME, EXIT_VERIFY = 0, 1, 2, 3

DEFAULTS = {
    "x": 1.0,
    "y": 2.0,
    "lambda": "1",
    "h": 1e-3,
    "ymax": 80.0,
    "xmax": 10.0,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class Table:
    """A result: header rows (config echo), column names and rows, or a raw document."""

    config: dict
    columns: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    document: dict | None = None
    text: str | None = None

    def render(self, fmt: str) -> str:
        if fmt == "json":
            body = {"config": self.config}
            if self.document is not None:
                body.update(self.document)
            else:
                body["columns"] = self.columns
                body["rows"] = [[_num(v) for v in r] for r in self.rows]
            return json.dumps(body, indent=2, sort_keys=True) + "\n"
        buf = io.StringIO()
        for k, v in self.config.items():
            buf.write(f"# {k} = {v}\n")
        if self.text is not None:
            buf.write(self.text)
            return buf.getvalue()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows([_cell(v) for v in r] for r in self.rows)
        return buf.getvalue()


def _num(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _parse_lambdas(text: str) -> list[complex]:
    out = []
    for part in text.split(","):
        part = part.strip().replace("i", "j")
        try:
            out.append(complex(part))
        except ValueError:
            raise UsageError(f"cannot parse lambda value {part!r}") from None
    return out


def _parse_tol(items) -> dict:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--tol expects name=value, got {item!r}")
        if name not in TOLERANCES:
            raise UsageError(f"unknown tolerance {name!r}; known: {', '.join(TOLERANCES)}")
        try:
            out[name] = float(value)
        except ValueError:
            raise UsageError(f"bad tolerance value {value!r}") from None
    return out


def _workers() -> int:
    raw = os.environ.get("HYPERCONV_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _base_config(args) -> dict:
    cfg = {"command": args.command}
    if getattr(args, "model", None) is not None:
        cfg["model"] = args.model
    return cfg


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_model_validate(args) -> tuple[Table, int]:
    model = load_model(args.model)
    rep = validate_model(model)
    cfg = _base_config(args)
    d = rep.as_dict()
    rows = [[k, json.dumps(v) if isinstance(v, list) else v] for k, v in d.items()]
    return Table(cfg, ["key", "value"], rows, document={"validation": d}), EXIT_OK if rep.passed else EXIT_INPUT


def cmd_kernel(args):
    model = load_model(args.model)
    k = kernel_density(model, args.x, args.y, h=args.h, method=args.method)
    cfg = {**_base_config(args), "x": args.x, "y": args.y, "h": k.h, "method": k.method, "mass": f"{k.mass():.17g}"}
    return Table(cfg, ["t", "k"], [[t, v] for t, v in zip(k.grid, k.density)]), EXIT_OK


def cmd_translate(args):
    model = load_model(args.model)
    f = compile_expression(args.f)
    grid = HyperbolicGrid(x_max=args.xmax, h_x=args.h)
    T = translate_function(model, f, args.y, grid)
    cfg = {**_base_config(args), "f": args.f, "y": args.y, "h": args.h, "xmax": args.xmax}
    return Table(cfg, ["x", "Tf"], [[x, v] for x, v in zip(T.x, T.values)]), EXIT_OK


def cmd_eigen(args):
    model = load_model(args.model)
    lam = _parse_lambdas(args.lam)[0]
    sol = phi_lambda(model, lam, args.xmax, h=args.h)
    cfg = {**_base_config(args), "lambda": args.lam, "xmax": args.xmax, "h": args.h}
    rows = [[x, p.real, p.imag] for x, p in zip(sol.x, sol.phi)]
    return Table(cfg, ["x", "re_phi", "im_phi"], rows), EXIT_OK


def cmd_cfun(args):
    model = load_model(args.model)
    lams = _parse_lambdas(args.lam)
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        ests = list(pool.map(lambda lv: c_function(model, lv), lams))
    cfg = {**_base_config(args), "lambda": args.lam}
    rows = [[e.lam.real, e.lam.imag, e.c_plus.real, e.c_plus.imag, e.residual] for e in ests]
    return Table(cfg, ["re_lambda", "im_lambda", "re_c", "im_c", "residual"], rows), EXIT_OK


def _measure_table(cfg, mu):
    """CSV body is :meth:`GridMeasure.to_csv`, so the file reads back with ``from_csv``."""
    cfg = {**cfg, "mass": f"{mu.mass():.17g}"}
    doc = {"origin": mu.origin, "step": mu.step, "atoms": [list(a) for a in mu.atoms], "density": mu.density.tolist()}
    return Table(cfg, document={"measure": doc}, text=mu.to_csv())


def cmd_nu(args):
    model = load_model(args.model)
    mu = nu_measure(model, args.y, h=args.h, method=args.method)
    cfg = {**_base_config(args), "y": args.y, "h": args.h, "method": args.method}
    return _measure_table(cfg, mu), EXIT_OK


def cmd_nu_infty(args):
    model = load_model(args.model)
    y = args.y if args.route == "limit" else None
    mu = nu_infty(model, args.route, h=args.h, y=y)
    cfg = {**_base_config(args), "route": args.route, "h": args.h}
    if y is not None:
        cfg["y"] = y
    return _measure_table(cfg, mu), EXIT_OK


def _report_table(cfg, rep):
    return Table(cfg, document={"report": rep.as_dict()}, text=rep.to_text())


def cmd_distances(args):
    model = load_model(args.model)
    ys = [float(v) for v in args.yvalues.split(",")] if args.yvalues else _doubling(args.ymax)
    rep = asymptotic_distances(model, args.x, ys, h=args.h, kernel_check=args.kernel_check)
    cfg = {**_base_config(args), "x": args.x, "h": args.h, "y_values": ",".join(f"{v:g}" for v in ys)}
    return _report_table(cfg, rep), EXIT_OK


def _doubling(ymax: float) -> list:
    ys, y = [], ymax
    while y >= 1.0 and len(ys) < 4:
        ys.append(y)
        y /= 2
    return sorted(ys)


def cmd_classify(args):
    model = load_model(args.model)
    rep = classify(model, h=args.h)
    cfg = {**_base_config(args), "h": args.h, "verdict": rep.verdict}
    return _report_table(cfg, rep), EXIT_OK


def cmd_verify(args):
    tol = _parse_tol(args.tol)
    only = args.only.split(",") if args.only else None
    if only and set(only) - set(Suite.CHECKS):
        raise UsageError(f"unknown check id(s) {sorted(set(only) - set(Suite.CHECKS))}; known: {', '.join(Suite.CHECKS)}")
    results = run_suite(tol=tol, h_scale=args.h_scale, only=only)
    cfg = {"command": "verify", "h_scale": args.h_scale}
    cfg.update({f"tol.{k}": v for k, v in sorted(tol.items())})
    failed = [r for r in results if not r.passed]
    if args.format == "json":
        doc = {"results": json.loads(report_json(results)), "failures": [r.criterion for r in failed]}
        table = Table(cfg, document=doc)
    else:
        rows = [[r.criterion, _json_cell(r.measured), _json_cell(r.expected), _json_cell(r.tolerance), r.provenance, "pass" if r.passed else "FAIL"] for r in results]
        table = Table(cfg, ["criterion", "measured", "expected", "tolerance", "provenance", "pass"], rows)
    for r in results:
        print(r.line(), file=sys.stderr)
    return table, EXIT_VERIFY if failed else EXIT_OK


def _json_cell(v) -> str:
    return v if isinstance(v, str) else json.dumps(_jsonable(v))


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output directory (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    with_model = _Parser(add_help=False)
    with_model.add_argument("--model", default="naimark", help="alias (naimark, bessel-kingman:<a0>, jacobi:<a>,<b>, bounded-demo) or model file")

    p = _Parser(prog="hyperconv", description="Kernels, translations, eigenfunctions and asymptotic measures of hypergroups on [0, oo).")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    mp = sub.add_parser("model", parents=[common, with_model], help="model utilities")
    mp.add_argument("action", choices=("validate",))
    mp.set_defaults(func=cmd_model_validate)

    kp = sub.add_parser("kernel", parents=[common, with_model], help="density of delta_x * delta_y")
    kp.add_argument("--x", type=float, default=DEFAULTS["x"])
    kp.add_argument("--y", type=float, default=DEFAULTS["y"])
    kp.add_argument("--h", type=float, default=DEFAULTS["h"])
    kp.add_argument("--method", choices=("auto", "closed-form", "marched", "transmutation"), default="auto")
    kp.set_defaults(func=cmd_kernel)

    tp = sub.add_parser("translate", parents=[common, with_model], help="generalized translation T_y f")
    tp.add_argument("--f", default="exp(-x)", help="expression in x")
    tp.add_argument("--y", type=float, default=DEFAULTS["y"])
    tp.add_argument("--h", type=float, default=DEFAULTS["h"])
    tp.add_argument("--xmax", type=float, default=DEFAULTS["xmax"])
    tp.set_defaults(func=cmd_translate)

    ep = sub.add_parser("eigen", parents=[common, with_model], help="eigenfunction phi_lambda")
    ep.add_argument("--lambda", dest="lam", default=DEFAULTS["lambda"], help="real or complex, e.g. 1 or 2i")
    ep.add_argument("--xmax", type=float, default=DEFAULTS["xmax"])
    ep.add_argument("--h", type=float, default=1e-2)
    ep.set_defaults(func=cmd_eigen)

    cp = sub.add_parser("cfun", parents=[common, with_model], help="c-function table")
    cp.add_argument("--lambda", dest="lam", default="0.5,1,2", help="comma-separated values")
    cp.set_defaults(func=cmd_cfun)

    np_ = sub.add_parser("nu", parents=[common, with_model], help="asymptotic measure nu_y")
    np_.add_argument("--y", type=float, default=DEFAULTS["y"])
    np_.add_argument("--h", type=float, default=DEFAULTS["h"])
    np_.add_argument("--method", choices=("auto", "closed-form", "marched"), default="auto")
    np_.set_defaults(func=cmd_nu)

    ip = sub.add_parser("nu-infty", parents=[common, with_model], help="limit measure nu_infinity")
    ip.add_argument("--route", choices=("limit", "neumann", "both"), default="neumann")
    ip.add_argument("--y", type=float, default=8.0, help="y for the limit route")
    ip.add_argument("--h", type=float, default=DEFAULTS["h"])
    ip.set_defaults(func=cmd_nu_infty)

    dp = sub.add_parser("distances", parents=[common, with_model], help="regime distance curves")
    dp.add_argument("--x", type=float, default=DEFAULTS["x"])
    dp.add_argument("--ymax", type=float, default=DEFAULTS["ymax"], help="largest y; the curve halves down from it")
    dp.add_argument("--y", dest="yvalues", help="explicit comma-separated y values")
    dp.add_argument("--h", type=float, default=1e-2)
    dp.add_argument("--kernel-check", action="store_true", help="also compare shifted kernels with nu_x")
    dp.set_defaults(func=cmd_distances)

    clp = sub.add_parser("classify", parents=[common, with_model], help="growth-regime verdict")
    clp.add_argument("--h", type=float, default=1e-2)
    clp.set_defaults(func=cmd_classify)

    vp = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    vp.add_argument("--tol", action="append", metavar="NAME=VALUE", help="override a tolerance (repeatable)")
    vp.add_argument("--h-scale", type=float, default=1.0, help="multiply every grid step by this factor")
    vp.add_argument("--only", help="comma-separated check ids, e.g. c1,c7")
    vp.set_defaults(func=cmd_verify)
    return p


def _write(args, table: Table):
    text = table.render(args.format)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        name = args.command + (f"-{args.action}" if getattr(args, "action", None) else "")
        path = os.path.join(args.out, f"{name}.{args.format}")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"hyperconv: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        table, code = args.func(args)
    except (UsageError, ModelFileError, DomainError, KeyError) as exc:
        print(f"hyperconv: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except HyperconvError as exc:
        print(f"hyperconv: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_REGIME
    _write(args, table)
    return code


if __name__ == "__main__":
    sys.exit(main())
