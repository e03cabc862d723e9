"""Command-line front end: ``magspec {exact,solve,verify,sweep,selftest}``.

Exit codes: 0 when every requested check holds, 2 when any check fails,
1 on input errors (bad config, unsupported geometry, unmet preconditions).
"""

import argparse
import concurrent.futures as cf
import csv
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import replace
from importlib import resources

import numpy as np

from .bounds import PreconditionError, Quantities, UnsupportedGeometryError, gamma
from .config import ConfigDoc, ConfigError, load_config, parse_config_text
from .eigensolver import SolverError
from .mesh import MeshQualityError
from .reports import REPORT_FIELDS, fmt, reports_to_json
from .scenario import exact_scenario, parse_scenario, run_scenario, with_parameter

log = logging.getLogger("magspec")

EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2
INPUT_ERRORS = (ConfigError, UnsupportedGeometryError, PreconditionError, MeshQualityError, ValueError)


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def spectrum_csv(eigenvalues, residuals=None):
    rows = [("index", "eigenvalue", "residual")]
    for j, lam in enumerate(eigenvalues):
        r = residuals[j] if residuals is not None else 0.0
        rows.append((j + 1, float(lam), float(r)))
    return _csv(rows)


def summary_csv(named_reports):
    rows = [("scenario",) + REPORT_FIELDS]
    for scenario, reports in named_reports:
        for r in reports:
            d = r.to_dict()
            rows.append((scenario, d["name"], d["eq"], d["lhs"], d["rhs"], d["margin"], d["holds"], d["tol"],
                         json.dumps(d["inputs"], sort_keys=True)))
    return _csv(rows)


def _load(args):
    if args.config is None:
        raise ConfigError("--config is required")
    doc = load_config(args.config)
    return doc


def _scenarios(doc, args):
    if "scenarios" not in doc.data or not isinstance(doc.data["scenarios"], list) or not doc.data["scenarios"]:
        raise doc.error(("scenarios",), "expected a non-empty list 'scenarios'")
    overrides = {"k": args.k, "tol": args.tol, "seed": args.seed}
    out = [parse_scenario(doc, i, overrides) for i in range(len(doc.data["scenarios"]))]
    names = [s.name for s in out]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise doc.error(("scenarios",), f"duplicate scenario names: {', '.join(sorted(dup))}")
    return out


def _corrupt(reports):
    """Shift the first report's rhs far below its lhs (failure-path self test)."""
    if not reports:
        return reports
    r = reports[0]
    bad = replace(r, rhs=r.lhs - 1.0 - abs(r.lhs) - 100 * r.tol)
    bad.__post_init__()
    return [bad] + reports[1:]


def _map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with cf.ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def _emit(out_dir, named, spectra):
    for (name, reports), (eigs, res) in zip(named, spectra):
        _atomic_write(os.path.join(out_dir, f"{name}.spectrum.csv"), spectrum_csv(eigs, res))
        _atomic_write(os.path.join(out_dir, f"{name}.reports.json"), reports_to_json(reports))
    # summary last, single-threaded
    _atomic_write(os.path.join(out_dir, "summary.csv"), summary_csv(named))


def _status(named):
    failed = [(s, r.name) for s, reps in named for r in reps if not r.holds]
    for s, n in failed:
        log.warning("FAIL %s: %s", s, n)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_exact(args):
    scs = _scenarios(_load(args), args)
    named, spectra = [], []
    for sc in scs:
        eigs, reports, _ = exact_scenario(sc, args.k)
        if args.selftest_corrupt:
            reports = _corrupt(reports)
        named.append((sc.name, reports))
        spectra.append((eigs, None))
    _emit(args.out_dir, named, spectra)
    return _status(named)


def cmd_solve(args):
    scs = _scenarios(_load(args), args)
    results = _map(lambda sc: run_scenario(replace(sc, checks=[])), scs, args.jobs)
    _emit(args.out_dir, [(r.name, []) for r in results], [(r.eigenvalues, r.residuals) for r in results])
    bad = [r.name for r in results if not r.converged]
    if bad:
        log.warning("not converged: %s", ", ".join(bad))
        return EXIT_FAIL
    return EXIT_OK


def _verify(doc, args):
    scs = _scenarios(doc, args)
    results = _map(run_scenario, scs, args.jobs)
    named = [(r.name, r.reports) for r in results]
    if args.selftest_corrupt:
        named[0] = (named[0][0], _corrupt(named[0][1]))
    _emit(args.out_dir, named, [(r.eigenvalues, r.residuals) for r in results])
    for r in results:
        for rep in r.reports:
            log.info("%s %-26s lhs=%s rhs=%s margin=%s %s", r.name, rep.name, fmt(rep.lhs), fmt(rep.rhs),
                     fmt(rep.margin), "ok" if rep.holds else "FAIL")
    return _status(named)


def cmd_verify(args):
    return _verify(_load(args), args)


def cmd_selftest(args):
    if args.config is not None:
        doc = load_config(args.config)
    else:
        text = resources.files("magspec").joinpath("data/selftest.yaml").read_text(encoding="utf-8")
        doc = parse_config_text(text, "selftest.yaml")
    return _verify(doc, args)


def _sweep_values(doc, args):
    spec = doc.data.get("sweep", {}) or {}
    param = args.param or spec.get("param")
    if not param:
        raise doc.error(("sweep",), "sweep needs a parameter path (sweep.param or --param)")
    if args.values is not None:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    elif args.range is not None:
        start, stop, step = args.range
        values = _arange(start, stop, step)
    elif "values" in spec:
        values = [float(v) for v in spec["values"]]
    elif "range" in spec:
        rng = spec["range"]
        try:
            values = _arange(float(rng["start"]), float(rng["stop"]), float(rng["step"]))
        except (KeyError, TypeError) as exc:
            raise doc.error(("sweep", "range"), f"range needs start, stop and step ({exc})") from None
    else:
        raise doc.error(("sweep",), "sweep needs 'values' or 'range'")
    return param, values


def _arange(start, stop, step):
    if step <= 0:
        raise ConfigError(f"sweep step must be > 0, got {step}")
    if stop < start:
        return []
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [float(start + i * step) for i in range(n)]


def cmd_sweep(args):
    doc = _load(args)
    param, values = _sweep_values(doc, args)
    index = int(doc.data.get("sweep", {}).get("scenario", 0) if isinstance(doc.data.get("sweep"), dict) else 0)
    raw = doc.data["scenarios"][index]
    k = args.k or (raw.get("solver", {}) or {}).get("k", 6)
    header = ["parameter"] + [f"lambda_{j + 1}" for j in range(k)] + ["gamma", "closed_bound", "exact_lambda_1"]

    def row(value):
        new = with_parameter(raw, param, value)
        sub = ConfigDoc({"scenarios": [new]}, {}, f"{doc.source} [{param}={value}]")
        sc = parse_scenario(sub, 0, {"k": k, "tol": args.tol, "seed": args.seed})
        sc = replace(sc, checks=[])
        res = run_scenario(sc)
        Q = Quantities(**res.quantities)
        closed = (Q.dist2 + Q.qIntegral) / Q.volume
        try:
            exact = exact_scenario(sc, 1)[2]
        except ConfigError:
            exact = float("nan")
        return [value] + list(res.eigenvalues[:k]) + [gamma(Q), closed, exact]

    rows = [header] + _map(row, values, args.jobs)
    _atomic_write(os.path.join(args.out_dir, "sweep.csv"), _csv(rows))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors: exit 1, keeping 2 for failed checks
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="magspec", description="Magnetic Schrodinger spectra and explicit eigenvalue bounds.")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="YAML scenario file")
    common.add_argument("--out-dir", default="magspec-out", help="directory for CSV/JSON artifacts")
    common.add_argument("--seed", type=int, default=None, help="override solver seed")
    common.add_argument("--tol", type=float, default=None, help="override solver tolerance")
    common.add_argument("--k", type=int, default=None, help="override number of eigenvalues")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel scenarios")
    common.add_argument("--selftest-corrupt", action="store_true", help="inject a wrong rhs to exercise the failure path")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    sub.add_parser("exact", parents=[common], help="closed-form flat-torus spectra")
    sub.add_parser("solve", parents=[common], help="discrete spectra only")
    sub.add_parser("verify", parents=[common], help="spectra plus requested bound checks")
    sw = sub.add_parser("sweep", parents=[common], help="one-parameter sweep to CSV")
    sw.add_argument("--param", help="dotted path inside the scenario, e.g. potential.A.flux.0")
    sw.add_argument("--values", help="comma-separated parameter values")
    sw.add_argument("--range", nargs=3, type=float, metavar=("START", "STOP", "STEP"))
    sub.add_parser("selftest", parents=[common], help="run the bundled verification scenarios")
    return p


COMMANDS = {"exact": cmd_exact, "solve": cmd_solve, "verify": cmd_verify, "sweep": cmd_sweep, "selftest": cmd_selftest}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.verb](args)
    except INPUT_ERRORS as exc:
        print(f"magspec: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"magspec: solver failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
