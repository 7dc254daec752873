"""Command-line entry point: ``lorenz-psi <subcommand> [options]``.

Every run writes its outputs plus ``manifest.json`` (inputs, package
versions, timings) into ``--output-dir``.  Options may also come from a
TOML job file given with ``--job``; keys use the long option names
(``max-m`` or ``max_m``) and command-line flags win over the file.

Exit codes: 0 success, 1 usage error, 2 computation failure,
3 verification mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__

log = logging.getLogger("lorenz_psi")

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_MISMATCH = 0, 1, 2, 3


class UsageError(Exception):
    pass


class MismatchError(Exception):
    """A verification step found a discrepancy; the outputs are still written."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def parse_complex(text) -> complex:
    """``"re,im"``, ``"1+2j"`` or a plain number; TOML arrays ``[re, im]`` too."""
    if isinstance(text, (list, tuple)):
        if len(text) != 2:
            raise ValueError(f"complex values need two entries, got {text!r}")
        return complex(float(text[0]), float(text[1]))
    if isinstance(text, (int, float, complex)):
        return complex(text)
    s = str(text).strip().replace(" ", "")
    if "," in s:
        re_s, im_s = s.split(",", 1)
        return complex(float(re_s), float(im_s))
    s = s.replace("i", "j")
    if s in ("j", "+j"):
        return 1j
    if s == "-j":
        return -1j
    return complex(s)


def _complex_arg(text: str) -> complex:
    try:
        return parse_complex(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _cjson(z) -> List[float]:
    z = complex(z)
    return [z.real, z.imag]


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _dump_csv(path: Path, rows: Sequence[dict], fields: Optional[Sequence[str]] = None) -> None:
    if not rows:
        path.write_text("")
        return
    fields = list(fields or rows[0].keys())
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    path.write_text(buf.getvalue())


def _versions() -> Dict[str, str]:
    out = {"lorenz_psi": __version__, "python": platform.python_version()}
    for name in ("numpy", "scipy", "mpmath", "flint"):
        try:
            mod = __import__(name)
            out["python-flint" if name == "flint" else name] = getattr(mod, "__version__", "?")
        except ImportError:  # pragma: no cover
            out[name] = "missing"
    return out


def _load_job(path: str) -> dict:
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return {k.replace("-", "_"): v for k, v in data.items()}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _family(args):
    from .series import SeriesFamily
    return SeriesFamily.parse(args.family)


def _d_mode(args, default: str):
    from .series import DMode
    return DMode.parse(args.d if args.d is not None else default)


def _d_complex(args) -> complex:
    mode = _d_mode(args, "numeric:0,0")
    if mode.is_symbolic:
        raise UsageError("this subcommand needs a numeric --d")
    return complex(mode.value)


def cmd_gen_coeffs(args, out: Path) -> List[str]:
    from .series import generate, series_to_json, series_to_latex

    if args.max_m is None:
        args.max_m = 3
    if args.max_m < -2:
        raise UsageError("--max-m must be at least -2")
    mode = _d_mode(args, "symbolic")
    series = generate(args.max_m, _family(args), mode)
    stem = f"coeffs_{series.family.value}_m{args.max_m}"
    if args.format == "json":
        path = out / f"{stem}.json"
        _dump_json(path, {"family": series.family.value, "d_mode": str(mode),
                          "max_m": args.max_m, "coefficients": series_to_json(series)})
    elif args.format == "latex":
        path = out / f"{stem}.tex"
        path.write_text(series_to_latex(series) + "\n")
    else:
        path = out / f"{stem}.csv"
        rows = []
        for c in series.coeffs:
            for comp, idx, poly in (("P", c.m + 1, c.P), ("Q", c.m, c.Q), ("R", c.m, c.R)):
                for (up, dp), coef in poly.iter_terms():
                    rows.append({"m": c.m, "component": comp, "power": idx, "u_power": up,
                                 "d_power": dp, "re": str(coef.re), "im": str(coef.im)})
        _dump_csv(path, rows, ["m", "component", "power", "u_power", "d_power", "re", "im"])
    return [path.name]


def cmd_verify_table1(args, out: Path) -> List[str]:
    from .series import SeriesFamily
    from .table1 import TABLE1, table1_fixture, verify_table1

    raw = TABLE1
    if args.fixture:
        data = json.loads(Path(args.fixture).read_text())
        raw = {name: {tuple(int(v) for v in key.split(",")): tuple(val) for key, val in cells.items()}
               for name, cells in data.items()}
    families = [SeriesFamily.parse(args.family)] if args.family else list(SeriesFamily)
    report = {}
    bad = []
    for fam in families:
        results = verify_table1(fam, fixture=table1_fixture(fam, raw))
        report[fam.value] = [{"cell": r.name, "match": r.matches, "expected": r.expected,
                              "computed": r.computed} for r in results]
        for r in results:
            status = "ok" if r.matches else "MISMATCH"
            print(f"{fam.value:5s} {r.name:5s} {status}")
            if not r.matches:
                print(f"      expected {r.expected}\n      computed {r.computed}")
                bad.append(f"{fam.value}:{r.name}")
    _dump_json(out / "table1_report.json", {"families": report, "mismatches": bad})
    if bad:
        raise MismatchError(f"{len(bad)} cell(s) differ: {', '.join(bad)}")
    return ["table1_report.json"]


def cmd_bounds(args, out: Path) -> List[str]:
    from .bounds import (bounds_rows, convergence_estimate, eigenvector_condition,
                         majorant_sequence, norm_sequence, MAJORANT_SEED)
    from .series import DMode, generate

    M = args.max_m if args.max_m is not None else 50
    if M < 8:
        raise UsageError("--max-m must be at least 8 for the lemma sweeps")
    D = _d_complex(args)
    series = generate(M, _family(args), _d_mode(args, "numeric:0,0"), verify=False)
    norms = norm_sequence(series)
    maj = majorant_sequence(norms.values[:MAJORANT_SEED], max(M, args.majorant_terms))
    rows = bounds_rows(series, None, norms, maj)
    _dump_csv(out / "bounds_sweep.csv", rows)
    failed = [r["m"] for r in rows
              if (r["F_margin"] != "" and r["F_margin"] < -1e-12 * r["F_rhs"])
              or (r["X_margin"] != "" and r["X_margin"] < -1e-12 * r["X_rhs"])]
    dominated = all(norms[m] <= maj.value(m) * (1 + 1e-12) for m in range(M + 1))
    est = convergence_estimate(norms, 0, args.majorant_terms)
    summary = est.to_json()
    summary.update(diagnostics=est.diagnostics, lemma_failures=failed,
                   majorant_dominates=dominated,
                   eigenvector_condition=str(eigenvector_condition(_family(args).value)),
                   D=_cjson(D), max_m=M)
    _dump_json(out / "convergence.json", summary)
    print(f"K2 = {est.K2:.10g} (root test), {est.diagnostics['K2_discriminant']:.10g} (discriminant)")
    print(f"lemma checks: {'all pass' if not failed else f'failures at m={failed}'}")
    if failed or not dominated:
        raise MismatchError("bound sweep found violations")
    return ["bounds_sweep.csv", "convergence.json"]


def _estimate(args, C: complex):
    from .bounds import convergence_estimate, norm_sequence
    from .series import generate

    series = generate(7, _family(args), _d_mode(args, "numeric:0,0"), verify=False)
    return convergence_estimate(norm_sequence(series), C, args.majorant_terms)


def cmd_radius(args, out: Path) -> List[str]:
    from .bounds import eta_domain, radius_inequalities

    C = args.c if args.c is not None else 0j
    est = _estimate(args, C)
    ok = radius_inequalities(est.r, est.K2, C)
    doc = est.to_json()
    doc.update(inequalities=list(ok), eta_domain=eta_domain(est.K2, C),
               diagnostics=est.diagnostics)
    _dump_json(out / "radius.json", doc)
    print(f"r = {est.r:.6e} for C = {C} (K2 = {est.K2:.8g})")
    if not all(ok):
        raise MismatchError("radius violates its defining inequalities")
    return ["radius.json"]


def _branch(args, D: complex):
    from .evaluate import BranchSpec

    t0 = args.t0 if args.t0 is not None else 0j
    b = args.b if args.b is not None else BranchSpec.default_b(t0)
    return BranchSpec(t0, b, args.c if args.c is not None else 0j, D, _family(args))


def _numeric_series(args, N: int):
    from .series import generate

    return generate(N, _family(args), _d_mode(args, "numeric:0,0"), verify=False)


def cmd_eval(args, out: Path) -> List[str]:
    from .evaluate import eval_with_derivative, residual_norm

    if args.t is None:
        raise UsageError("eval needs --t")
    N = args.order if args.order is not None else 30
    D = _d_complex(args)
    spec = _branch(args, D)
    series = _numeric_series(args, N)
    dps = _dps(args)
    (x, y, z), (dx, dy, dz) = eval_with_derivative(series, spec, args.t, N, dps)
    doc = {"t": _cjson(args.t), "t0": _cjson(spec.t0), "b": _cjson(spec.b), "C": _cjson(spec.C),
           "D": _cjson(D), "family": spec.family.value, "N": N,
           "state": [_cjson(complex(v)) for v in (x, y, z)],
           "derivative": [_cjson(complex(v)) for v in (dx, dy, dz)],
           "relative_residual": residual_norm(series, spec, args.t, N, dps)}
    _dump_json(out / "eval.json", doc)
    return ["eval.json"]


def _dps(args) -> Optional[int]:
    bits = args.precision_bits
    if bits is None or bits <= 53:
        return None
    return int(math.ceil(bits * math.log10(2))) + 5


def cmd_residual(args, out: Path) -> List[str]:
    from .evaluate import residual_norm

    D = _d_complex(args)
    spec = _branch(args, D)
    Nmax = args.order if args.order is not None else 40
    if args.h is not None:
        h = args.h
    else:
        est = _estimate(args, spec.C)
        # a point at half the radius, rotated away from the cut
        h = 0.5 * est.r * (1j ** 0.5) / spec.b
    t = spec.t0 + h
    series = _numeric_series(args, Nmax)
    rows = []
    prev = None
    for N in range(5, Nmax + 1, 5):
        res = residual_norm(series, spec, t, N, _dps(args))
        rows.append({"N": N, "relative_residual": res,
                     "ratio": res / prev if prev else ""})
        prev = res
    _dump_csv(out / "residual.csv", rows, ["N", "relative_residual", "ratio"])
    for r in rows:
        print(f"N={r['N']:3d}  residual={r['relative_residual']:.3e}")
    return ["residual.csv"]


def cmd_integrate(args, out: Path) -> List[str]:
    from .taylor import PathSpec, PrecisionConfig, State, growth_check, integrate_path

    if not args.waypoints:
        raise UsageError("integrate needs --waypoints")
    if args.x0 is None:
        raise UsageError("integrate needs --x0")
    pts = tuple(parse_complex(w) for w in _split_points(args.waypoints))
    x0 = [parse_complex(v) for v in _split_points(args.x0)]
    if len(x0) != 3:
        raise UsageError("--x0 needs three values")
    cfg = PrecisionConfig(args.precision_bits or 53, args.order or 25)
    path = PathSpec(pts, tolerance=args.tol or 1e-14)
    res = integrate_path(State(pts[0], *x0), path, cfg)
    rows = res.trace_rows()
    _dump_csv(out / "trace.csv", rows)
    end = res.state
    doc = {"waypoints": [_cjson(p) for p in pts], "x0": [_cjson(v) for v in x0],
           "end_t": _cjson(end.t), "end_state": [_cjson(complex(v)) for v in end.vector()],
           "steps": len(rows) - 1, "diverged": res.diverged, "reason": res.reason}
    if abs(pts[-1] - pts[0]) < 1e-14:
        gap = max(abs(complex(a) - complex(b)) for a, b in zip(end.vector(), x0))
        doc["return_error"] = gap
        print(f"closed loop: endpoint differs from start by {gap:.3e}")
    if all(abs(complex(p).imag) == 0 for p in pts) and all(complex(v).imag == 0 for v in x0):
        doc["growth_bound_holds"] = growth_check(res.trace)
    _dump_json(out / "integrate.json", doc)
    if res.diverged:
        print(f"path diverged: {res.reason}")
    return ["trace.csv", "integrate.json"]


def _split_points(value) -> List:
    if isinstance(value, (list, tuple)):
        return list(value)
    return [p for p in str(value).split(";") if p.strip()]


def _check_symbols(symbols: Sequence[str]) -> List[str]:
    from .orbits import SymbolSequence

    out = []
    for sym in symbols:
        try:
            seq = SymbolSequence(sym)
            seq.validate_for_orbit()
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        out.append(seq.symbols)
    return out


def _orbit_job(symbol: str):
    from .orbits import find_periodic_orbit
    return find_periodic_orbit(symbol)


def _locate_job(payload):
    from .singularities import RefineConfig, locate
    symbol, order, scan = payload
    return locate(symbol, order=order, scan=scan, refine_cfg=RefineConfig())


def _map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def cmd_find_orbit(args, out: Path) -> List[str]:
    orbits = _map(_orbit_job, _check_symbols(args.symbols), args.jobs)
    names = []
    for o in orbits:
        name = f"orbit_{o.symbols}.json"
        _dump_json(out / name, o.to_json())
        print(f"{o.symbols}: period {o.period:.10f}, closure {o.closure_residual:.2e}")
        names.append(name)
    return names


def _sing_doc(r) -> dict:
    doc = r.to_json()
    doc["im_t0_abs"] = abs(r.refined.t0.imag)
    return doc


def cmd_locate(args, out: Path) -> List[str]:
    order = args.order if args.order is not None else 60
    if order < 60:
        raise UsageError("locate needs Taylor order >= 60 for the coefficient fit")
    symbols = _check_symbols(args.symbols)
    results = _map(_locate_job, [(s, order, args.scan) for s in symbols], args.jobs)
    names = []
    for r in results:
        sym = str(r.orbit.symbols)
        _dump_json(out / f"orbit_{sym}.json", r.orbit.to_json())
        _dump_json(out / f"sing_{sym}.json", _sing_doc(r))
        names += [f"orbit_{sym}.json", f"sing_{sym}.json"]
        print(f"{sym}: t0 = {r.refined.t0.real:.10f} +/- {abs(r.refined.t0.imag):.10f}i"
              f"  (1/8 bound {'holds' if r.divergence.holds else 'FAILS'})")
        if not r.divergence.holds:
            raise MismatchError(f"divergence bound fails for {sym}")
    return names


def cmd_fit(args, out: Path) -> List[str]:
    from .series import DMode, SeriesFamily, generate
    from .singularities import annulus_samples, fit_psi_parameters

    N = args.order if args.order is not None else 25
    symbols = _check_symbols(args.symbols)
    window = (args.window[0], args.window[1])
    series = {f: generate(N, f, DMode.symbolic(), verify=False) for f in SeriesFamily}
    results = _map(_locate_job, [(s, 60, args.scan) for s in symbols], args.jobs)
    names = []
    for r in results:
        sym = str(r.orbit.symbols)
        ts, vals = annulus_samples(r.refined, window)
        r.fit = fit_psi_parameters(ts, vals, series, N, r.refined.t0, window, seed=args.seed)
        _dump_json(out / f"orbit_{sym}.json", r.orbit.to_json())
        _dump_json(out / f"sing_{sym}.json", _sing_doc(r))
        names += [f"orbit_{sym}.json", f"sing_{sym}.json"]
        f = r.fit
        print(f"{sym}: family {f.family.value}, C = {f.C:.8g}, D = {f.D:.8g}, "
              f"rms {f.rms_residual:.2e} (held out {f.holdout_rms:.2e})")
        if not f.holdout_rms <= 3 * max(f.rms_residual, 1e-15):
            raise MismatchError(f"held-out rms for {sym} is more than 3x the training rms")
    return names


COMMANDS = {
    "gen-coeffs": cmd_gen_coeffs,
    "verify-table1": cmd_verify_table1,
    "bounds": cmd_bounds,
    "radius": cmd_radius,
    "eval": cmd_eval,
    "residual": cmd_residual,
    "integrate": cmd_integrate,
    "find-orbit": cmd_find_orbit,
    "locate": cmd_locate,
    "fit": cmd_fit,
}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--job", help="TOML job file; flags given on the command line take precedence")
    g.add_argument("--output-dir", default="results", help="directory for outputs and manifest.json")
    g.add_argument("--family", choices=["plus", "minus"], help="series family (default plus)")
    g.add_argument("--d", help="D mode: 'symbolic' or 'numeric:<re>,<im>'")
    g.add_argument("--c", type=_complex_arg, help="constant C as re,im")
    g.add_argument("--b", type=_complex_arg, help="branch orientation b (|b| = 1)")
    g.add_argument("--t0", type=_complex_arg, help="singularity location as re,im")
    g.add_argument("--max-m", type=int, help="highest coefficient index")
    g.add_argument("--order", type=int, help="truncation or Taylor order")
    g.add_argument("--tol", type=float, help="integration tolerance (relative)")
    g.add_argument("--precision-bits", type=int, help="mantissa bits; above 53 switches to mpmath")
    g.add_argument("--jobs", type=int, default=1, help="worker processes for independent tasks")
    g.add_argument("--seed", type=int, default=0, help="seed for randomised sample splits")
    g.add_argument("--majorant-terms", type=int, default=2000, help="length M of the majorant sequence")
    g.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="lorenz-psi", description="Psi series and complex singularities of the Lorenz system.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("gen-coeffs", parents=[common], help="dump coefficient polynomials")
    s.add_argument("--format", choices=["json", "latex", "csv"], default="json")

    s = sub.add_parser("verify-table1", parents=[common], help="exact check against the reference table")
    s.add_argument("--fixture", help="JSON fixture overriding the embedded table")

    sub.add_parser("bounds", parents=[common], help="norm inequalities and majorant sweep")
    sub.add_parser("radius", parents=[common], help="convergence radius for given C")

    s = sub.add_parser("eval", parents=[common], help="evaluate a truncated series at one point")
    s.add_argument("--t", type=_complex_arg)

    s = sub.add_parser("residual", parents=[common], help="ODE residual against truncation order")
    s.add_argument("--h", type=_complex_arg, help="offset t - t0 (default: half the radius)")

    s = sub.add_parser("integrate", parents=[common], help="Taylor integration along a polyline")
    s.add_argument("--waypoints", help="points 're,im;re,im;...'")
    s.add_argument("--x0", help="initial state 'x;y;z', each real or re,im")

    for name, helptext in (("find-orbit", "periodic orbits by multiple shooting"),
                           ("locate", "nearest complex singularity of periodic orbits"),
                           ("fit", "fit psi-series parameters at located singularities")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("symbols", nargs="+", help="itineraries over A and B, e.g. AB AAB")
        if name != "find-orbit":
            s.add_argument("--scan", type=int, default=100, help="expansion points per period")
        if name == "fit":
            s.add_argument("--window", type=float, nargs=2, default=(0.01, 0.02),
                           metavar=("R_IN", "R_OUT"), help="annulus radii around t0")
    return p


_COMPLEX_KEYS = {"c", "b", "t0", "t", "h"}


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.job:
        try:
            job = _load_job(args.job)
        except (OSError, ValueError) as exc:
            parser.error(f"cannot read job file: {exc}")
        # re-parse with file values as defaults so explicit flags still win
        sub = parser._subparsers._group_actions[0].choices[args.command]
        defaults = {}
        for k, v in job.items():
            if k in _COMPLEX_KEYS:
                v = parse_complex(v)
            defaults[k] = v
        known = {a.dest for a in sub._actions}
        unknown = set(defaults) - known
        if unknown:
            parser.error(f"unknown job keys: {', '.join(sorted(unknown))}")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if args.family is None:
        args.family = "plus" if args.command != "verify-table1" else None
    return args


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    inputs = {k: (_cjson(v) if isinstance(v, complex) else v) for k, v in sorted(vars(args).items())
              if not callable(v)}
    if isinstance(inputs.get("window"), tuple):
        inputs["window"] = list(inputs["window"])
    manifest = {"command": args.command, "inputs": inputs, "versions": _versions()}
    start = time.perf_counter()
    code = EXIT_OK
    outputs: List[str] = []
    try:
        outputs = COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"lorenz-psi {args.command}: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except MismatchError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        code = EXIT_MISMATCH
    except Exception as exc:  # computation failures carry their stage in the message
        log.debug("failure", exc_info=True)
        print(f"computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_COMPUTE
    manifest.update(exit_code=code, outputs=outputs,
                    timings={"total_seconds": round(time.perf_counter() - start, 3)})
    _dump_json(out / "manifest.json", manifest)
    return code


if __name__ == "__main__":
    sys.exit(main())
