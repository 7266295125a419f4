"""Command-line interface: ``ddlab <subcommand> ...``.

Exit codes: 0 ok, 1 other error, 2 parse error, 3 precondition, 4 a
theorem-level check failed, 5 budget exceeded, 6 benchmark regression.
"""

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction
from importlib import metadata
from pathlib import Path

import numpy as np

from . import io as dio
from .errors import DDLabError, ParseError, PreconditionError
from .exact import frac_str, to_fraction

EXIT_REGRESSION = 6


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "dev"


class Output:
    """Collects the primary output and writes it (plus a run manifest) at the end."""

    def __init__(self, args, command):
        self.args = args
        self.command = command
        self.inputs = {}
        self.paths = []
        self.t0 = time.perf_counter()

    def add_input(self, path):
        self.inputs[str(path)] = dio.digest(path)

    def emit(self, text: str, suffix: str = ""):
        out = self.args.out
        if out is None:
            sys.stdout.write(text)
            return
        path = Path(out + suffix) if suffix else Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.paths.append(str(path))

    def manifest_name(self):
        return None if self.args.out is None else Path(self.args.out).name + ".manifest.json"

    def finish(self):
        if self.args.out is None:
            return
        cfg = {k: v for k, v in vars(self.args).items() if k != "func"}
        manifest = {
            "command": self.command,
            "config": cfg,
            "inputs": self.inputs,
            "versions": {"ddlab": _version(), "python": sys.version.split()[0], "numpy": np.__version__},
            "wall_time": time.perf_counter() - self.t0,
            "outputs": self.paths,
        }
        Path(self.args.out + ".manifest.json").write_text(dio.dumps(manifest))


def _json_out(out: Output, obj: dict):
    name = out.manifest_name()
    if name:
        obj = {**obj, "manifest": name}
    out.emit(dio.dumps(obj))


def _rat_pair(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise ParseError(f"expected 'p/q,p/q', got {text!r}")
    try:
        return tuple(to_fraction(p) for p in parts)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"not an exact rational pair: {text!r}") from None


def _rat(text: str) -> Fraction:
    try:
        return to_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"not an exact rational: {text!r}") from None


def _int_like(text: str) -> int:
    """Integers, also written as 1e8 or 10**8."""
    t = text.strip()
    try:
        if "**" in t:
            b, e = t.split("**")
            return int(b) ** int(e)
        if "e" in t.lower():
            m, e = t.lower().split("e")
            v = Fraction(m) * 10 ** int(e)
            if v.denominator != 1:
                raise ValueError
            return int(v)
        return int(t)
    except ValueError:
        raise ParseError(f"not an integer: {text!r}") from None


def cmd_spectrum(args, out: Output):
    from .spectrum import distance_spectrum
    X = dio.read_point_set(args.input)
    out.add_input(args.input)
    spec = distance_spectrum(X, args.method, args.budget_bytes)
    if args.format == "csv":
        out.emit(dio.spectrum_csv(spec))
    else:
        _json_out(out, spec.to_json())


def cmd_energy(args, out: Output):
    from .spectrum import additive_energy
    X = dio.read_point_set(args.input)
    out.add_input(args.input)
    en = additive_energy(X, args.method, args.budget_bytes)
    _json_out(out, {"n": en.n, "energy_offdiagonal": en.energy_offdiagonal,
                    "energy_with_diagonal": en.energy_with_diagonal, "distinct_shifts": len(en.hist.counts)})


def cmd_window(args, out: Output):
    from .lattice import builtin
    from .represented import palette_bounds_check
    from .windows import (LambdaRectangle, build_disk_window, disk_cert, inner_core,
                          verify_diffset_covering)
    if args.spec:
        w = dio.parse_window(dio.load_json(args.spec))
        out.add_input(args.spec)
    else:
        if args.R_sq is None and args.L is None:
            raise ParseError("give --spec, --R-sq or --L")
        from .io import parse_lattice
        model = parse_lattice(args.lattice)
        z = model.deep_hole() if args.center == "deephole" else (_rat_pair(args.z) if args.z else (0, 0))
        w = {"model": model, "shape": "rect" if args.L else "disk", "offset": _rat_pair(args.tau),
             "z": tuple(z), "R_sq": _rat(args.R_sq) if args.R_sq else None, "c": _rat(args.c),
             "L": tuple(int(x) for x in args.L.split(",")) if args.L else None, "a0": (0, 0)}
    model = w["model"]
    if w["shape"] == "rect":
        rect = LambdaRectangle(w["a0"], *w["L"])
        _json_out(out, {"shape": "rect", "L": list(w["L"]), "a0": list(w["a0"]), "proper": rect.proper,
                        "n": rect.size, "points": rect.points().tolist()})
        return
    win = build_disk_window(model, w["offset"], w["z"], w["R_sq"], args.budget_bytes)
    res = win.to_json()
    res["model"] = model.describe()
    if (1 - w["c"]) ** 2 * w["R_sq"] > model.covering_radius_sq:
        cert = disk_cert(win, w["c"])
        res["certificate"] = {"c": frac_str(cert.c), "R_sq": frac_str(cert.R_sq),
                              "aspect_bound": cert.aspect_bound}
        cov = verify_diffset_covering(win)
        res["covering"] = {"guaranteed_key": cov.guaranteed_key, "n_guaranteed": cov.n_guaranteed,
                           "ok": cov.ok, "largest_covered_key": cov.largest_covered_key}
        pal = palette_bounds_check(win, cert, budget=args.budget_bytes)
        res["palette"] = {"lower": pal.lower, "k": pal.k, "upper": pal.upper,
                          "lower_arg": pal.lower_arg, "upper_arg": pal.upper_arg}
        try:
            core = inner_core(win, cert)
            res["inner_core"] = {"size": len(core.core), "removed": core.removed,
                                 "removed_over_sqrt_n": core.ratio, "shift_stable": core.shift_stable}
        except PreconditionError as e:
            res["inner_core"] = {"error": str(e)}
    if args.points:
        res["points"] = win.points.points.tolist()
    _json_out(out, res)


def cmd_bernays(args, out: Output):
    from .lattice import QuadForm
    from .represented import bernays_estimate, census, log_grid
    try:
        a, b, c = (int(x) for x in args.form.split(","))
    except ValueError:
        raise ParseError(f"--form expects a,b,c integers, got {args.form!r}") from None
    form = QuadForm(a, b, c)
    T = _int_like(args.T)
    grid = log_grid(T, per_decade=args.per_decade) if args.grid == "log" else \
        [_int_like(x) for x in args.grid.split(",")]
    table = census(form, grid[-1], args.cache_dir, args.budget_bytes)
    est = bernays_estimate(form, grid, table, args.fit_decades)
    _json_out(out, est.to_json())


def _bernays_for(model, T, cache_dir, budget):
    from .represented import bernays_estimate, census, log_grid
    table = census(model.form, T, cache_dir, budget)
    return bernays_estimate(model.form, log_grid(T), table), table


def cmd_construct(args, out: Output):
    from .extremal import construct_for_k, lower_bound_table, upper_bound_curve, write_table_csv
    from .io import parse_lattice
    model = parse_lattice(args.lattice)
    C_est = args.C_est
    table = None
    if C_est is None:
        est, table = _bernays_for(model, _int_like(args.bernays_T), args.cache_dir, args.budget_bytes)
        C_est = est.headline
    if args.table:
        ks = [_int_like(x) for x in args.table.split(",")]
        rows = lower_bound_table(model, ks, C_est, args.center, table)
        if args.out:
            write_table_csv(rows, args.out)
            out.paths.append(args.out)
        else:
            write_table_csv(rows, sys.stdout)
        return
    wit = construct_for_k(model, _int_like(args.k), args.center, C_est=C_est, table=table)
    res = wit.to_json()
    if wit.k >= 3:
        ub = upper_bound_curve([wit.k], args.C1)
        res["upper_bound"] = {"C1": args.C1, "closed_form": ub.closed_form[0], "fixed_point": ub.fixed_point[0]}
    _json_out(out, res)


def cmd_classify(args, out: Output):
    from .stability import ClassifierConfig, classify, verify_report
    X = dio.read_point_set(args.input)
    out.add_input(args.input)
    if args.constants == "defaults":
        cfg = {}
    else:
        cfg = dio.load_json(args.constants)
        out.add_input(args.constants)
    if args.sigma is not None:
        cfg["sigma"] = args.sigma
    config = ClassifierConfig.from_json(cfg)
    rep = classify(X, config)
    js = rep.to_json()
    js["reverified"] = verify_report(X, js)
    _json_out(out, js)


def cmd_verify(args, out: Output):
    from .suites import SUITES, run_suite
    names = list(SUITES) if args.suite == "all" else args.suite.split(",")
    results = [run_suite(n, args.trials, args.seed, args.nmax) for n in names]
    _json_out(out, {"suites": [r.to_json() for r in results], "pass": all(r.passed for r in results)})
    failed = [r.name for r in results if r.theorem and not r.passed]
    if failed:
        from .errors import TheoremViolation
        raise TheoremViolation(f"suites failed: {', '.join(failed)}")


def cmd_bench(args, out: Output):
    from . import bench
    if args.workload == "spectrum":
        res = bench.bench_spectrum(_int_like(args.n), args.lattice, repeat=args.repeat)
    elif args.workload == "census":
        res = bench.bench_census(_int_like(args.T))
    else:
        res = bench.bench_tiny()
    res["machine"] = bench.machine_info()
    if args.history:
        bench.append_history(res, args.history)
    if args.baseline:
        res["regression"] = bench.check_regression(res, args.baseline)
    _json_out(out, res)
    if res.get("regression", {}).get("regressed"):
        sys.stderr.write(f"error: regression: {res['workload']} {res['regression']['ratio']:.2f}x baseline\n")
        return EXIT_REGRESSION
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ddlab", description="Exact distinct-distance laboratory for planar lattices.")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized sweeps")
    p.add_argument("--threads", type=int, default=1, help="worker threads for FFT routines")
    p.add_argument("--budget-bytes", type=int, default=None, dest="budget_bytes",
                   help="memory budget for large enumerations (default 2 GiB)")
    p.add_argument("--out", default=None, help="output path (default stdout); a manifest is written next to it")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", help="exact distance spectrum of a point-set file")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--method", choices=["auto", "direct", "fft"], default="auto")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("energy", help="additive energy of a point-set file")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--method", choices=["auto", "direct", "fft"], default="auto")
    s.set_defaults(func=cmd_energy)

    s = sub.add_parser("window", help="build and certify a disk or rectangle window")
    s.add_argument("--spec", help="window spec JSON")
    s.add_argument("--lattice", default="Z2")
    s.add_argument("--R-sq", dest="R_sq")
    s.add_argument("--L", help="rectangle sides L1,L2")
    s.add_argument("--z", help="centre p/q,p/q in lattice coordinates")
    s.add_argument("--center", choices=["lattice", "deephole"], default="lattice")
    s.add_argument("--tau", default="0,0")
    s.add_argument("--c", default="0")
    s.add_argument("--points", action="store_true", help="include the window points")
    s.set_defaults(func=cmd_window)

    s = sub.add_parser("bernays", help="represented-number census and Bernays constant estimate")
    s.add_argument("--form", default="1,0,1")
    s.add_argument("--T", default="1e7")
    s.add_argument("--grid", default="log", help="'log' or comma-separated T values")
    s.add_argument("--per-decade", type=int, default=8, dest="per_decade")
    s.add_argument("--fit-decades", type=float, default=2.0, dest="fit_decades")
    s.add_argument("--cache-dir", default=None, dest="cache_dir")
    s.set_defaults(func=cmd_bernays)

    s = sub.add_parser("construct", help="largest disk window with at most k distances")
    s.add_argument("--lattice", default="hex")
    s.add_argument("--k", default="1000")
    s.add_argument("--table", help="comma-separated k grid; writes the lower-bound CSV")
    s.add_argument("--center", choices=["lattice", "deephole"], default="lattice")
    s.add_argument("--C-est", type=float, default=None, dest="C_est", help="Bernays constant (default: census fit)")
    s.add_argument("--bernays-T", default="1e7", dest="bernays_T")
    s.add_argument("--cache-dir", default=None, dest="cache_dir")
    s.add_argument("--C1", type=float, default=1.0)
    s.set_defaults(func=cmd_construct)

    s = sub.add_parser("classify", help="line-heavy / two-shift / localized classification")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--sigma", default=None)
    s.add_argument("--constants", default="defaults", help="'defaults' or a JSON file of constants")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("verify", help="run property suites")
    s.add_argument("--suite", default="all")
    s.add_argument("--trials", type=int, default=None)
    s.add_argument("--nmax", type=int, default=None)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("bench", help="throughput benchmarks")
    s.add_argument("workload", choices=["spectrum", "census", "tiny"])
    s.add_argument("--n", default="1e6")
    s.add_argument("--lattice", default="hex")
    s.add_argument("--T", default="1e8")
    s.add_argument("--repeat", type=int, default=1)
    s.add_argument("--history", default=None, help="JSONL file to append results to")
    s.add_argument("--baseline", default=None, help="baseline JSON; recorded on first run")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    from .spectrum import set_workers
    set_workers(args.threads)
    out = Output(args, args.command)
    try:
        code = args.func(args, out) or 0
        out.finish()
        return code
    except DDLabError as e:
        sys.stderr.write(f"error: {type(e).__name__}: {str(e).splitlines()[0] if str(e) else ''}\n")
        return e.exit_code
    except (ValueError, ArithmeticError) as e:
        sys.stderr.write(f"error: PreconditionError: {e}\n")
        return PreconditionError.exit_code


if __name__ == "__main__":
    sys.exit(main())
