"""Throughput benchmarks with an append-only history for regression tracking."""

import json
import os
import platform
import time
from fractions import Fraction
from math import pi
from pathlib import Path

import numpy as np

from .lattice import QuadForm, builtin

REGRESSION_FACTOR = 1.25


def machine_info() -> dict:
    return {
        "platform": platform.platform(),
        "machine": platform.machine(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "cpus": os.cpu_count(),
    }


def bench_spectrum(n: int = 10**6, lattice: str = "hex", method: str = "auto", repeat: int = 1) -> dict:
    """Exact distance spectrum of a centred disk window with about n points."""
    from .spectrum import distance_spectrum
    from .windows import build_disk_window
    model = builtin(lattice)
    R_sq = Fraction(max(1, int(n * model.covolume / pi)))
    w = build_disk_window(model, R_sq=R_sq)
    best = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        spec = distance_spectrum(w.points, method)
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    pairs = w.n * (w.n - 1)
    return {"workload": f"spectrum:{lattice}:{n}", "n": w.n, "k": spec.k, "seconds": best,
            "pairs_per_sec": pairs / best if best > 0 else None}


def bench_census(T: int = 10**8, form=(1, 0, 1)) -> dict:
    from .represented import represented_upto
    t0 = time.perf_counter()
    table = represented_upto(QuadForm(*form), T)
    dt = time.perf_counter() - t0
    return {"workload": f"census:{form[0]},{form[1]},{form[2]}:{T}", "T": T, "count": table.count,
            "seconds": dt, "values_per_sec": T / dt if dt > 0 else None}


def bench_tiny() -> dict:
    from .pointset import LatticePointSet
    from .spectrum import distance_spectrum
    t0 = time.perf_counter()
    spec = distance_spectrum(LatticePointSet(builtin("Z2"), [(0, 0), (1, 0), (0, 1), (1, 1)]))
    return {"workload": "tiny", "n": 4, "k": spec.k, "seconds": time.perf_counter() - t0}


def append_history(result: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a") as fh:
        fh.write(json.dumps({**result, "machine": machine_info(), "time": time.time()}, sort_keys=True) + "\n")


def load_baseline(path) -> dict:
    path = Path(path)
    return json.loads(path.read_text()) if path.exists() else {}


def check_regression(result: dict, baseline_path, record_if_missing: bool = True) -> dict:
    """Compare against the stored baseline for this workload; record it on first run."""
    base = load_baseline(baseline_path)
    key = result["workload"]
    if key not in base:
        if record_if_missing:
            base[key] = {"seconds": result["seconds"], "machine": machine_info()}
            Path(baseline_path).parent.mkdir(parents=True, exist_ok=True)
            Path(baseline_path).write_text(json.dumps(base, indent=2, sort_keys=True) + "\n")
        return {"baseline": None, "ratio": None, "regressed": False, "recorded": record_if_missing}
    ref = base[key]["seconds"]
    ratio = result["seconds"] / ref
    return {"baseline": ref, "ratio": ratio, "regressed": ratio > REGRESSION_FACTOR, "recorded": False}
