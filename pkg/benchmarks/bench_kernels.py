"""Compare the compiled and numpy jet-product kernels.

Each backend runs in its own interpreter because the kernel is chosen
once at import (``CFOLIATION_BACKEND``).  Usage::

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, timeit
import numpy as np
import cfoliation
from cfoliation._backend import kernels
from cfoliation.analysis import analyze
from cfoliation.config import parse_config
from cfoliation.jets import jet_size

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
out = {"backend": cfoliation.BACKEND}
for n in (4, 5):
    a = rng.normal(size=(n, n, n, jet_size(n, 3)))
    b = rng.normal(size=(n, n, n, jet_size(n, 3)))
    t = min(timeit.repeat(lambda: kernels.mul(a, b, n, 3), number=20, repeat=repeat)) / 20
    out[f"mul n={n}"] = t
cfg = parse_config("product_w_schwarzschild_5d")
t = min(timeit.repeat(lambda: analyze(cfg.chart, cfg.distribution, cfg.plan, cfg.tolerances),
                      number=1, repeat=repeat))
out["analyze product_w_schwarzschild_5d"] = t
print(json.dumps(out))
"""


def run_backend(backend, repeat):
    env = dict(os.environ, CFOLIATION_BACKEND=backend)
    proc = subprocess.run([sys.executable, "-c", CHILD, str(repeat)], env=env,
                          capture_output=True, text=True)
    if proc.returncode != 0:
        return None
    return json.loads(proc.stdout)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    results = {b: run_backend(b, args.repeat) for b in ("cython", "python")}
    if results["cython"] is None:
        print("compiled kernel not available; showing the numpy fallback only")
    rows = [k for k in (results["python"] or {}) if k != "backend"]
    print(f"{'case':40s} {'cython [s]':>12s} {'python [s]':>12s} {'speedup':>8s}")
    for key in rows:
        py = results["python"][key]
        cy = results["cython"][key] if results["cython"] else float("nan")
        print(f"{key:40s} {cy:12.3e} {py:12.3e} {py / cy:8.2f}")


if __name__ == "__main__":
    main()
