"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Each case is timed on both backends and the outputs are compared, so the
table doubles as a cross-backend consistency check.
"""
import argparse
import json
import time

import numpy as np

from restrictlab import kernels
from restrictlab._util import gauss_panels
from restrictlab.builtins import builtin_surface


def _cases():
    mixed = builtin_surface("mixed")
    e2, c2 = mixed.phi_poly()
    parab = builtin_surface("parabola")
    e1, c1 = parab.phi_poly()
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, (1 << 20, 2))
    x1, w1 = gauss_panels(-0.9, 0.9, 4096, 8)
    x2, w2 = gauss_panels(-0.9, 0.9, 96, 8)
    tris = np.array([[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]]) - 2.0 / 3.0
    g, w = gauss_panels(-120.0, 120.0, 200, 8)
    xi = rng.uniform(-50, 50, (1 << 16, 2))
    return {
        "poly_eval 1M pts": lambda k: k.poly_eval(pts, e2, c2),
        "count_le 1M pts": lambda k: k.count_le(pts, e2, c2, 0.1),
        "grid_bracket 1024^2": lambda k: k.grid_bracket(np.array([-1.0, -1.0]), np.array([1.0, 1.0]),
                                                        1024, e2, c2, 0.1),
        "osc_sum_1d 32k nodes": lambda k: k.osc_sum_1d(x1, w1, e1, c1, 0.0, 2048.0, 0.5, 0.9),
        "osc_sum_2d 768^2 nodes": lambda k: k.osc_sum_2d(x2, w2, x2, w2, e2, c2, 0.0, 0.0, 128.0,
                                                         0.5, 0.9),
        "tri_ft 64k freqs": lambda k: k.tri_ft(tris, xi),
        "tri_ft_abs_p 1600^2": lambda k: k.tri_ft_abs_p(tris, g, w, g, w, 4.0 / 3.0),
    }


def _flat(out):
    if isinstance(out, tuple):
        return np.concatenate([np.atleast_1d(np.asarray(o, dtype=complex)).ravel() for o in out])
    return np.atleast_1d(np.asarray(out, dtype=complex)).ravel()


def run(repeat=3):
    backends = {"python": kernels.get_backend("python")}
    try:
        backends["compiled"] = kernels.get_backend("compiled")
    except ImportError:
        pass
    rows = []
    for name, fn in _cases().items():
        row = {"case": name}
        outs = {}
        for bname, mod in backends.items():
            best = float("inf")
            for _ in range(repeat):
                t0 = time.perf_counter()
                outs[bname] = fn(mod)
                best = min(best, time.perf_counter() - t0)
            row[bname] = best
        if len(outs) == 2:
            a, b = _flat(outs["python"]), _flat(outs["compiled"])
            scale = max(np.abs(a).max(), 1e-300)
            row["max_rel_diff"] = float(np.abs(a - b).max() / scale)
            row["speedup"] = row["python"] / row["compiled"]
        rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write the table as JSON")
    args = ap.parse_args(argv)
    rows = run(args.repeat)
    print(f"{'case':<26}{'python s':>10}{'compiled s':>12}{'speedup':>9}{'rel diff':>11}")
    for r in rows:
        print(f"{r['case']:<26}{r['python']:>10.4f}{r.get('compiled', float('nan')):>12.4f}"
              f"{r.get('speedup', float('nan')):>9.1f}{r.get('max_rel_diff', float('nan')):>11.1e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
