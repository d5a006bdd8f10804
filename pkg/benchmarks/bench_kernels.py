"""Time the compiled kernels against the numpy fallback.

Run ``python benchmarks/bench_kernels.py``. Both backends receive the
same inputs; the script also checks that their outputs agree bit for bit
before reporting timings.
"""
import argparse
import timeit

import numpy as np

from rgl.kernels import available_backends


def cases(rng):
    d = 3072
    w = rng.normal(size=d)
    x = rng.uniform(size=d)
    order = np.argsort(-np.abs(w), kind="stable").astype(np.int64)
    lower, upper = x - 0.01, x + 0.01
    residual = float(w @ (x - (x + 0.3 * rng.normal(size=d))))
    solver = ("linear_solver_core (D=3072, tight box)",
              lambda k: k.linear_solver_core(x, w, order, lower, upper, residual, 1e-9))

    img = rng.uniform(size=(3, 224, 224))
    rows = np.arange(224)[:, None] + 2 * rng.normal(size=(224, 224))
    cols = np.arange(224)[None, :] + 2 * rng.normal(size=(224, 224))
    warp = ("bilinear_warp (3x224x224)", lambda k: k.bilinear_warp(img, rows, cols))

    kernel = rng.normal(size=(5, 5))
    padded = np.pad(img, ((0, 0), (2, 2), (2, 2)), mode="symmetric")
    conv = ("conv2d_symmetric (3x224x224, 5x5)",
            lambda k: k.conv2d_symmetric(padded, kernel, 224, 224))
    return [solver, warp, conv]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--number", type=int, default=10)
    args = p.parse_args()
    backends = available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the python backend is available")
    print(f"{'kernel':40s} " + " ".join(f"{name:>12s}" for name in backends) + "   speedup")
    for label, fn in cases(np.random.default_rng(0)):
        outs = {name: fn(mod) for name, mod in backends.items()}
        ref = outs["python"]
        for name, out in outs.items():
            a = out[0] if isinstance(out, tuple) else out
            b = ref[0] if isinstance(ref, tuple) else ref
            if not np.array_equal(np.asarray(a), np.asarray(b)):
                raise SystemExit(f"{label}: backend {name} disagrees with python")
        times = {name: min(timeit.repeat(lambda: fn(mod), repeat=args.repeat, number=args.number))
                 / args.number for name, mod in backends.items()}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        cells = " ".join(f"{1e3 * t:10.3f}ms" for t in times.values())
        print(f"{label:40s} {cells}   {speed:6.1f}x")


if __name__ == "__main__":
    main()
