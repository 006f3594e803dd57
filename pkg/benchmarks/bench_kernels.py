"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--size 20000]

Prints best-of-repeat wall time per call for each kernel and backend, the
speedup, and the max deviation between the two results.
"""
import argparse
import timeit

import numpy as np

from gpsemi import _kernels_py

try:
    from gpsemi import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases(size, rng):
    x = rng.uniform(-4.0, 4.0, size)
    phase = rng.uniform(-10.0, 10.0, size)
    sigma = rng.uniform(-30.0, 30.0, size)
    weight = rng.normal(size=size) + 1j * rng.normal(size=size)
    nodes = 200
    y, w = np.polynomial.hermite.hermgauss(nodes)
    w = w * np.exp(y * y)
    phi = np.exp(-y * y / 2) * (1 + 0.1j * y)
    xo = np.linspace(-3, 3, 400)
    m = 60
    y2, w2 = np.polynomial.legendre.leggauss(m)
    phi2 = np.exp(-(y2[:, None] ** 2 + y2[None, :] ** 2)).astype(complex)
    xs = rng.uniform(-1, 1, 300)
    return {
        "hermite_eval(n=12)": (lambda k: k.hermite_eval(12, x)),
        "sech_envelope": (lambda k: k.sech_envelope(1.3, phase, sigma, weight)),
        "chirp_quadrature_1d": (lambda k: k.chirp_quadrature_1d(xo, y, w, phi, 0.3, 1.1)),
        "chirp_quadrature_2d": (lambda k: k.chirp_quadrature_2d(
            xs, xs[::-1].copy(), y2, y2, w2, w2, np.ascontiguousarray(phi2), 0.3, 1.1, 0.2, 0.9)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=20000)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    backends = [("python", _kernels_py)] + ([("compiled", _kernels)] if _kernels else [])
    print(f"{'kernel':<22}" + "".join(f"{b:>14}" for b, _ in backends) + f"{'speedup':>10}{'max dev':>12}")
    for name, fn in cases(args.size, rng).items():
        times, results = [], []
        for _, mod in backends:
            results.append(np.asarray(fn(mod)))
            t = timeit.Timer(lambda: fn(mod))
            n, _ = t.autorange()
            times.append(min(t.repeat(args.repeat, n)) / n)
        row = f"{name:<22}" + "".join(f"{t * 1e3:>12.3f}ms" for t in times)
        if len(times) == 2:
            scale = max(1.0, float(np.max(np.abs(results[0]))))
            dev = float(np.max(np.abs(results[0] - results[1]))) / scale
            row += f"{times[0] / times[1]:>9.2f}x{dev:>12.1e}"
        print(row)


if __name__ == "__main__":
    main()
