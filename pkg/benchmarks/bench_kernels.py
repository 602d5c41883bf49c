"""Compare the compiled and pure-Python IMEX kernels on a front-sized problem.

    python3 benchmarks/bench_kernels.py [--nodes 6001] [--steps 2000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from lvfronts.kernels import BACKENDS
from lvfronts.kinetics import CoefficientSet, ReactionPack, compute_orbits


def setup(n, steps, dt):
    cs = CoefficientSet.constant(r1=1, r2=1, a1=1, b2=1, b1=1.3, a2=1.8)
    pack = ReactionPack(cs, compute_orbits(cs))
    coef = pack.table((np.arange(steps) + 0.5) * dt)
    x = np.linspace(-150, 150, n)
    u0 = 0.5 * (1 + np.tanh(x / 4))
    return coef, u0, x[1] - x[0]


def run(mod, coef, u0, h, dt, neumann):
    u, v = u0.copy(), u0.copy()
    out = np.empty((1, 2, 1))
    t0 = time.perf_counter()
    st = mod.imex_run(u, v, coef, dt, h, 1.0, neumann, 0.0, 0.0, 1.0, 1.0, 0, out)
    el = time.perf_counter() - t0
    assert st == coef.shape[0]
    return el, u, v


def main(argv=None):
    p = argparse.ArgumentParser()
    p.add_argument("--nodes", type=int, default=6001)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--dt", type=float, default=1e-3)
    a = p.parse_args(argv)
    coef, u0, h = setup(a.nodes, a.steps, a.dt)
    res = {}
    for name, mod in BACKENDS.items():
        for neumann in (0, 1):
            best = min(run(mod, coef, u0, h, a.dt, neumann)[0] for _ in range(a.repeat))
            res[name, neumann] = best
            rate = a.nodes * a.steps / best / 1e6
            print(f"{name:7s} {'neumann' if neumann else 'dirichlet':9s} {best * 1e3:9.1f} ms  "
                  f"{rate:7.1f} Mnode-steps/s")
    if "cython" in BACKENDS:
        _, u1, v1 = run(BACKENDS["python"], coef, u0, h, a.dt, 0)
        _, u2, v2 = run(BACKENDS["cython"], coef, u0, h, a.dt, 0)
        print(f"max |python - cython| = {max(np.abs(u1 - u2).max(), np.abs(v1 - v2).max()):.2e}")
        for nm in (0, 1):
            print(f"speedup ({'neumann' if nm else 'dirichlet'}): "
                  f"{res['python', nm] / res['cython', nm]:.2f}x")
    else:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
