"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5] [--n-spins 10]

The numba timings exclude the first (compiling) call. Each pair of results
is also checked for agreement before timing.
"""

import argparse
import timeit

import numpy as np

from spinwitness import kernels
from spinwitness.spin_models import SpinChainModel, sector_levels


def cases(n_spins, grid):
    rng = np.random.default_rng(0)
    couplings = rng.uniform(0.5, 4.0, n_spins - 1)
    model = SpinChainModel(n_spins, tuple(couplings))
    levels, sz = sector_levels(model)
    temps = np.geomspace(0.05, 20.0, grid)
    fields = np.linspace(0.0, 8.0, grid)
    a = rng.standard_normal((1 << n_spins,) * 2)
    rho = a @ a.T
    rho /= np.trace(rho)
    keep = (1, n_spins - 2)
    return {
        f"heisenberg_matrix n={n_spins}": (
            kernels.heisenberg_matrix_numpy,
            getattr(kernels, "heisenberg_matrix_numba", None),
            (n_spins, couplings, 0.7),
        ),
        f"thermal_moments {levels.size} levels, {grid}x{grid} grid": (
            kernels.thermal_moments_numpy,
            getattr(kernels, "thermal_moments_numba", None),
            (levels, sz, temps, fields),
        ),
        f"partial_trace n={n_spins} keep={keep}": (
            kernels.partial_trace_numpy,
            getattr(kernels, "partial_trace_numba", None),
            (rho.astype(complex), n_spins, keep),
        ),
    }


def best_time(func, args, repeat):
    return min(timeit.repeat(lambda: func(*args), number=1, repeat=repeat))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--n-spins", type=int, default=10)
    parser.add_argument("--grid", type=int, default=200)
    args = parser.parse_args()

    print(f"{'kernel':<48} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}")
    for name, (slow, fast, fargs) in cases(args.n_spins, args.grid).items():
        t_np = best_time(slow, fargs, args.repeat)
        if fast is None:
            print(f"{name:<48} {1e3 * t_np:11.3f} {'n/a':>11} {'':>8}")
            continue
        ref = slow(*fargs)
        got = fast(*fargs)  # also triggers compilation
        if not isinstance(ref, tuple):
            ref, got = (ref,), (got,)
        for x, y in zip(ref, got):
            np.testing.assert_allclose(y, x, rtol=1e-10, atol=1e-12)
        t_nb = best_time(fast, fargs, args.repeat)
        print(f"{name:<48} {1e3 * t_np:11.3f} {1e3 * t_nb:11.3f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
