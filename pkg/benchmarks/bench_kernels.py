"""Benchmark the compiled row-solve kernels against the pure-NumPy fallback.

Times one full set of half-sweeps (WMF user/item updates plus the three
joint-model block updates) per backend on a synthetic instance, and checks
the backends agree numerically.

Usage: python benchmarks/bench_kernels.py [--users N] [--items M]
       [--factors K] [--density D] [--repeat R]
"""

import argparse
import time

import numpy as np
from scipy import sparse

from sesscmf import kernels
from sesscmf.factorization import _empty_structure, _kernel_csr


def synthetic_instance(rng, n_users, n_items, density):
    R = sparse.random(
        n_users, n_items, density=density, format="csr", random_state=rng
    )
    R.data[:] = 1.0
    upper = sparse.random(
        n_items, n_items, density=density, format="csr", random_state=rng
    )
    upper = sparse.triu(upper, k=1)
    V = (upper + upper.T).tocsr()
    V.data = np.abs(V.data) + 0.1
    return R, V


def run_sweeps(backend, R, V, k, repeat, seed):
    rng = np.random.default_rng(seed)
    n, m = R.shape
    X = rng.random((n, k))
    Y = rng.random((m, k))
    Z = rng.random((m, k))
    RT = R.T.tocsr()
    VT = V.T.tocsr()
    args_r, args_rt = _kernel_csr(R), _kernel_csr(RT)
    args_v, args_vt = _kernel_csr(V), _kernel_csr(VT)
    empty_u = _empty_structure(n, k)
    empty_i = _empty_structure(m, k)
    eye = np.eye(k)
    lam = 0.1
    timings = {}

    start = time.perf_counter()
    for _ in range(repeat):
        gram = Y.T @ Y + lam * eye
        backend.solve_rows_wmf(X, Y, gram, *args_r, 10.0, False)
        gram = X.T @ X + lam * eye
        backend.solve_rows_wmf(Y, X, gram, *args_rt, 10.0, False)
    timings["wmf sweep"] = (time.perf_counter() - start) / repeat

    start = time.perf_counter()
    for _ in range(repeat):
        backend.solve_rows_joint(
            X, lam * eye, Y, *args_r, 1.0, empty_u[3], *empty_u[:3], 0.0, False
        )
        backend.solve_rows_joint(
            Y, lam * eye, X, *args_rt, 1.0, Z, *args_v, 1.0, False
        )
        backend.solve_rows_joint(
            Z, lam * eye, empty_i[3], *empty_i[:3], 0.0, Y, *args_vt, 1.0, False
        )
    timings["joint sweep"] = (time.perf_counter() - start) / repeat
    return timings, (X, Y, Z)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--users", type=int, default=2000)
    parser.add_argument("--items", type=int, default=1000)
    parser.add_argument("--factors", type=int, default=20)
    parser.add_argument("--density", type=float, default=0.02)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    R, V = synthetic_instance(rng, args.users, args.items, args.density)
    print(
        f"instance: {args.users} users x {args.items} items, "
        f"R nnz {R.nnz}, V nnz {V.nnz}, K={args.factors}"
    )

    results = {}
    factors = {}
    for name in kernels.available_backends():
        backend = kernels.get_backend(name)
        results[name], factors[name] = run_sweeps(
            backend, R, V, args.factors, args.repeat, seed=1
        )

    kinds = ["wmf sweep", "joint sweep"]
    print(f"{'backend':<10}" + "".join(f"{kind:>16}" for kind in kinds))
    for name, timing in results.items():
        row = "".join(f"{timing[kind] * 1e3:>13.1f} ms" for kind in kinds)
        print(f"{name:<10}{row}")
    if "native" in results and "pure" in results:
        for kind in kinds:
            speedup = results["pure"][kind] / results["native"][kind]
            print(f"native speedup, {kind}: {speedup:.1f}x")
        worst = max(
            np.abs(a - b).max()
            for a, b in zip(factors["pure"], factors["native"])
        )
        print(f"max |pure - native| over factors: {worst:.2e}")


if __name__ == "__main__":
    main()
