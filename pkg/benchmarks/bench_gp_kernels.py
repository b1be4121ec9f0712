"""Benchmark the compiled GP kernels against the numpy fallback.

Times full GP solves (the joint auxiliary/power subproblem at the reference
problem size) and the raw barrier evaluation kernel, then prints a small
table. Run as: python benchmarks/bench_gp_kernels.py
"""

import time

import numpy as np

from pawsr import kernels
from pawsr.gp import GpOptions, power_subproblem, solve_gp
from pawsr.model import (ChannelSet, NoiseModel, RateWeights, SystemDims,
                         coupling_matrices, decompose, mmse_receiver)


def make_instances(count=20, seed0=100):
    dims = SystemDims(2, 4, (2, 2), (2, 2))
    weights = RateWeights(np.array([0.4, 0.2, 0.6, 0.25]))
    p_check = np.full(4, 2.5)
    out = []
    for s in range(count):
        rng = np.random.Generator(np.random.Philox(key=np.array([seed0 + s, 0], dtype=np.uint64)))
        H = (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))) / np.sqrt(2)
        ch = ChannelSet(dims, H)
        noise = NoiseModel.isotropic(dims, 0.5)
        B = (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))) / np.sqrt(2)
        loads = np.real(np.sum(B.conj() * B, axis=1))
        B *= np.sqrt(0.8 * np.min(p_check / loads))
        W = mmse_receiver(B, ch, noise)
        dec = decompose(B, W, dims)
        coup = coupling_matrices(dec, ch)
        out.append(power_subproblem(coup, dec, noise, p_check, weights))
    return out


def time_solves(problems, backend, repeats=3):
    kernels.set_backend(backend)
    opts = GpOptions()
    best = np.inf
    values = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        values = [solve_gp(p, opts).objective_value for p in problems]
        best = min(best, time.perf_counter() - t0)
    return best, values


def time_kernel(backend, evals=20000):
    """Raw barrier_full cost on a representative reduced system."""
    kernels.set_backend(backend)
    impl = kernels.get_backend()
    rng = np.random.default_rng(0)
    n, t0_terms, m = 11, 24, 16
    A0 = np.ascontiguousarray(rng.uniform(-2, 2, (t0_terms, n)))
    b0 = rng.uniform(-1, 1, t0_terms)
    blocks = [rng.uniform(0, 1, (2, n)) for _ in range(m)]
    Ac = np.ascontiguousarray(np.vstack(blocks))
    bc = rng.uniform(-6, -4, Ac.shape[0])
    starts = np.cumsum([0] + [b.shape[0] for b in blocks]).astype(np.int64)
    logb = np.zeros(m)
    z = np.zeros(n)
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    work = np.zeros(t0_terms)
    gbuf = np.zeros(n)
    hbuf = np.zeros((n, n))
    t0 = time.perf_counter()
    for _ in range(evals):
        impl.barrier_full(1.0, A0, b0, Ac, bc, starts, logb, z, grad, hess,
                          work, gbuf, hbuf)
    return (time.perf_counter() - t0) / evals


def main():
    if not kernels.compiled_available():
        print("compiled kernels not available; nothing to compare")
        return
    problems = make_instances()
    t_py, v_py = time_solves(problems, "python")
    t_cy, v_cy = time_solves(problems, "cython")
    assert np.allclose(v_py, v_cy, rtol=1e-8), "backends disagree"
    k_py = time_kernel("python")
    k_cy = time_kernel("cython")
    kernels.set_backend("cython")

    n = len(problems)
    print(f"{n} power-subproblem GP solves (best of 3):")
    print(f"  python kernels : {t_py:8.3f} s  ({1e3 * t_py / n:6.2f} ms/solve)")
    print(f"  cython kernels : {t_cy:8.3f} s  ({1e3 * t_cy / n:6.2f} ms/solve)")
    print(f"  speedup        : {t_py / t_cy:8.2f} x")
    print("barrier evaluation kernel (value+grad+hess):")
    print(f"  python : {1e6 * k_py:8.2f} us/eval")
    print(f"  cython : {1e6 * k_cy:8.2f} us/eval")
    print(f"  speedup: {k_py / k_cy:8.2f} x")


if __name__ == "__main__":
    main()
