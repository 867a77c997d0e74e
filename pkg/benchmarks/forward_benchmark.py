"""Benchmark: compiled forward-pass kernel vs. the pure-Python fallback.

Builds a representative sweep state (explicit-duration chain, Gaussian
emissions, Poisson dwells) and times the forward pass through both
implementations on identical inputs.

Run:  python benchmarks/forward_benchmark.py [--T 500] [--states 8] [--reps 20]
"""

import argparse
import time

import numpy as np

from ihsmm import _forward_py, beam
from ihsmm.distributions import GammaPrior
from ihsmm.families import PoissonDuration
from ihsmm.paths import path_from_segments
from ihsmm.rng import RngStream

try:
    from ihsmm import _forward_cy
except ImportError:
    _forward_cy = None


def build_inputs(T, M, temperature, seed=0):
    rng = RngStream(seed)
    P = rng.random((M, M)) + 0.05
    np.fill_diagonal(P, 0.0)
    P /= P.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore"):
        log_pi = np.log(P)
    log_init = np.log(np.full(M, 1.0 / M))
    duration = PoissonDuration(GammaPrior(1.0, 1e3))
    lams = [float(5 + 20 * rng.random()) for _ in range(M)]

    segs, start, state = [], 0, 0
    while start < T:
        length = min(int(rng.poisson(lams[state])) + 1, T - start)
        segs.append((state, start, length, length - 1))
        start += length
        state = (state + 1 + int(rng.integers(0, M - 1))) % M
    path = path_from_segments(segs)
    slices = beam.sample_slices(path, log_pi, log_init, duration, lams, temperature, rng)
    r_cap = beam.duration_window(duration, lams, log_pi, log_init, slices, int(path.r.max()))
    log_dur = beam.duration_log_table(duration, lams, r_cap)
    means = np.linspace(-6, 6, M)
    y = rng.normal(0.0, 3.0, T)
    log_emit = np.array([-0.5 * (y - mu) ** 2 for mu in means]).T.copy()
    return log_emit, log_dur, log_pi, log_init, slices


def time_impl(impl, inputs, reps):
    log_emit, log_dur, log_pi, log_init, slices = inputs
    beam.forward_pass(log_emit, log_dur, log_pi, log_init, slices, impl=impl)  # warm-up
    start = time.perf_counter()
    for _ in range(reps):
        table = beam.forward_pass(log_emit, log_dur, log_pi, log_init, slices, impl=impl)
    elapsed = (time.perf_counter() - start) / reps
    return elapsed, table


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--T", type=int, default=500)
    ap.add_argument("--states", type=int, default=8)
    ap.add_argument("--temperature", type=float, default=3.0)
    ap.add_argument("--reps", type=int, default=20)
    args = ap.parse_args()

    inputs = build_inputs(args.T, args.states, args.temperature)
    print(f"T={args.T} states={args.states} r-cap={inputs[1].shape[1] - 1} "
          f"temperature={args.temperature}")

    t_py, table_py = time_impl(_forward_py, inputs, max(1, args.reps // 5))
    print(f"pure-python fallback : {1e3 * t_py:9.2f} ms/pass")
    if _forward_cy is None:
        print("compiled kernel      : not built")
        return
    t_cy, table_cy = time_impl(_forward_cy, inputs, args.reps)
    print(f"compiled kernel      : {1e3 * t_cy:9.2f} ms/pass")
    print(f"speedup              : {t_py / t_cy:9.1f}x")
    same = np.array_equal(table_py.alpha > 0, table_cy.alpha > 0)
    close = np.allclose(table_py.alpha, table_cy.alpha, rtol=1e-9, atol=1e-300)
    print(f"identical supports   : {same}; tables match to 1e-9: {close}")


if __name__ == "__main__":
    main()
