"""Timing comparison of the numpy and numba kernel backends.

Two views:

* per-kernel microbenchmarks at a small and a large problem size, and
* end-to-end centralized rounds per second with the whole protocol driven
  through each backend in turn.

Usage:
    python benchmarks/bench_backends.py [--rounds N] [--number N]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from streammtl import kernels
from streammtl.datasets import SyntheticConfig, generate_synthetic, next_round, reseed_streams
from streammtl.kernels import _KERNEL_NAMES, numpy_impl
from streammtl.model import Hyperparameters, ModelState, initial_relationship
from streammtl.protocol import run_centralized_round

try:
    from streammtl.kernels import numba_impl
except ImportError:
    numba_impl = None

SIZES = (("small", 9, 5), ("large", 512, 29))

MICRO_KERNELS = ("hinge_subgradient", "step_w", "step_u", "step_v", "step_z")


def kernel_inputs(rng, d, K):
    return {
        "hinge_subgradient": (rng.standard_normal(d), rng.standard_normal(d), 1.0),
        "step_w": (
            rng.standard_normal(d), rng.standard_normal(d), rng.standard_normal(d),
            rng.standard_normal(d), rng.standard_normal(d), 0.1, 2.0,
        ),
        "step_u": (rng.standard_normal((K, d)), rng.standard_normal((K, d)),
                   0.1, 0.01, 0.1, 0.01),
        "step_v": (
            rng.standard_normal(d), rng.standard_normal(d),
            rng.standard_normal((d, K)), rng.standard_normal((K, K)),
            0, 0.1, 0.01, 0.1, 0.01, 0.01,
        ),
        "step_z": (
            rng.standard_normal(d), rng.standard_normal(d),
            rng.standard_normal(d), rng.standard_normal(d), 0.1,
        ),
    }


def best_of(fn, args, number):
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=5)) / number


def micro(number):
    rng = np.random.default_rng(0)
    rows = []
    for label, d, K in SIZES:
        inputs = kernel_inputs(rng, d, K)
        for name in MICRO_KERNELS:
            np_fn = getattr(numpy_impl, name)
            np_fn(*inputs[name])
            np_time = best_of(np_fn, inputs[name], number)
            nb_time = None
            if numba_impl is not None:
                nb_fn = getattr(numba_impl, name)
                nb_fn(*inputs[name])
                nb_time = best_of(nb_fn, inputs[name], number)
            rows.append((f"{name} [{label} d={d} K={K}]", np_time, nb_time))
    return rows


def rounds_per_second(impl, rounds):
    for name in _KERNEL_NAMES:
        setattr(kernels, name, getattr(impl, name))
    kernels.warm_up()
    K, d = 5, 9
    streams, _ = generate_synthetic(SyntheticConfig(K=K, n_per_task=rounds))
    reseed_streams(streams, 0)
    hp = Hyperparameters(K=K, d=d, T=rounds)
    state, omega = ModelState.zeros(K, d), initial_relationship(K)
    start = timeit.default_timer()
    for t in range(1, rounds + 1):
        state, omega, _ = run_centralized_round(
            state, omega, next_round(streams), hp, round_index=t
        )
    return rounds / (timeit.default_timer() - start)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rounds", type=int, default=2000,
                        help="rounds for the end-to-end comparison")
    parser.add_argument("--number", type=int, default=2000,
                        help="calls per timing sample in the microbenchmarks")
    args = parser.parse_args(argv)

    if numba_impl is None:
        print("numba backend unavailable; timing the numpy fallback only\n")

    header = f"{'benchmark':<44}{'numpy':>12}{'numba':>12}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, np_time, nb_time in micro(args.number):
        nb_text = f"{nb_time * 1e6:9.2f} us" if nb_time else "          -"
        ratio = f"{np_time / nb_time:8.1f}x" if nb_time else "        -"
        print(f"{name:<44}{np_time * 1e6:9.2f} us{nb_text}{ratio}")

    saved = {name: getattr(kernels, name) for name in _KERNEL_NAMES}
    try:
        np_rps = rounds_per_second(numpy_impl, args.rounds)
        nb_rps = rounds_per_second(numba_impl, args.rounds) if numba_impl else None
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)
    nb_text = f"{nb_rps:12.0f}" if nb_rps else "           -"
    ratio = f"{nb_rps / np_rps:8.1f}x" if nb_rps else "        -"
    print(f"{'end-to-end centralized rounds/s':<44}{np_rps:12.0f}{nb_text}{ratio}")


if __name__ == "__main__":
    main()
