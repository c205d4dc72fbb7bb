"""Measure how often the greedy swap search misses the optimal assignment.

Two populations: adjacent samples of synthesized fading paths, where the
correlation matrices are close to a permutation, and pairs of unrelated
random matrices, where they are not.
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass

import numpy as np

from svdtangle.pathmat import svd_strict
from svdtangle.synth import SynthParams, generate_path
from svdtangle.untangle import (UntangleConfig, assignment_oracle, correlation_matrices,
                                find_permutation, metrics_agree, untangle_path)


@dataclass
class Config:
    sizes: tuple = (3, 4, 5, 6)
    trials: int = 2000
    k: int = 2000
    seed: int = 0


def random_pairs(n: int, trials: int, rng) -> tuple[float, int]:
    misses, worst = 0, 0
    for _ in range(trials):
        a, b = (svd_strict(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
                for _ in range(2))
        R_U, R_V = correlation_matrices(a, b)
        res = find_permutation(R_U, R_V)
        misses += not metrics_agree(res.metric, assignment_oracle(R_U, R_V)[1])
        worst = max(worst, res.swap_count)
    return misses / trials, worst


def path_steps(n: int, k: int, seed: int) -> tuple[float, int]:
    path = generate_path(SynthParams(M=n, N=n, num_samples=k, seed=seed))
    reps = untangle_path(path, UntangleConfig(oracle_check=True)).reports[1:]
    return (sum(not r.oracle_agrees for r in reps) / len(reps),
            max(r.swap_count for r in reps))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[3, 4, 5, 6])
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--k", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    cfg = Config(**vars(ap.parse_args()))
    rng = np.random.default_rng(cfg.seed)
    print("n\tpath_miss\tpath_max_swaps\trandom_miss\trandom_max_swaps\tbound")
    for n in cfg.sizes:
        pm, ps = path_steps(n, cfg.k, cfg.seed)
        rm, rs = random_pairs(n, cfg.trials, rng)
        print(f"{n}\t{pm:.4f}\t{ps}\t{rm:.4f}\t{rs}\t{n * (n - 1)}")


if __name__ == "__main__":
    main()
