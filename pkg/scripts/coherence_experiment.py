"""Coherence time of SISO entries, untangled and strict singular value paths.

    python3 scripts/coherence_experiment.py --seeds 0 1 2 --k 10000
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass, field

import numpy as np

from svdtangle import stats
from svdtangle.synth import SynthParams, generate_path, theoretical_autocov
from svdtangle.untangle import untangle_path


@dataclass
class Config:
    seeds: list[int] = field(default_factory=lambda: [0])
    k: int = 10000
    m: int = 3
    n: int = 3
    max_lag: int = 50
    level: float = 0.7


def crossings(cfg: Config, seed: int) -> dict:
    path = generate_path(SynthParams(M=cfg.m, N=cfg.n, num_samples=cfg.k, seed=seed))
    unt = untangle_path(path, keep_strict=True)
    ts = path.sample_interval_s

    def acov(x):
        return stats.autocovariance(x, cfg.max_lag, ts)

    siso = np.mean([acov(x).magnitude() for x in path.samples.reshape(cfg.k, -1).T], axis=0)
    sig, raw = unt.sigma(), unt.strict_sigma().real
    untangled = np.mean([acov(c).magnitude() for c in sig.T], axis=0)
    strict = np.abs(np.mean([acov(c).values for c in raw.T], axis=0))
    theory = theoretical_autocov(np.arange(cfg.max_lag + 1) * ts, 15.0)
    return {name: stats.crossing_time(curve, ts, cfg.level)
            for name, curve in (("theory", theory), ("siso", siso),
                                ("untangled", untangled), ("strict", strict))}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--k", type=int, default=10000)
    ap.add_argument("--m", type=int, default=3)
    ap.add_argument("--n", type=int, default=3)
    cfg = Config(**vars(ap.parse_args()))
    print("seed\ttheory\tsiso\tuntangled\tstrict")
    for seed in cfg.seeds:
        c = crossings(cfg, seed)
        print(f"{seed}\t" + "\t".join(f"{c[k]:.4f}" for k in
                                      ("theory", "siso", "untangled", "strict")))


if __name__ == "__main__":
    main()
