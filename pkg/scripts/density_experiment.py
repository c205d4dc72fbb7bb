"""Histogram fit of untangled squared singular values against Wishart densities."""
from __future__ import annotations

import argparse
from dataclasses import dataclass

import numpy as np

from svdtangle import stats
from svdtangle.synth import SynthParams, generate_path
from svdtangle.untangle import untangle_path


@dataclass
class Config:
    m: int = 2
    n: int = 3
    k: int = 10000
    seed: int = 0
    bins: int = 30
    hist_max: float = 15.0


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(Config()).items():
        ap.add_argument(f"--{name.replace('_', '-')}", type=type(default), default=default)
    cfg = Config(**vars(ap.parse_args()))
    lam = np.abs(untangle_path(generate_path(
        SynthParams(M=cfg.m, N=cfg.n, num_samples=cfg.k, seed=cfg.seed))).sigma()) ** 2
    dims = stats.WishartDims(cfg.m, cfg.n)
    edges = np.linspace(0.0, cfg.hist_max, cfg.bins + 1)
    print(f"marginal L1 = {stats.histogram_fit(lam.ravel(), stats.marginal_density_fn(dims), edges):.4f}")
    if lam.shape[1] == 2:
        e2 = np.linspace(0.0, 10.0, 21)
        print(f"joint L1 (20x20 over [0,10]^2) = "
              f"{stats.histogram_fit(lam, stats.joint_density_fn(dims), (e2, e2)):.4f}")


if __name__ == "__main__":
    main()
