"""Forward/reverse residuals and adjacent-correlation minima over many seeds."""
from __future__ import annotations

import argparse
from dataclasses import dataclass

from svdtangle import stats
from svdtangle.synth import SynthParams, generate_path
from svdtangle.untangle import UntangleConfig, forward_reverse_residual, untangle_path


@dataclass
class Config:
    first_seed: int = 0
    count: int = 20
    k: int = 1000
    weighting: bool = False


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--first-seed", type=int, default=0)
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--k", type=int, default=1000)
    ap.add_argument("--weighting", action="store_true")
    cfg = Config(**vars(ap.parse_args()))
    ucfg = UntangleConfig(weighting=cfg.weighting)
    print("seed\tresidual\tmin_corr_untangled\tmin_corr_strict")
    for seed in range(cfg.first_seed, cfg.first_seed + cfg.count):
        path = generate_path(SynthParams(num_samples=cfg.k, seed=seed))
        unt = untangle_path(path, ucfg, keep_strict=True)
        res = forward_reverse_residual(path, ucfg)
        u = stats.avg_adjacent_correlation(unt.triplets).min()
        s = stats.avg_adjacent_correlation(unt.strict).min()
        print(f"{seed}\t{res:.2e}\t{u:.3f}\t{s:.3f}")


if __name__ == "__main__":
    main()
