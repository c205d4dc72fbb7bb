"""Command line driver: ``svdtangle {generate,untangle,analyze,verify}``.

Exit codes: 0 success, 1 usage, 2 data error, 3 verification failure.
Diagnostics go to stderr; data only to files under ``--out``.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from dataclasses import asdict, replace
from itertools import combinations
from pathlib import Path

import numpy as np

from . import stats
from .errors import (DegeneracyError, DegenerateSampleWarning, InvalidInputError,
                     NotApplicableError, PathDegeneracyError)
from .files import (FileFormatError, fmt, read_decomposition, read_path,
                    write_decomposition, write_path)
from .pathmat import reconstruction_error, svd_strict
from .synth import SynthParams, generate_path, theoretical_autocov
from .untangle import UntangleConfig, forward_reverse_residual, untangle_path

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3
COHERENCE_LEVEL = 0.7
ORACLE_MAX_N = 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _untangle_flags(p: argparse.ArgumentParser):
    p.add_argument("--gap-epsilon", type=float, default=None,
                   help="absolute singular value gap threshold (default 1e-8 * sigma_max)")
    p.add_argument("--weighting", action="store_true",
                   help="bias the permutation search by sqrt(|sigma|)")
    p.add_argument("--degenerate-policy", choices=["warn-and-match", "fail"],
                   default="warn-and-match")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="svdtangle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="synthesize a sum-of-sinusoids fading path")
    g.add_argument("--out", required=True, type=Path)
    g.add_argument("--seed", type=_u64, default=0)
    g.add_argument("--m", type=int, default=3)
    g.add_argument("--n", type=int, default=3)
    g.add_argument("--k", type=int, default=10000)
    g.add_argument("--doppler-hz", type=float, default=15.0)
    g.add_argument("--sample-interval-s", type=float, default=3.3e-3)
    g.add_argument("--num-paths", type=int, default=500)

    u = sub.add_parser("untangle", help="untangle the SVDs of a path file")
    u.add_argument("--in", dest="input", required=True, type=Path)
    u.add_argument("--out", required=True, type=Path)
    u.add_argument("--emit-strict", action="store_true",
                   help="also write the strict (tangled) decomposition")
    u.add_argument("--reverse", action="store_true",
                   help="parse the path from the last sample to the first")
    _untangle_flags(u)

    a = sub.add_parser("analyze", help="covariance, correlation and density reports")
    a.add_argument("--in", dest="input", required=True, type=Path)
    a.add_argument("--out", required=True, type=Path)
    a.add_argument("--max-lag", type=int, default=50)
    a.add_argument("--bins", type=int, default=30,
                   help="marginal histogram bins over [0, --hist-max]")
    a.add_argument("--hist-max", type=float, default=15.0)

    v = sub.add_parser("verify", help="run consistency checks on a path file")
    v.add_argument("--in", dest="input", required=True, type=Path)
    _untangle_flags(v)
    return parser


def _config(args) -> UntangleConfig:
    return UntangleConfig(gap_epsilon=args.gap_epsilon, weighting=args.weighting,
                          degenerate_policy=args.degenerate_policy)


def cmd_generate(args) -> int:
    params = SynthParams(M=args.m, N=args.n, num_paths=args.num_paths,
                         doppler_hz=args.doppler_hz,
                         sample_interval_s=args.sample_interval_s,
                         num_samples=args.k, seed=args.seed)
    write_path(generate_path(params), args.out)
    return EXIT_OK


def cmd_untangle(args) -> int:
    path = read_path(args.input)
    cfg = _config(args)
    parsed = path.reversed() if args.reverse else path
    result = untangle_path(parsed, cfg, keep_strict=args.emit_strict)
    write_decomposition(result, path, args.out, asdict(cfg), reverse=args.reverse)
    if result.blacklist:
        print(f"{len(result.blacklist)} sample(s) blacklisted", file=sys.stderr)
    return EXIT_OK


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt_row(row):
    return [fmt(x) if isinstance(x, (float, np.floating)) else x for x in row]


def cmd_analyze(args) -> int:
    dec = read_decomposition(args.input)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    ts = dec.sample_interval_s
    K = dec.K
    max_lag = args.max_lag
    if not 0 <= max_lag < K:
        raise InvalidInputError(f"--max-lag must be in [0, {K - 1}]")

    samples = dec.samples()
    M, N = samples.shape[1:]
    untangled = dec.sigma()
    strict = dec.strict if dec.strict is not None else [svd_strict(h) for h in samples]
    raw = np.array([t.sigma.real for t in strict])
    n = untangled.shape[1]
    lags = np.arange(max_lag + 1)
    tau = lags * ts

    auto_rows = []
    unt_auto = [stats.autocovariance(untangled[:, i], max_lag, ts) for i in range(n)]
    raw_auto = [stats.autocovariance(raw[:, i], max_lag, ts) for i in range(n)]
    siso_auto = [stats.autocovariance(samples[:, i, j], max_lag, ts)
                 for i in range(M) for j in range(N)]
    for label, series in (("untangled", unt_auto), ("raw", raw_auto), ("siso", siso_auto)):
        for c, cov in enumerate(series):
            for t in lags:
                z = cov.values[t]
                auto_rows.append(_fmt_row([label, c + 1, t, tau[t], z.real, z.imag, abs(z)]))
    _write_csv(out / "autocov.csv",
               ["series", "channel", "lag", "tau_s", "re", "im", "abs"], auto_rows)

    unt_mean = np.mean([c.magnitude() for c in unt_auto], axis=0)
    raw_mean = np.abs(np.mean([c.values for c in raw_auto], axis=0))
    siso_mean = np.mean([c.magnitude() for c in siso_auto], axis=0)
    theory = theoretical_autocov(tau, dec.meta.get("meta", {}).get("doppler_hz", 15.0))
    _write_csv(out / "coherence.csv",
               ["lag", "tau_s", "untangled", "raw", "siso", "theory_j0"],
               [_fmt_row([t, tau[t], unt_mean[t], raw_mean[t], siso_mean[t], theory[t]])
                for t in lags])

    cross_rows = []
    cross0 = {"untangled": [], "raw": [], "siso": []}
    siso_cols = samples.reshape(K, -1)
    for label, cols in (("untangled", untangled), ("raw", raw), ("siso", siso_cols)):
        for a, b in combinations(range(cols.shape[1]), 2):
            cov = stats.crosscovariance(cols[:, a], cols[:, b], max_lag, ts)
            cross0[label].append(abs(cov.values[0]))
            for t in lags:
                z = cov.values[t]
                cross_rows.append(_fmt_row([label, a + 1, b + 1, t, tau[t],
                                            z.real, z.imag, abs(z)]))
    _write_csv(out / "crosscov.csv",
               ["series", "a", "b", "lag", "tau_s", "re", "im", "abs"], cross_rows)

    unt_corr = stats.avg_adjacent_correlation(dec.triplets) if K > 1 else np.array([])
    strict_corr = stats.avg_adjacent_correlation(strict) if K > 1 else np.array([])
    _write_csv(out / "correlation_trace.csv", ["k", "untangled", "strict"],
               [_fmt_row([k + 2, unt_corr[k], strict_corr[k]]) for k in range(K - 1)])

    dims = stats.WishartDims(M, N)
    lam = np.abs(untangled) ** 2
    edges = np.linspace(0.0, args.hist_max, args.bins + 1)
    summary = {
        "K": K, "M": M, "N": N, "T_s": ts,
        "blacklisted": int(sum(r["blacklisted"] for r in dec.report_rows)),
        "crossing_0.7_s": {
            "siso": stats.crossing_time(siso_mean, ts, COHERENCE_LEVEL),
            "untangled": stats.crossing_time(unt_mean, ts, COHERENCE_LEVEL),
            "raw": stats.crossing_time(raw_mean, ts, COHERENCE_LEVEL),
            "theory": stats.crossing_time(theory, ts, COHERENCE_LEVEL),
        },
        "crosscov_lag0_max": {k: float(max(v)) if v else None for k, v in cross0.items()},
        "min_adjacent_correlation": {
            "untangled": float(unt_corr.min()) if unt_corr.size else None,
            "strict": float(strict_corr.min()) if strict_corr.size else None,
        },
    }
    hist = stats.Histogram.from_samples(lam.ravel(), (edges,))
    expected = stats.bin_average_density(stats.marginal_density_fn(dims), (edges,))
    _write_csv(out / "hist_marginal.csv", ["lo", "hi", "density", "theory"],
               [_fmt_row([edges[b], edges[b + 1], hist.density[b], expected[b]])
                for b in range(args.bins)])
    summary["l1_marginal"] = float(np.sum(np.abs(hist.density - expected) * hist.volumes))
    summary["l1_marginal_n_samples"] = int(lam.size)

    if n == 2:
        e2 = np.linspace(0.0, 10.0, 21)
        h2 = stats.Histogram.from_samples(lam, (e2, e2))
        exp2 = stats.bin_average_density(stats.joint_density_fn(dims), (e2, e2))
        rows = [_fmt_row([e2[a], e2[a + 1], e2[b], e2[b + 1], h2.density[a, b], exp2[a, b]])
                for a in range(20) for b in range(20)]
        _write_csv(out / "hist_joint.csv",
                   ["lo1", "hi1", "lo2", "hi2", "density", "theory"], rows)
        summary["l1_joint"] = float(np.sum(np.abs(h2.density - exp2) * h2.volumes))

    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def _line(status: str, name: str, detail: str = ""):
    print(f"{status}\t{name}\t{detail}".rstrip())


def cmd_verify(args) -> int:
    path = read_path(args.input)
    cfg = _config(args)
    ok = True
    n = min(path.M, path.N)
    fwd = untangle_path(path, replace(cfg, oracle_check=n <= ORACLE_MAX_N), keep_strict=True)
    for k in sorted(fwd.blacklist):
        _line("WARN", "blacklist", f"k={k + 1}")

    rec = max(reconstruction_error(t, h) for t, h in zip(fwd.triplets, path.samples))
    good = rec < 1e-10
    ok &= good
    _line("PASS" if good else "FAIL", "reconstruction", f"max_rel_err={rec:.3e}")

    dev = max(float(np.max(np.abs(np.sort(np.abs(t.sigma))[::-1] - s.sigma.real)))
              for t, s in zip(fwd.triplets, fwd.strict))
    good = dev < 1e-10
    ok &= good
    _line("PASS" if good else "FAIL", "magnitude", f"max_dev={dev:.3e}")

    worst = max(r.swap_count for r in fwd.reports)
    good = worst <= n * (n - 1)
    ok &= good
    _line("PASS" if good else "FAIL", "swap_bound", f"max_swaps={worst} bound={n * (n - 1)}")

    if n <= ORACLE_MAX_N and path.K > 1:
        steps = fwd.reports[1:]
        for k, r in enumerate(steps, start=2):
            if not r.oracle_agrees:
                print(f"oracle discrepancy at k={k}: greedy {r.final_metric!r} "
                      f"oracle {r.oracle_metric!r}", file=sys.stderr)
        rate = sum(bool(r.oracle_agrees) for r in steps) / len(steps)
        good = rate >= 0.99
        ok &= good
        _line("PASS" if good else "FAIL", "greedy_vs_oracle",
              f"agreement={rate:.4f} steps={len(steps)}")

    if path.K >= 2:
        try:
            res = forward_reverse_residual(path, cfg)
        except NotApplicableError as exc:
            _line("SKIP", "forward_reverse", str(exc))
        else:
            good = res < 1e-8
            ok &= good
            _line("PASS" if good else "FAIL", "forward_reverse", f"residual={res:.3e}")
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {"generate": cmd_generate, "untangle": cmd_untangle,
            "analyze": cmd_analyze, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    warnings.simplefilter("always", DegenerateSampleWarning)
    try:
        return COMMANDS[args.command](args)
    except (FileFormatError, InvalidInputError, DegeneracyError,
            PathDegeneracyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
