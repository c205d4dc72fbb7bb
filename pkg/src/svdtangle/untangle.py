"""Matching SVDs of adjacent samples by column permutation and phase rotation.

Each target sample is first factored under the strict conditions, then its
singular columns are permuted and phase rotated so that they correlate as
well as possible with the reference factorization. The permutation is found
by a greedy pivot/swap search over ``|R_U| + |R_V|``; the phases then follow
in closed form.

Permutations are 0-based arrays: ``perm[i]`` is the strict column that ends
up in position ``i``. Phases are indexed by the output position.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (DegeneracyError, DegenerateSampleWarning, InvalidInputError,
                     NotApplicableError, PathDegeneracyError, PreconditionError)
from .pathmat import MatrixSamplePath, SvdTriplet, min_gap, svd_strict

TWO_PI = 2.0 * math.pi
DEGENERATE_POLICIES = ("warn-and-match", "fail")
EXHAUSTIVE_ORACLE_MAX_N = 8


def _wrap_angle(theta: np.ndarray) -> np.ndarray:
    theta = np.mod(theta, TWO_PI)
    theta[theta >= TWO_PI] = 0.0
    return theta


@dataclass(frozen=True)
class Relaxation:
    """Column permutation plus per-column phase rotations of ``U`` and ``V``."""

    perm: np.ndarray
    phases_u: np.ndarray
    phases_v: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=int)
        pu = np.asarray(self.phases_u, dtype=float)
        pv = np.asarray(self.phases_v, dtype=float)
        n = perm.size
        if perm.ndim != 1 or sorted(perm.tolist()) != list(range(n)):
            raise InvalidInputError(f"perm is not a permutation of 0..{n - 1}: {perm}")
        if pu.shape != (n,) or pv.shape != (n,):
            raise InvalidInputError("phase vectors must match the permutation length")
        if not (np.all(np.isfinite(pu)) and np.all(np.isfinite(pv))):
            raise InvalidInputError("phases must be finite")
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "phases_u", _wrap_angle(pu.copy()))
        object.__setattr__(self, "phases_v", _wrap_angle(pv.copy()))

    @classmethod
    def identity(cls, n: int) -> "Relaxation":
        return cls(np.arange(n), np.zeros(n), np.zeros(n))

    @property
    def n(self) -> int:
        return self.perm.size

    def is_identity(self, atol: float = 1e-10) -> bool:
        def near_zero(theta):
            return np.all(np.minimum(theta, TWO_PI - theta) <= atol)
        return (np.array_equal(self.perm, np.arange(self.n))
                and near_zero(self.phases_u) and near_zero(self.phases_v))


@dataclass(frozen=True)
class UntangleConfig:
    """Knobs for :func:`untangle_step` and :func:`untangle_path`.

    ``gap_epsilon=None`` uses ``1e-8 * sigma_max`` of each sample. Ties are
    improvements within ``tie_tol`` of the best strictly positive one.
    """

    gap_epsilon: Optional[float] = None
    weighting: bool = False
    degenerate_policy: str = "warn-and-match"
    oracle_check: bool = False
    tie_tol: float = 0.0
    relative_gap: float = 1e-8

    def __post_init__(self):
        if self.gap_epsilon is not None and not self.gap_epsilon >= 0:
            raise InvalidInputError("gap_epsilon must be >= 0")
        if self.degenerate_policy not in DEGENERATE_POLICIES:
            raise InvalidInputError(
                f"degenerate_policy must be one of {DEGENERATE_POLICIES}")
        if not self.tie_tol >= 0:
            raise InvalidInputError("tie_tol must be >= 0")

    def epsilon_for(self, strict: SvdTriplet) -> float:
        if self.gap_epsilon is not None:
            return float(self.gap_epsilon)
        return self.relative_gap * float(np.max(strict.sigma.real, initial=0.0))


@dataclass(frozen=True)
class StepReport:
    n: int
    swap_count: int
    final_metric: float
    avg_correlation: float
    degenerate: bool
    blacklisted: bool
    tie_encountered: bool
    relaxation: Relaxation
    oracle_metric: Optional[float] = None

    def __post_init__(self):
        if not 0 <= self.swap_count <= self.n * (self.n - 1):
            raise AssertionError(
                f"swap count {self.swap_count} exceeds n(n-1) = {self.n * (self.n - 1)}")

    @property
    def oracle_agrees(self) -> Optional[bool]:
        if self.oracle_metric is None:
            return None
        return metrics_agree(self.final_metric, self.oracle_metric)


@dataclass(frozen=True)
class UntangledPath:
    triplets: list
    reports: list
    blacklist: frozenset = field(default_factory=frozenset)
    strict: Optional[list] = None

    def __len__(self):
        return len(self.triplets)

    def sigma(self) -> np.ndarray:
        """Untangled (complex) singular values, shape ``(K, n)``."""
        return np.array([t.sigma for t in self.triplets])

    def strict_sigma(self) -> np.ndarray:
        if self.strict is None:
            raise PreconditionError("path was untangled without keep_strict=True")
        return np.array([t.sigma.real for t in self.strict])


class PermutationResult(NamedTuple):
    perm: np.ndarray
    swap_count: int
    metric: float
    tie: bool
    metric_trace: list


def metrics_agree(a: float, b: float, rtol: float = 1e-12) -> bool:
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def _check_square_pair(R_U, R_V):
    R_U = np.asarray(R_U)
    R_V = np.asarray(R_V)
    if R_U.ndim != 2 or R_U.shape[0] != R_U.shape[1] or R_U.shape != R_V.shape:
        raise InvalidInputError(
            f"R_U and R_V must be square and equal-sized, got {R_U.shape}, {R_V.shape}")
    return R_U, R_V


def permutation_metric(R_U, R_V, perm) -> float:
    """``sum_i |R_U[i, perm[i]]| + |R_V[i, perm[i]]|``."""
    rows = np.arange(len(perm))
    perm = np.asarray(perm)
    return float(np.sum(np.abs(R_U[rows, perm]) + np.abs(R_V[rows, perm])))


def correlation_matrices(ref: SvdTriplet, target: SvdTriplet,
                         weighting: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """All inner products ``u_i(ref)^H u_j(target)`` (and likewise for ``V``).

    Only the first ``n = min(M, N)`` columns take part. With ``weighting``
    each column is scaled by the square root of its own singular value
    magnitude before the products are taken.
    """
    if ref.shape != target.shape:
        raise InvalidInputError(f"shape mismatch: {ref.shape} vs {target.shape}")
    n = ref.n
    Ur, Vr = ref.U[:, :n], ref.V[:, :n]
    Ut, Vt = target.U[:, :n], target.V[:, :n]
    if weighting:
        wr = np.sqrt(np.abs(ref.sigma))
        wt = np.sqrt(np.abs(target.sigma))
        Ur, Vr = Ur * wr, Vr * wr
        Ut, Vt = Ut * wt, Vt * wt
    return Ur.conj().T @ Ut, Vr.conj().T @ Vt


def swap_improvement(R_U, R_V, i: int, j: int) -> float:
    """Gain in ``tr|R_U| + tr|R_V|`` from interchanging target columns ``i`` and ``j``."""
    R_U, R_V = _check_square_pair(R_U, R_V)
    n = R_U.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidInputError(f"indices ({i}, {j}) out of range for n={n}")
    if i == j:
        return 0.0
    total = 0.0
    for R in (R_U, R_V):
        a = np.abs(R)
        total += (a[i, j] + a[j, i]) - (a[i, i] + a[j, j])
    return float(total)


def find_permutation(R_U, R_V, tie_tol: float = 0.0,
                     max_swaps: Optional[int] = None) -> PermutationResult:
    """Greedy pivot/swap maximization of ``tr|R_U P| + tr|R_V P|``.

    Pivots cycle through ``0..n-1``; each pivot is swapped with the first
    column giving the largest strictly positive improvement. Stops after a
    full cycle without a swap.
    """
    R_U, R_V = _check_square_pair(R_U, R_V)
    n = R_U.shape[0]
    A_U = np.abs(R_U).astype(float)
    A_V = np.abs(R_V).astype(float)
    perm = np.arange(n)
    swaps = 0
    tie = False
    trace = [float(np.trace(A_U) + np.trace(A_V))]
    # the metric strictly increases, so this only guards against roundoff cycles
    limit = max_swaps if max_swaps is not None else max(math.factorial(min(n, 10)), 100)

    swapped = True
    while swapped:
        swapped = False
        for i in range(n):
            dU = (A_U[i, :] + A_U[:, i]) - (A_U[i, i] + np.diagonal(A_U))
            dV = (A_V[i, :] + A_V[:, i]) - (A_V[i, i] + np.diagonal(A_V))
            gain = dU + dV
            gain[i] = -np.inf
            j = int(np.argmax(gain))
            best = gain[j]
            if not best > 0:
                continue
            if np.count_nonzero(gain >= best - tie_tol) > 1:
                tie = True
            A_U[:, [i, j]] = A_U[:, [j, i]]
            A_V[:, [i, j]] = A_V[:, [j, i]]
            perm[[i, j]] = perm[[j, i]]
            swaps += 1
            swapped = True
            trace.append(float(np.trace(A_U) + np.trace(A_V)))
            if swaps > limit:
                raise RuntimeError("swap search failed to terminate")
    return PermutationResult(perm, swaps, permutation_metric(R_U, R_V, perm), tie, trace)


def assignment_oracle(R_U, R_V) -> tuple[np.ndarray, float]:
    """Exact maximizer of ``sum_i |R_U[i, p(i)]| + |R_V[i, p(i)]|``.

    Exhaustive for ``n <= 8``, Hungarian method beyond that.
    """
    R_U, R_V = _check_square_pair(R_U, R_V)
    n = R_U.shape[0]
    if n <= EXHAUSTIVE_ORACLE_MAX_N:
        best_perm, best = None, -np.inf
        for p in itertools.permutations(range(n)):
            m = permutation_metric(R_U, R_V, p)
            if m > best:
                best_perm, best = p, m
        return np.array(best_perm), best
    cost = np.abs(R_U) + np.abs(R_V)
    _, cols = linear_sum_assignment(cost, maximize=True)
    return cols, permutation_metric(R_U, R_V, cols)


class PhaseResult(NamedTuple):
    phases_u: np.ndarray
    phases_v: np.ndarray
    degenerate: bool


def compute_phases(ref: SvdTriplet, permuted_target: SvdTriplet) -> PhaseResult:
    """Rotations making each diagonal correlation real and non-negative.

    A zero inner product has no defined angle; its phase is set to 0 and the
    result is flagged degenerate.
    """
    if ref.shape != permuted_target.shape:
        raise InvalidInputError("shape mismatch between reference and target")
    n = ref.n
    du = np.einsum("ij,ij->j", ref.U[:, :n].conj(), permuted_target.U[:, :n])
    dv = np.einsum("ij,ij->j", ref.V[:, :n].conj(), permuted_target.V[:, :n])
    zero = (du == 0) | (dv == 0)
    pu = np.where(du == 0, 0.0, -np.angle(du))
    pv = np.where(dv == 0, 0.0, -np.angle(dv))
    return PhaseResult(_wrap_angle(pu), _wrap_angle(pv), bool(np.any(zero)))


def apply_relaxation(t: SvdTriplet, r: Relaxation) -> SvdTriplet:
    """Permute and rotate the singular columns of ``t`` without changing ``U S V^H``.

    Output column ``i`` is input column ``perm[i]`` times ``exp(j*phase_i)``;
    the singular value picks up ``exp(j*(phase_v_i - phase_u_i))``. Surplus
    null space columns are left untouched.
    """
    n = t.n
    if r.n != n:
        raise InvalidInputError(f"relaxation has size {r.n}, triplet has n={n}")
    rot_u = np.exp(1j * r.phases_u)
    rot_v = np.exp(1j * r.phases_v)
    U = t.U.copy()
    V = t.V.copy()
    U[:, :n] = t.U[:, r.perm] * rot_u
    V[:, :n] = t.V[:, r.perm] * rot_v
    sigma = t.sigma[r.perm] * (rot_v * rot_u.conj())
    S = np.zeros_like(t.S)
    S[np.arange(n), np.arange(n)] = sigma
    return SvdTriplet(U, S, V, canonical=False)


def average_correlation(ref: SvdTriplet, t: SvdTriplet) -> float:
    """``Re tr(U_R^H U + V_R^H V) / 2n`` over the singular columns."""
    n = ref.n
    du = np.einsum("ij,ij->j", ref.U[:, :n].conj(), t.U[:, :n])
    dv = np.einsum("ij,ij->j", ref.V[:, :n].conj(), t.V[:, :n])
    return float(np.real(np.sum(du) + np.sum(dv)) / (2 * n))


def _is_degenerate(strict: SvdTriplet, cfg: UntangleConfig) -> bool:
    if strict.n < 2:
        return False
    eps = cfg.epsilon_for(strict)
    if cfg.gap_epsilon is None and eps == 0.0:
        # all-zero sample: every singular value is repeated
        return True
    return min_gap(strict) < eps


def _flag(cfg: UntangleConfig, reason: str, index: Optional[int]):
    where = f"sample {index}" if index is not None else "sample"
    if cfg.degenerate_policy == "fail":
        raise DegeneracyError(f"{where}: {reason}")
    warnings.warn(f"{where}: {reason}; matched anyway and blacklisted as reference",
                  DegenerateSampleWarning, stacklevel=3)


def match_to_reference(ref: SvdTriplet, strict: SvdTriplet, cfg: UntangleConfig,
                       index: Optional[int] = None) -> tuple[SvdTriplet, StepReport]:
    """Relax an already computed strict triplet to match ``ref``."""
    if ref.shape != strict.shape:
        raise InvalidInputError(f"shape mismatch: {ref.shape} vs {strict.shape}")
    degenerate = _is_degenerate(strict, cfg)
    if degenerate:
        _flag(cfg, f"singular value gap {min_gap(strict):.3e} below threshold", index)

    R_U, R_V = correlation_matrices(ref, strict, cfg.weighting)
    found = find_permutation(R_U, R_V, tie_tol=cfg.tie_tol)
    if found.tie:
        _flag(cfg, "tie between column swap improvements", index)

    n = strict.n
    permuted = apply_relaxation(strict, Relaxation(found.perm, np.zeros(n), np.zeros(n)))
    phases = compute_phases(ref, permuted)
    if phases.degenerate and not degenerate:
        degenerate = True
        _flag(cfg, "zero correlation between matched singular vectors", index)
    relax = Relaxation(found.perm, phases.phases_u, phases.phases_v)
    out = apply_relaxation(strict, relax)

    oracle_metric = None
    if cfg.oracle_check:
        oracle_metric = assignment_oracle(R_U, R_V)[1]

    report = StepReport(
        n=n,
        swap_count=found.swap_count,
        final_metric=found.metric,
        avg_correlation=average_correlation(ref, out),
        degenerate=degenerate,
        blacklisted=degenerate or found.tie,
        tie_encountered=found.tie,
        relaxation=relax,
        oracle_metric=oracle_metric,
    )
    return out, report


def untangle_step(ref: SvdTriplet, H, cfg: UntangleConfig = UntangleConfig(),
                  index: Optional[int] = None) -> tuple[SvdTriplet, StepReport]:
    """Factor ``H`` and match its SVD to the reference triplet."""
    return match_to_reference(ref, svd_strict(H), cfg, index)


def _seed_report(seed: SvdTriplet, cfg: UntangleConfig) -> StepReport:
    degenerate = _is_degenerate(seed, cfg)
    if degenerate:
        _flag(cfg, "seed singular value gap below threshold", 0)
    R_U, R_V = correlation_matrices(seed, seed, cfg.weighting)
    n = seed.n
    metric = permutation_metric(R_U, R_V, np.arange(n))
    return StepReport(n, 0, metric, 1.0, degenerate, degenerate, False,
                      Relaxation.identity(n),
                      oracle_metric=metric if cfg.oracle_check else None)


def untangle_path(path: MatrixSamplePath, cfg: UntangleConfig = UntangleConfig(),
                  keep_strict: bool = False) -> UntangledPath:
    """Untangle a whole sample path with a sliding reference.

    The seed is the strict SVD of the first sample. Each later sample is
    matched against the most recent sample that is not blacklisted.
    ``reports[0]`` describes the seed.
    """
    seed = svd_strict(path.samples[0])
    triplets = [seed]
    strict = [seed] if keep_strict else None
    reports = [_seed_report(seed, cfg)]
    blacklist = set()
    ref = seed
    if reports[0].blacklisted:
        blacklist.add(0)
        ref = None
    for k in range(1, path.K):
        if ref is None:
            raise PathDegeneracyError(f"no usable reference for sample {k}")
        s = svd_strict(path.samples[k])
        t, rep = match_to_reference(ref, s, cfg, index=k)
        triplets.append(t)
        reports.append(rep)
        if keep_strict:
            strict.append(s)
        if rep.blacklisted:
            blacklist.add(k)
        else:
            ref = t
    return UntangledPath(triplets, reports, frozenset(blacklist), strict)


def forward_reverse_residual(path: MatrixSamplePath,
                             cfg: UntangleConfig = UntangleConfig()) -> float:
    """Largest deviation between forward and re-aligned reverse untangled σ paths.

    The reverse run is derotated so its singular values at the first sample
    are real and non-negative, then its channels are mapped onto the forward
    channels by matching those magnitudes.
    """
    if path.K < 2:
        raise PreconditionError("need at least two samples")
    fwd = untangle_path(path, cfg)
    rev = untangle_path(path.reversed(), cfg)
    if fwd.blacklist or rev.blacklist:
        raise NotApplicableError(
            f"blacklisted samples present (forward {sorted(fwd.blacklist)}, "
            f"reverse {sorted(rev.blacklist)})")
    sf = fwd.sigma()
    sr = rev.sigma()[::-1]
    derotate = np.exp(-1j * np.angle(sr[0]))
    order = np.argsort(-np.abs(sr[0]), kind="stable")
    aligned = (sr * derotate)[:, order]
    return float(np.max(np.abs(sf - aligned)))
