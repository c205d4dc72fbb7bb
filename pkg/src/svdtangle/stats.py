"""Covariance estimators, Wishart eigenvalue densities and histogram comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import InvalidInputError, PreconditionError
from .pathmat import SvdTriplet


class DegenerateSeriesError(ValueError):
    """Series with zero variance; its normalized covariance is undefined."""


@dataclass(frozen=True)
class CovarianceSeries:
    lags: np.ndarray
    values: np.ndarray
    sample_interval_s: float = 1.0
    normalized: bool = True

    @property
    def tau_s(self) -> np.ndarray:
        return self.lags * self.sample_interval_s

    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


def _series(x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 1:
        raise InvalidInputError("expected a 1-D series")
    return x.astype(complex)


def _raw_cov(a: np.ndarray, b: np.ndarray, max_lag: int) -> np.ndarray:
    K = a.size
    a = a - a.mean()
    b = b - b.mean()
    return np.array([np.sum(a[:K - t] * b[t:].conj()) / (K - t)
                     for t in range(max_lag + 1)])


def autocovariance(x, max_lag: int, sample_interval_s: float = 1.0) -> CovarianceSeries:
    """Mean-removed auto-covariance normalized by its lag-0 value.

    ``c(t) = 1/(K-t) sum_k (x_k - m)(x_{k+t} - m)^*``.
    """
    x = _series(x)
    if not 0 <= max_lag < x.size:
        raise PreconditionError(f"need 0 <= max_lag < K (K={x.size}, max_lag={max_lag})")
    c = _raw_cov(x, x, max_lag)
    var = c[0].real
    if var <= 0:
        raise DegenerateSeriesError("series has zero variance")
    c = c / var
    c[0] = 1.0
    return CovarianceSeries(np.arange(max_lag + 1), c, sample_interval_s, True)


def crosscovariance(a, b, max_lag: int,
                    sample_interval_s: float = 1.0) -> CovarianceSeries:
    """Mean-removed cross-covariance scaled by ``sqrt(var_a * var_b)``."""
    a, b = _series(a), _series(b)
    if a.size != b.size:
        raise InvalidInputError("series lengths differ")
    if not 0 <= max_lag < a.size:
        raise PreconditionError(f"need 0 <= max_lag < K (K={a.size}, max_lag={max_lag})")
    va = _raw_cov(a, a, 0)[0].real
    vb = _raw_cov(b, b, 0)[0].real
    if va <= 0 or vb <= 0:
        raise DegenerateSeriesError("series has zero variance")
    c = _raw_cov(a, b, max_lag)
    return CovarianceSeries(np.arange(max_lag + 1), c / math.sqrt(va * vb),
                            sample_interval_s, True)


def crossing_time(magnitudes, sample_interval_s: float, level: float = 0.7) -> float:
    """First time a decaying covariance magnitude drops below ``level``.

    Linear interpolation between the bracketing lags; ``nan`` if it never does.
    """
    m = np.asarray(magnitudes, dtype=float)
    below = np.nonzero(m < level)[0]
    if below.size == 0:
        return float("nan")
    t = int(below[0])
    if t == 0:
        return 0.0
    frac = (m[t - 1] - level) / (m[t - 1] - m[t])
    return float((t - 1 + frac) * sample_interval_s)


def avg_adjacent_correlation(triplets: Sequence[SvdTriplet]) -> np.ndarray:
    """``Re tr(U_{k-1}^H U_k + V_{k-1}^H V_k) / 2n`` for each adjacent pair.

    Accepts the triplets of an untangled path or a list of strict SVDs.
    """
    if len(triplets) < 2:
        raise PreconditionError("need at least two triplets")
    out = np.empty(len(triplets) - 1)
    for k in range(1, len(triplets)):
        a, b = triplets[k - 1], triplets[k]
        n = a.n
        tu = np.sum(a.U[:, :n].conj() * b.U[:, :n])
        tv = np.sum(a.V[:, :n].conj() * b.V[:, :n])
        out[k - 1] = (tu + tv).real / (2 * n)
    return out


def laguerre(n: int, k: int, x):
    """Associated Laguerre polynomial ``L_n^k(x)`` by the three-term recurrence."""
    if n < 0 or k < 0:
        raise InvalidInputError("n and k must be >= 0")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + k - x
    for m in range(1, n):
        prev, cur = cur, ((2 * m + 1 + k - x) * cur - (m + k) * prev) / (m + 1)
    return cur if cur.ndim else float(cur)


@dataclass(frozen=True)
class WishartDims:
    """Dimensions of ``W = H H^H`` ordered so that ``M <= N``."""

    M: int
    N: int

    def __post_init__(self):
        M, N = int(self.M), int(self.N)
        if M < 1 or N < 1:
            raise InvalidInputError("M and N must be >= 1")
        if N < M:
            M, N = N, M
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "N", N)


def _check_nonneg(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise InvalidInputError("eigenvalues must be finite and >= 0")
    return lam


def wishart_joint_pdf(lambdas, d: WishartDims):
    """Joint density of the unordered eigenvalues of a complex Wishart matrix.

    ``lambdas`` has ``M`` entries along its last axis; leading axes batch.
    """
    lam = _check_nonneg(lambdas)
    M, N = d.M, d.N
    if lam.ndim == 0 or lam.shape[-1] != M:
        raise InvalidInputError(f"expected {M} eigenvalues, got shape {lam.shape}")
    log_norm = -gammaln(M + 1) - sum(gammaln(M - i + 1) + gammaln(N - i + 1)
                                     for i in range(1, M + 1))
    vdm = np.ones(lam.shape[:-1])
    for i in range(M):
        for j in range(i + 1, M):
            vdm = vdm * (lam[..., i] - lam[..., j]) ** 2
    power = np.prod(lam ** (N - M), axis=-1)
    out = np.exp(log_norm - lam.sum(axis=-1)) * power * vdm
    return out if out.ndim else float(out)


def wishart_marginal_pdf(lam, d: WishartDims):
    """Marginal density of one unordered eigenvalue of a complex Wishart matrix.

    Uses the ``lambda^(N-M)`` weight, the exponent that matches the joint
    density and normalizes to one.
    """
    lam = _check_nonneg(lam)
    M, N = d.M, d.N
    a = N - M
    total = np.zeros_like(lam)
    for i in range(M):
        coef = math.exp(gammaln(i + 1) - gammaln(i + a + 1))
        total = total + coef * laguerre(i, a, lam) ** 2
    out = total * lam ** a * np.exp(-lam) / M
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Histogram:
    """Histogram over explicit bin edges (one array per dim).

    Densities are normalized by the total sample count, so samples outside
    the domain lower ``integral()`` just as the true density's tail would.
    """

    edges: tuple
    density: np.ndarray
    counts: np.ndarray

    @classmethod
    def from_samples(cls, samples, edges) -> "Histogram":
        samples = np.asarray(samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        edges = tuple(np.asarray(e, dtype=float) for e in edges)
        if len(edges) != samples.shape[1]:
            raise InvalidInputError("need one edge array per sample dimension")
        for e in edges:
            if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0):
                raise InvalidInputError("bin edges must be strictly increasing, >= 2 long")
        counts, _ = np.histogramdd(samples, bins=edges)
        if counts.sum() == 0:
            raise InvalidInputError("no samples fall inside the bin domain")
        volume = cls._volumes(edges)
        return cls(edges, counts / (samples.shape[0] * volume), counts)

    @staticmethod
    def _volumes(edges) -> np.ndarray:
        widths = [np.diff(e) for e in edges]
        vol = widths[0]
        for w in widths[1:]:
            vol = np.multiply.outer(vol, w)
        return vol

    @property
    def volumes(self) -> np.ndarray:
        return self._volumes(self.edges)

    def integral(self) -> float:
        return float(np.sum(self.density * self.volumes))


def bin_average_density(density_fn: Callable, edges, order: int = 8) -> np.ndarray:
    """Average of ``density_fn`` over every bin by tensor Gauss-Legendre quadrature.

    ``density_fn`` takes an array of points with shape ``(P, d)``.
    """
    edges = tuple(np.asarray(e, dtype=float) for e in edges)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    # per-dimension: (bins, order) point coordinates and normalized weights
    pts, wts = [], []
    for e in edges:
        lo, hi = e[:-1, None], e[1:, None]
        pts.append(0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes)
        wts.append(np.broadcast_to(0.5 * weights, pts[-1].shape))
    shape = tuple(e.size - 1 for e in edges)
    out = np.empty(shape)
    for idx in np.ndindex(*shape):
        grids = np.meshgrid(*[pts[d][idx[d]] for d in range(len(edges))], indexing="ij")
        wgrid = np.ones((order,) * len(edges))
        for d in range(len(edges)):
            wshape = [1] * len(edges)
            wshape[d] = order
            wgrid = wgrid * wts[d][idx[d]].reshape(wshape)
        P = np.stack([g.ravel() for g in grids], axis=1)
        out[idx] = np.sum(wgrid.ravel() * np.asarray(density_fn(P), dtype=float))
    return out


def histogram_fit(samples, density_fn: Callable, bins) -> float:
    """L1 distance between the sample histogram and the bin-averaged density.

    ``bins`` is a sequence of edge arrays (one per dimension) or a single
    edge array for 1-D samples. ``density_fn`` maps ``(P, d)`` points to
    densities.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] < 1000:
        raise PreconditionError("histogram_fit needs at least 1000 samples")
    if isinstance(bins, np.ndarray) and bins.ndim == 1 or (
            len(bins) > 0 and np.isscalar(bins[0])):
        bins = (bins,)
    hist = Histogram.from_samples(samples, bins)
    expected = bin_average_density(density_fn, hist.edges)
    return float(np.sum(np.abs(hist.density - expected) * hist.volumes))


def marginal_density_fn(d: WishartDims) -> Callable:
    return lambda P: wishart_marginal_pdf(P[:, 0], d)


def joint_density_fn(d: WishartDims) -> Callable:
    return lambda P: wishart_joint_pdf(P, d)
