import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from svdtangle import stats
from svdtangle.errors import InvalidInputError, PreconditionError
from svdtangle.pathmat import MatrixSamplePath, svd_strict
from svdtangle.stats import (DegenerateSeriesError, Histogram, WishartDims, autocovariance,
                             avg_adjacent_correlation, crosscovariance, crossing_time,
                             histogram_fit, laguerre, wishart_joint_pdf, wishart_marginal_pdf)
from svdtangle.untangle import untangle_path

from conftest import random_complex, random_unitary


def laguerre_by_sum(n, k, x):
    return math.fsum((-1) ** m * math.factorial(n + k)
                     / (math.factorial(n - m) * math.factorial(k + m) * math.factorial(m))
                     * x ** m for m in range(n + 1))


def inverse_cdf_sampler(pdf, hi, rng, size, grid=200001):
    x = np.linspace(0.0, hi, grid)
    cdf = integrate.cumulative_trapezoid(pdf(x), x, initial=0.0)
    cdf /= cdf[-1]
    return np.interp(rng.uniform(size=size), cdf, x)


# covariance estimators

def test_pure_tone_autocov():
    k = np.arange(4000)
    x = 2.0 + np.exp(2j * np.pi * 0.01 * k)
    c = autocovariance(x, 30)
    np.testing.assert_allclose(c.magnitude(), 1.0, atol=0.01)
    assert c.values[0] == 1.0


def test_white_noise_autocov(rng):
    x = random_complex(rng, 10000, 1)[:, 0]
    c = autocovariance(x, 20)
    assert np.all(c.magnitude()[1:] < 0.05)


def test_autocov_matches_direct_formula(rng):
    x = random_complex(rng, 200, 1)[:, 0]
    c = autocovariance(x, 5, sample_interval_s=0.5)
    m = x.mean()
    raw = [np.mean((x[:200 - t] - m) * np.conj(x[t:] - m)) for t in range(6)]
    np.testing.assert_allclose(c.values, np.array(raw) / raw[0].real, atol=1e-13)
    np.testing.assert_allclose(c.tau_s, 0.5 * np.arange(6))


def test_constant_series_is_degenerate():
    with pytest.raises(DegenerateSeriesError):
        autocovariance(np.ones(100), 5)
    with pytest.raises(DegenerateSeriesError):
        crosscovariance(np.ones(100), np.arange(100.0), 5)


def test_max_lag_precondition():
    with pytest.raises(PreconditionError):
        autocovariance(np.arange(10.0), 10)


def test_cross_of_self_equals_auto(rng):
    a = random_complex(rng, 500, 1)[:, 0]
    np.testing.assert_allclose(crosscovariance(a, a, 10).values,
                               autocovariance(a, 10).values, atol=1e-14)


def test_independent_white_series_cross(rng):
    a, b = random_complex(rng, 10000, 2).T
    assert abs(crosscovariance(a, b, 0).values[0]) < 0.05


def test_crossing_time_interpolates():
    assert crossing_time([1.0, 0.8, 0.6, 0.2], 0.1) == pytest.approx(0.15)
    assert math.isnan(crossing_time([1.0, 0.9], 0.1))


# adjacent correlation

def test_adjacent_correlation_constant_path(rng):
    t = svd_strict(random_complex(rng, 3, 3))
    np.testing.assert_allclose(avg_adjacent_correlation([t] * 5), 1.0, atol=1e-12)


def test_adjacent_correlation_independent(rng):
    from svdtangle.pathmat import SvdTriplet
    S = np.diag([3.0, 2.0, 1.0]).astype(complex)
    trips = [SvdTriplet(random_unitary(rng, 3), S, random_unitary(rng, 3)) for _ in range(2000)]
    vals = avg_adjacent_correlation(trips)
    assert abs(vals.mean()) < 0.02


def test_adjacent_correlation_of_short_path(short_untangled):
    vals = avg_adjacent_correlation(short_untangled.triplets)
    reported = [r.avg_correlation for r in short_untangled.reports[1:]]
    np.testing.assert_allclose(vals, reported, atol=1e-12)


def test_adjacent_correlation_needs_two(rng):
    with pytest.raises(PreconditionError):
        avg_adjacent_correlation([svd_strict(np.eye(2))])


# Laguerre polynomials

def test_laguerre_examples():
    assert laguerre(0, 3, 7.5) == 1.0
    assert laguerre(1, 0, 2.0) == -1.0
    assert laguerre(2, 1, 3.0) == pytest.approx(-1.5, abs=1e-14)
    assert laguerre_by_sum(2, 1, 3.0) == pytest.approx(-1.5, abs=1e-14)


@pytest.mark.parametrize("n,k", list(itertools.product(range(8), range(4))))
def test_laguerre_against_explicit_sum(n, k):
    for x in (0.0, 0.3, 2.0, 7.0, 15.0):
        ref = laguerre_by_sum(n, k, x)
        assert laguerre(n, k, x) == pytest.approx(ref, rel=1e-9, abs=1e-9)
        assert laguerre(n, k, x) == pytest.approx(special.eval_genlaguerre(n, k, x),
                                                  rel=1e-9, abs=1e-9)


def test_laguerre_recurrence():
    for n in range(1, 10):
        for k in range(6):
            for x in np.linspace(0, 20, 41):
                lhs = (n + 1) * laguerre(n + 1, k, x)
                rhs = (2 * n + k + 1 - x) * laguerre(n, k, x) - (n + k) * laguerre(n - 1, k, x)
                assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


def test_laguerre_vectorized():
    x = np.linspace(0, 5, 7)
    np.testing.assert_allclose(laguerre(3, 2, x), [laguerre(3, 2, v) for v in x])


# Wishart densities

def test_dims_swap():
    d = WishartDims(3, 2)
    assert (d.M, d.N) == (2, 3)
    with pytest.raises(InvalidInputError):
        WishartDims(0, 2)


def test_joint_repeated_eigenvalue_is_zero():
    assert wishart_joint_pdf([1.3, 1.3, 0.2], WishartDims(3, 4)) == 0.0


def test_joint_scalar_case():
    for lam in (0.0, 0.5, 3.0):
        assert wishart_joint_pdf([lam], WishartDims(1, 1)) == pytest.approx(math.exp(-lam))


def test_joint_integrates_to_one():
    d = WishartDims(2, 2)
    total, _ = integrate.dblquad(lambda y, x: wishart_joint_pdf([x, y], d), 0, 40, 0, 40,
                                 epsabs=1e-10)
    assert abs(total - 1.0) < 1e-4


def test_joint_mass_on_plot_domain():
    # the [0, 10]^2 window misses the tail mass 1 - P(both <= 10)
    d = WishartDims(2, 2)
    inside, _ = integrate.dblquad(lambda y, x: wishart_joint_pdf([x, y], d), 0, 10, 0, 10)
    tail_one, _ = integrate.quad(lambda x: wishart_marginal_pdf(x, d), 10, np.inf)
    assert 1.0 - inside == pytest.approx(2 * tail_one, abs=1e-4)


@settings(max_examples=50, deadline=None)
@given(lams=st.lists(st.floats(0, 20), min_size=3, max_size=3), n=st.integers(3, 5))
def test_joint_symmetric(lams, n):
    d = WishartDims(3, n)
    base = wishart_joint_pdf(lams, d)
    for p in itertools.permutations(lams):
        assert wishart_joint_pdf(list(p), d) == pytest.approx(base, rel=1e-12, abs=1e-300)


def test_negative_eigenvalue_rejected():
    with pytest.raises(InvalidInputError):
        wishart_joint_pdf([1.0, -0.1], WishartDims(2, 2))
    with pytest.raises(InvalidInputError):
        wishart_marginal_pdf(-1.0, WishartDims(2, 3))


def test_marginal_scalar_case():
    for lam in (0.0, 1.0, 4.0):
        assert wishart_marginal_pdf(lam, WishartDims(1, 1)) == pytest.approx(math.exp(-lam))


def test_marginal_square_has_no_power_term():
    d = WishartDims(2, 2)
    lam = 1.7
    expected = 0.5 * (1 + (1 - lam) ** 2) * math.exp(-lam)
    assert wishart_marginal_pdf(lam, d) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("M,N", [(2, 3), (1, 4), (3, 3), (2, 5), (4, 6)])
def test_marginal_integrates_to_one(M, N):
    total, _ = integrate.quad(lambda x: wishart_marginal_pdf(x, WishartDims(M, N)), 0, np.inf,
                              epsabs=1e-12, limit=200)
    assert abs(total - 1.0) < 1e-6


def test_flipped_exponent_does_not_normalize():
    # lambda^(M-N) instead of lambda^(N-M) for M=2, N=3
    d = WishartDims(2, 3)
    def flipped(x):
        return wishart_marginal_pdf(x, d) / x ** 2
    total, _ = integrate.quad(flipped, 1e-3, np.inf, limit=200)
    assert abs(total - 1.0) > 0.1


@pytest.mark.parametrize("N", [2, 3])
def test_marginal_is_joint_integrated(N):
    d = WishartDims(2, N)
    for lam in (0.2, 1.0, 2.5, 6.0):
        integral, _ = integrate.quad(lambda y: wishart_joint_pdf([lam, y], d), 0, np.inf,
                                     epsabs=1e-12)
        assert abs(integral - wishart_marginal_pdf(lam, d)) < 1e-4


def test_marginal_matches_sampled_wishart(rng):
    # direct Monte Carlo of i.i.d. CN(0,1) matrices
    d = WishartDims(2, 3)
    lam = np.concatenate([np.linalg.svd(random_complex(rng, 2, 3), compute_uv=False) ** 2
                          for _ in range(20000)])
    assert histogram_fit(lam, stats.marginal_density_fn(d), np.linspace(0, 15, 31)) < 0.05


# histograms

def test_histogram_normalization(rng):
    x = rng.exponential(size=5000)
    h = Histogram.from_samples(x, (np.linspace(0, 4, 17),))
    assert h.integral() == pytest.approx(np.mean(x < 4), abs=1e-12)
    h2 = Histogram.from_samples(rng.uniform(0, 1, (5000, 2)),
                                (np.linspace(0, 1, 5), np.linspace(0, 1, 9)))
    assert h2.integral() == pytest.approx(1.0, abs=1e-9)


def test_histogram_rejects_bad_edges(rng):
    with pytest.raises(InvalidInputError):
        Histogram.from_samples(rng.uniform(size=2000), (np.array([0.0, 0.0, 1.0]),))
    with pytest.raises(InvalidInputError):
        histogram_fit(rng.uniform(size=2000) + 5, lambda P: np.ones(len(P)),
                      np.linspace(0, 1, 5))


def test_histogram_fit_needs_samples(rng):
    with pytest.raises(PreconditionError):
        histogram_fit(rng.uniform(size=10), lambda P: np.ones(len(P)), np.linspace(0, 1, 5))


def test_histogram_fit_self_consistency(rng):
    d = WishartDims(2, 3)
    pdf = lambda x: wishart_marginal_pdf(x, d)
    lam = inverse_cdf_sampler(pdf, 40.0, rng, 100000)
    assert histogram_fit(lam, stats.marginal_density_fn(d), np.linspace(0, 15, 31)) < 0.05


def test_histogram_fit_shifted_density(rng):
    edges = np.linspace(0, 10, 41)
    f = lambda P: np.exp(-P[:, 0])
    g = lambda P: np.exp(-(P[:, 0] - 1.0)) * (P[:, 0] >= 1.0)
    samples = 1.0 + rng.exponential(size=50000)
    fit = histogram_fit(samples, f, edges)
    binned_gap = np.sum(np.abs(stats.bin_average_density(f, (edges,))
                               - stats.bin_average_density(g, (edges,)))) * 0.25
    noise = histogram_fit(samples, g, edges)
    assert fit >= binned_gap - noise
    # exact L1 gap between the two exponentials is 2(1 - e^-1)
    assert binned_gap <= 2 * (1 - math.exp(-1)) + 1e-6


def test_bin_average_density_exact_for_polynomial():
    e = np.array([0.0, 1.0, 3.0])
    avg = stats.bin_average_density(lambda P: P[:, 0] ** 3, (e,))
    np.testing.assert_allclose(avg, [0.25, (81 - 1) / 4 / 2])


def test_untangled_marginal_fit():
    from svdtangle.synth import SynthParams, generate_path
    p = generate_path(SynthParams(M=2, N=3, num_samples=4000, seed=21))
    lam = np.abs(untangle_path(p).sigma()) ** 2
    assert histogram_fit(lam.ravel(), stats.marginal_density_fn(WishartDims(2, 3)),
                         np.linspace(0, 15, 31)) < 0.15
