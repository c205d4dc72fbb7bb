import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from svdtangle.errors import InvalidInputError, PreconditionError
from svdtangle.pathmat import (MatrixSamplePath, SvdTriplet, min_gap, reconstruct,
                               reconstruction_error, svd_strict)
from svdtangle.untangle import Relaxation, apply_relaxation

from conftest import random_complex


def test_diagonal_matrix():
    t = svd_strict(np.diag([3.0, 2.0, 1.0]))
    np.testing.assert_allclose(t.sigma, [3, 2, 1])
    np.testing.assert_allclose(t.U, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(t.V, np.eye(3), atol=1e-15)
    assert t.canonical


def test_zero_matrix_has_zero_gap():
    t = svd_strict(np.zeros((2, 2)))
    np.testing.assert_array_equal(t.sigma, [0, 0])
    assert min_gap(t) == 0.0
    assert np.all(reconstruct(t) == 0)


def test_random_reconstruction(rng):
    H = random_complex(rng, 3, 3)
    t = svd_strict(H)
    # oracle: multiply the factors back by hand
    direct = sum(t.sigma[i] * np.outer(t.U[:, i], t.V[:, i].conj()) for i in range(3))
    assert np.linalg.norm(direct - H) / np.linalg.norm(H) < 1e-10
    assert reconstruction_error(t, H) < 1e-10


def test_phase_convention(rng):
    t = svd_strict(random_complex(rng, 4, 4))
    for i in range(4):
        lead = t.U[np.argmax(np.abs(t.U[:, i])), i]
        assert abs(lead.imag) < 1e-14 and lead.real > 0
    assert np.all(t.sigma.imag == 0)


@pytest.mark.parametrize("shape", [(2, 5), (5, 2), (1, 4), (4, 1), (3, 3)])
def test_rectangular(rng, shape):
    H = random_complex(rng, *shape)
    t = svd_strict(H)
    assert t.U.shape == (shape[0],) * 2 and t.V.shape == (shape[1],) * 2
    assert t.is_unitary()
    assert reconstruction_error(t, H) < 1e-10
    s = t.sigma.real
    assert np.all(s >= 0) and np.all(np.diff(s) <= 0)


def test_non_finite_rejected():
    with pytest.raises(InvalidInputError):
        svd_strict(np.array([[1.0, np.nan], [0.0, 1.0]]))
    with pytest.raises(InvalidInputError):
        svd_strict(np.array([[np.inf]]))


def test_deterministic(rng):
    H = random_complex(rng, 3, 4)
    a, b = svd_strict(H), svd_strict(H.copy())
    for x, y in ((a.U, b.U), (a.S, b.S), (a.V, b.V)):
        assert x.tobytes() == y.tobytes()


def test_reconstruct_after_relaxation(rng):
    H = random_complex(rng, 3, 3)
    t = svd_strict(H)
    r = Relaxation(rng.permutation(3), rng.uniform(0, 6.28, 3), rng.uniform(0, 6.28, 3))
    assert reconstruction_error(apply_relaxation(t, r), H) < 1e-10


def test_reconstruct_shape_mismatch():
    with pytest.raises(InvalidInputError):
        SvdTriplet(np.eye(2), np.zeros((3, 3)), np.eye(3))


@pytest.mark.parametrize("sigma, expected", [
    ([3.0, 2.0, 1.0], 1.0),
    ([2.0, 2.0], 0.0),
    ([5.0], np.inf),
])
def test_min_gap(sigma, expected):
    t = svd_strict(np.diag(sigma))
    assert min_gap(t) == expected


def test_min_gap_one_by_n():
    assert min_gap(svd_strict(np.array([[3.0, 4.0, 0.0]]))) == np.inf


def test_min_gap_needs_canonical(rng):
    t = svd_strict(random_complex(rng, 2, 2))
    relaxed = apply_relaxation(t, Relaxation([1, 0], [0, 0], [0, 0]))
    with pytest.raises(PreconditionError):
        min_gap(relaxed)


def test_sample_path_validation():
    with pytest.raises(InvalidInputError):
        MatrixSamplePath(np.zeros((0, 2, 2)), 1e-3)
    with pytest.raises(InvalidInputError):
        MatrixSamplePath(np.zeros((3, 2)), 1e-3)
    with pytest.raises(InvalidInputError):
        MatrixSamplePath(np.zeros((3, 2, 2)), 0.0)
    p = MatrixSamplePath(np.arange(8).reshape(2, 2, 2), 1e-3)
    assert (p.K, p.M, p.N) == (2, 2, 2)
    np.testing.assert_array_equal(p.reversed().samples[0], p.samples[1])


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 5), n=st.integers(1, 5))
def test_strict_invariants(seed, m, n):
    H = random_complex(np.random.default_rng(seed), m, n)
    t = svd_strict(H)
    assert t.is_unitary(1e-10)
    assert reconstruction_error(t, H) < 1e-10
    s = t.sigma
    assert np.all(s.imag == 0) and np.all(s.real >= 0) and np.all(np.diff(s.real) <= 0)
    np.testing.assert_allclose(s.real, np.linalg.svd(H, compute_uv=False), atol=1e-12)
