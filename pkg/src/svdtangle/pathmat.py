"""Matrix sample paths and the strictly identified SVD.

A sample path is stored as a single ``(K, M, N)`` complex array. Every
factorization in the package is carried by :class:`SvdTriplet`, which keeps
the full square unitary factors and an ``M x N`` diagonal singular value
matrix that is allowed to be complex once the triplet has been relaxed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidInputError, PreconditionError

UNITARY_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-10


@dataclass(frozen=True)
class MatrixSamplePath:
    """Ordered complex matrix samples ``H^(1..K)`` taken every ``sample_interval_s``."""

    samples: np.ndarray
    sample_interval_s: float
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.ndim != 3:
            raise InvalidInputError(
                f"samples must have shape (K, M, N), got {samples.shape}")
        if min(samples.shape) < 1:
            raise InvalidInputError("K, M and N must all be >= 1")
        if not self.sample_interval_s > 0:
            raise InvalidInputError("sample_interval_s must be > 0")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_interval_s", float(self.sample_interval_s))

    @property
    def K(self) -> int:
        return self.samples.shape[0]

    @property
    def M(self) -> int:
        return self.samples.shape[1]

    @property
    def N(self) -> int:
        return self.samples.shape[2]

    def __len__(self):
        return self.K

    def __getitem__(self, k):
        return self.samples[k]

    def reversed(self) -> "MatrixSamplePath":
        meta = dict(self.meta)
        meta["reversed"] = not meta.get("reversed", False)
        return MatrixSamplePath(self.samples[::-1].copy(), self.sample_interval_s, meta)


@dataclass(frozen=True)
class SvdTriplet:
    """``H = U @ S @ V^H`` with full unitary ``U`` (M x M) and ``V`` (N x N).

    ``canonical`` is True only for the strict factorization: real,
    non-negative, non-increasing singular values.
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    canonical: bool = False

    def __post_init__(self):
        U = np.asarray(self.U, dtype=complex)
        S = np.asarray(self.S, dtype=complex)
        V = np.asarray(self.V, dtype=complex)
        if U.ndim != 2 or S.ndim != 2 or V.ndim != 2:
            raise InvalidInputError("U, S, V must be 2-D")
        M, N = S.shape
        if U.shape != (M, M) or V.shape != (N, N):
            raise InvalidInputError(
                f"inconsistent shapes U{U.shape} S{S.shape} V{V.shape}")
        for a in (U, S, V):
            a.setflags(write=False)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "V", V)

    @property
    def shape(self) -> tuple[int, int]:
        return self.S.shape

    @property
    def n(self) -> int:
        """Number of singular values, ``min(M, N)``."""
        return min(self.S.shape)

    @property
    def sigma(self) -> np.ndarray:
        """Diagonal of ``S`` (complex for relaxed triplets)."""
        return np.diagonal(self.S).copy()

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        M, N = self.S.shape
        eu = np.linalg.norm(self.U.conj().T @ self.U - np.eye(M)) / np.sqrt(M)
        ev = np.linalg.norm(self.V.conj().T @ self.V - np.eye(N)) / np.sqrt(N)
        return eu < tol and ev < tol


def _check_finite_matrix(H) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or min(H.shape) < 1:
        raise InvalidInputError(f"expected a non-empty 2-D matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise InvalidInputError("matrix has non-finite entries")
    return H


def _phase_of_largest_entry(cols: np.ndarray) -> np.ndarray:
    # argmax returns the first index on exact ties, keeping this deterministic
    idx = np.argmax(np.abs(cols), axis=0)
    lead = cols[idx, np.arange(cols.shape[1])]
    return np.exp(-1j * np.angle(lead))


def svd_strict(H) -> SvdTriplet:
    """SVD under the strict identification conditions.

    Singular values come out real, non-negative and sorted descending. Each
    singular pair ``(u_i, v_i)`` is rotated by a common phase so that the
    largest-magnitude entry of ``u_i`` is real and positive; surplus null
    space columns are normalized by their own largest entry.
    """
    H = _check_finite_matrix(H)
    M, N = H.shape
    n = min(M, N)
    U, s, Vh = np.linalg.svd(H, full_matrices=True)
    V = Vh.conj().T
    rot = _phase_of_largest_entry(U[:, :n])
    U[:, :n] *= rot
    V[:, :n] *= rot
    if M > n:
        U[:, n:] *= _phase_of_largest_entry(U[:, n:])
    if N > n:
        V[:, n:] *= _phase_of_largest_entry(V[:, n:])
    S = np.zeros((M, N), dtype=complex)
    S[np.arange(n), np.arange(n)] = s
    return SvdTriplet(U, S, V, canonical=True)


def reconstruct(t: SvdTriplet) -> np.ndarray:
    """Return ``U @ S @ V^H``."""
    M, N = t.S.shape
    if t.U.shape != (M, M) or t.V.shape != (N, N):
        raise InvalidInputError("triplet dimensions are inconsistent")
    return t.U @ t.S @ t.V.conj().T


def reconstruction_error(t: SvdTriplet, H) -> float:
    """Relative Frobenius error of ``t`` against ``H`` (absolute if ``H`` is zero)."""
    H = np.asarray(H, dtype=complex)
    err = np.linalg.norm(reconstruct(t) - H)
    scale = np.linalg.norm(H)
    return float(err / scale) if scale > 0 else float(err)


def min_gap(t: SvdTriplet) -> float:
    """Smallest difference between consecutive ordered singular values.

    Returns ``inf`` when there is only one singular value.
    """
    if not t.canonical:
        raise PreconditionError("min_gap needs a canonical (strict) triplet")
    s = t.sigma.real
    if s.size < 2:
        return float("inf")
    return float(np.min(s[:-1] - s[1:]))
