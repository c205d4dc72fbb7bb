"""Sum-of-sinusoids synthesis of i.i.d. Rayleigh fading MIMO sample paths.

Each entry is an independent Clarke-model process: ``L`` unit sinusoids
with uniformly random arrival angles and phases, scaled by ``1/sqrt(L)``.
Every entry draws from its own RNG substream keyed by ``(seed, i, j)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import special

from .errors import InvalidInputError
from .pathmat import MatrixSamplePath

GENERATOR_VERSION = "sos-clarke-1"
# bounds the (chunk x L) phase array to a few MB
_CHUNK = 2048


@dataclass(frozen=True)
class SynthParams:
    M: int = 3
    N: int = 3
    num_paths: int = 500
    doppler_hz: float = 15.0
    sample_interval_s: float = 3.3e-3
    num_samples: int = 10000
    seed: int = 0
    # informational only; the generator uses doppler_hz
    wavelength_m: Optional[float] = None
    speed_mps: Optional[float] = None

    def __post_init__(self):
        for name in ("M", "N", "num_paths", "num_samples"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise InvalidInputError(f"{name} must be an integer >= 1, got {v}")
        if not self.doppler_hz > 0:
            raise InvalidInputError("doppler_hz must be > 0")
        if not self.sample_interval_s > 0:
            raise InvalidInputError("sample_interval_s must be > 0")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidInputError("seed must fit in an unsigned 64-bit integer")
        if self.doppler_hz >= 1.0 / (2.0 * self.sample_interval_s):
            warnings.warn(
                f"doppler {self.doppler_hz} Hz is not below the Nyquist limit "
                f"{1.0 / (2.0 * self.sample_interval_s):.3f} Hz", RuntimeWarning)

    def as_meta(self) -> dict:
        meta = asdict(self)
        meta["generator"] = GENERATOR_VERSION
        return meta


def entry_rng(seed: int, i: int, j: int) -> np.random.Generator:
    """Independent generator for matrix entry ``(i, j)``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(i, j)))


def sum_of_sinusoids(rng: np.random.Generator, num_paths: int, doppler_hz: float,
                     times: np.ndarray) -> np.ndarray:
    """One fading process sampled at ``times`` (seconds)."""
    alpha = rng.uniform(0.0, 2.0 * math.pi, num_paths)
    phi = rng.uniform(0.0, 2.0 * math.pi, num_paths)
    omega = 2.0 * math.pi * doppler_hz * np.cos(alpha)
    out = np.empty(times.size, dtype=complex)
    for start in range(0, times.size, _CHUNK):
        t = times[start:start + _CHUNK, None]
        out[start:start + _CHUNK] = np.exp(1j * (omega * t + phi)).sum(axis=1)
    return out / math.sqrt(num_paths)


def generate_path(p: SynthParams) -> MatrixSamplePath:
    """Synthesize ``K`` samples of an ``M x N`` i.i.d. fading matrix process.

    Sample ``k`` (0-based) is taken at ``t = k * sample_interval_s``.
    """
    times = np.arange(p.num_samples) * p.sample_interval_s
    H = np.empty((p.num_samples, p.M, p.N), dtype=complex)
    for i in range(p.M):
        for j in range(p.N):
            H[:, i, j] = sum_of_sinusoids(entry_rng(p.seed, i, j), p.num_paths,
                                          p.doppler_hz, times)
    return MatrixSamplePath(H, p.sample_interval_s, p.as_meta())


def theoretical_autocov(tau_s, doppler_hz: float):
    """Clarke auto-covariance ``J0(2 pi f_d tau)``."""
    tau = np.asarray(tau_s, dtype=float)
    if np.any(tau < 0):
        raise InvalidInputError("tau must be >= 0")
    out = special.j0(2.0 * math.pi * doppler_hz * tau)
    return float(out) if out.ndim == 0 else out
