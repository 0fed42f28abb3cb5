"""Seeded randomness shared by every sampler.

All draws come from a Philox counter-based generator keyed by ``(seed,
stream)``.  Samplers request a ``shots x width`` block of uniforms, so the
numbers used by shot ``i`` are a fixed function of ``(seed, stream, i)``
regardless of how shots are grouped or parallelised.
"""

from __future__ import annotations

import secrets

import numpy as np
from scipy.special import ndtri

GENERATOR = "philox4x64/v1"
SEED_BITS = 64
_HALF_ULP = 2.0**-54


def new_seed() -> int:
    return secrets.randbits(SEED_BITS)


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**SEED_BITS:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def shot_uniforms(seed: int, shots: int, width: int, stream: int = 0) -> np.ndarray:
    """Uniforms in ``(0, 1)``; row ``i`` depends only on ``(seed, stream, i)``."""
    gen = np.random.Generator(np.random.Philox(key=[check_seed(seed), stream]))
    if shots == 0 or width == 0:
        return np.zeros((shots, width))
    return gen.random((shots, width)) + _HALF_ULP


def shot_normals(seed: int, shots: int, width: int, stream: int = 0) -> np.ndarray:
    """Standard normals by inverse CDF, one uniform per value."""
    return ndtri(shot_uniforms(seed, shots, width, stream))


def inverse_cdf(weights: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Indices drawn from unnormalised ``weights`` for each uniform in ``u``."""
    cdf = np.cumsum(weights)
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    last = int(np.flatnonzero(weights > 0)[-1])
    return np.minimum(idx, last)
