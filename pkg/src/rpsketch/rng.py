"""Counter-based deterministic random number generation.

Every deviate is a pure function of (seed, major, minor), so any subset of a
conceptually infinite table of standard normals can be materialized
independently, in any order, on any number of workers, with identical results.
The construction is a SplitMix64-style hash chain: the seed and the major
counter are folded into a 64-bit key, the minor counter is folded into that,
and the mixed word is mapped to a normal deviate through the inverse CDF of a
53-bit uniform in (0, 1).
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

MASK64 = 0xFFFFFFFFFFFFFFFF

_GAMMA_MAJOR = np.uint64(0x9E3779B97F4A7C15)
_GAMMA_MINOR = np.uint64(0xC2B2AE3D27D4EB4F)
_U53_SCALE = 2.0**-53


def _mix64(z):
    """SplitMix64 finalizer; operates elementwise on uint64 scalars/arrays."""
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _seed_word(seed) -> np.uint64 | np.ndarray:
    if isinstance(seed, (int, np.integer)):
        return np.uint64(int(seed) & MASK64)
    return np.asarray(seed, dtype=np.uint64)


def uniforms(seed, major, minor) -> np.ndarray:
    """Uniform deviates in the open interval (0, 1), broadcast over inputs.

    Each output is ((h >> 11) + 0.5) * 2**-53 for the mixed word h, which can
    never be exactly 0 or 1, keeping the inverse normal CDF finite.
    """
    with np.errstate(over="ignore"):
        key = _mix64(_seed_word(seed))
        key = _mix64(key + _GAMMA_MAJOR * np.asarray(major, dtype=np.uint64))
        h = _mix64(key + _GAMMA_MINOR * np.asarray(minor, dtype=np.uint64))
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * _U53_SCALE


def normals(seed, major, minor) -> np.ndarray:
    """Standard normal deviates, broadcast over (seed, major, minor)."""
    return ndtri(uniforms(seed, major, minor))


def normal_grid(seed: int, majors, k: int) -> np.ndarray:
    """Matrix of normals with one row per major counter and k minor columns."""
    majors = np.asarray(majors, dtype=np.uint64)
    minors = np.arange(k, dtype=np.uint64)
    return normals(seed, majors[:, None], minors[None, :])


def bivariate_block(rho: float, seed: int, major_start: int, n_major: int,
                    k: int) -> tuple[np.ndarray, np.ndarray]:
    """(n_major, k) blocks of correlated standard-normal pairs.

    x is standard normal and y = rho*x + sqrt(1 - rho^2)*z for an independent
    standard normal z, so E(x*y) = rho and both margins are N(0, 1).  Pair
    (major, j) always consumes minor counters 2j and 2j+1, independent of
    block boundaries.
    """
    majors = np.arange(major_start, major_start + n_major, dtype=np.uint64)
    minors = np.arange(k, dtype=np.uint64) * np.uint64(2)
    x = normals(seed, majors[:, None], minors[None, :])
    z = normals(seed, majors[:, None], minors[None, :] + np.uint64(1))
    y = rho * x + np.sqrt((1.0 - rho) * (1.0 + rho)) * z
    return x, y
