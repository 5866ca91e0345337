"""Counter-based random streams (Philox4x32-10).

Every draw is a pure function of ``(seed, trial, particle, step, lane)``,
so a particle's path does not depend on how work is split across threads
or on which other particles are simulated alongside it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

_MASK = np.uint64(0xFFFFFFFF)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_TWO_M53 = 1.0 / 9007199254740992.0

# lanes separate independent uses of the same (trial, particle, step) counter
LANE_GAUSS = 0
LANE_BRIDGE = 1


@numba.njit(cache=True, inline="always")
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Philox4x32 with 10 rounds. All arguments are uint64 holding 32-bit words."""
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> np.uint64(32)
        lo0 = p0 & _MASK
        hi1 = p1 >> np.uint64(32)
        lo1 = p1 & _MASK
        c0, c1, c2, c3 = (hi1 ^ c1 ^ k0) & _MASK, lo1, (hi0 ^ c3 ^ k1) & _MASK, lo0
        k0 = (k0 + _W0) & _MASK
        k1 = (k1 + _W1) & _MASK
    return c0, c1, c2, c3


@numba.njit(cache=True, inline="always")
def _to_unit(hi, lo):
    # 53-bit uniform in (0, 1]
    bits = ((hi >> np.uint64(5)) << np.uint64(26)) | (lo >> np.uint64(6))
    return (np.float64(bits) + 1.0) * _TWO_M53


@numba.njit(cache=True, inline="always")
def uniform_pair(seed, trial, particle, step, lane):
    """Two independent uniforms on (0, 1] for one counter value."""
    k0 = np.uint64(seed) & _MASK
    k1 = np.uint64(seed) >> np.uint64(32)
    c1 = np.uint64(particle) & _MASK
    c2 = np.uint64(trial) & _MASK
    c3 = (np.uint64(lane) << np.uint64(16)) | (np.uint64(step) >> np.uint64(32))
    r0, r1, r2, r3 = philox4x32(np.uint64(step) & _MASK, c1, c2, c3 & _MASK, k0, k1)
    return _to_unit(r0, r1), _to_unit(r2, r3)


@numba.njit(cache=True, inline="always")
def gaussian_pair(seed, trial, particle, step):
    """Two independent standard normals (Box-Muller)."""
    u1, u2 = uniform_pair(seed, trial, particle, step, LANE_GAUSS)
    rad = math.sqrt(-2.0 * math.log(u1))
    ang = 2.0 * math.pi * u2
    return rad * math.cos(ang), rad * math.sin(ang)


@numba.njit(cache=True)
def _philox_block(counters, key):
    out = np.empty_like(counters)
    for i in range(counters.shape[0]):
        r = philox4x32(counters[i, 0], counters[i, 1], counters[i, 2], counters[i, 3],
                       key[0], key[1])
        for j in range(4):
            out[i, j] = r[j]
    return out


def philox_words(counter, key) -> tuple[int, int, int, int]:
    """Python-level access to one Philox block (for known-answer tests)."""
    c = np.asarray([counter], dtype=np.uint64)
    k = np.asarray(key, dtype=np.uint64)
    return tuple(int(v) for v in _philox_block(c, k)[0])


@dataclass(frozen=True)
class RngStream:
    """Identifies one particle's random stream."""

    seed: int
    trial: int = 0
    particle: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if not (0 <= self.trial < 2**32 and 0 <= self.particle < 2**32):
            raise ValueError("trial and particle ids must fit in 32 bits")


def numpy_generator(seed: int, *key: int) -> np.random.Generator:
    """NumPy Philox generator for the stream ``(seed, *key)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))
