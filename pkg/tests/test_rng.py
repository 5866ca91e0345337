import math

import numba
import numpy as np
import pytest
from scipy import stats

from rarefy.rng import RngStream, gaussian_pair, numpy_generator, philox_words, uniform_pair

# Random123 known-answer vectors for Philox4x32-10
KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    (
        (0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344),
        (0xA4093822, 0x299F31D0),
        (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1),
    ),
]


@pytest.mark.parametrize("counter,key,expected", KAT)
def test_philox_known_answers(counter, key, expected):
    assert philox_words(counter, key) == expected


@numba.njit
def _draw_uniforms(seed, n):
    out = np.empty(2 * n)
    for i in range(n):
        a, b = uniform_pair(seed, 0, i, 0, 0)
        out[2 * i] = a
        out[2 * i + 1] = b
    return out


@numba.njit
def _draw_normals(seed, trial, n):
    out = np.empty(2 * n)
    for i in range(n):
        a, b = gaussian_pair(seed, trial, 7, i)
        out[2 * i] = a
        out[2 * i + 1] = b
    return out


def test_uniforms_in_unit_interval_and_uniform():
    u = _draw_uniforms(np.uint64(123), 50_000)
    assert np.all((u > 0) & (u <= 1))
    assert stats.kstest(u, "uniform").pvalue > 1e-3


def test_normals_are_standard():
    z = _draw_normals(np.uint64(2**63 + 5), np.uint64(3), 50_000)
    assert abs(z.mean()) < 4 / math.sqrt(len(z))
    assert z.std() == pytest.approx(1.0, abs=0.02)
    assert stats.kstest(z, "norm").pvalue > 1e-3
    assert abs(np.corrcoef(z[::2], z[1::2])[0, 1]) < 0.02


def test_streams_differ_by_every_counter_field():
    base = uniform_pair(np.uint64(1), 2, 3, 4, 0)
    assert uniform_pair(np.uint64(1), 2, 3, 4, 0) == base
    for args in [(2, 2, 3, 4, 0), (1, 3, 3, 4, 0), (1, 2, 4, 4, 0), (1, 2, 3, 5, 0), (1, 2, 3, 4, 1),
                 (1, 2, 3, 4 + 2**32, 0), (1 + 2**32, 2, 3, 4, 0)]:
        assert uniform_pair(np.uint64(args[0]), *args[1:]) != base


def test_stream_validation():
    RngStream(2**64 - 1, 2**32 - 1, 0)
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(2**64)
    with pytest.raises(ValueError):
        RngStream(0, trial=2**32)


def test_numpy_generator_is_keyed():
    a = numpy_generator(5, 1).random(4)
    assert np.array_equal(a, numpy_generator(5, 1).random(4))
    assert not np.array_equal(a, numpy_generator(5, 2).random(4))
    assert not np.array_equal(a, numpy_generator(6, 1).random(4))
