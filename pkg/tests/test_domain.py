import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rarefy.domain import Disk, Rectangle, RingPartition, contains, ring_measure, signed_distance

coords = st.floats(-3, 3, allow_nan=False)
domains = st.sampled_from([Disk(1.0), Disk(2.5), Rectangle(1.0, 2.0), Rectangle(0.3, 1.0)])


def test_contains_examples():
    assert contains(Disk(1), (0, 0))
    assert not contains(Disk(1), (1, 0))
    assert contains(Rectangle(1, 2), (0.5, 1.9))


def test_signed_distance_examples():
    assert signed_distance(Disk(2), (0, 0)) == 2
    assert signed_distance(Disk(1), (0.6, 0.8)) == pytest.approx(0, abs=1e-15)
    assert signed_distance(Rectangle(1, 1), (0.5, 0.25)) == 0.25


def test_signed_distance_sign_outside():
    assert signed_distance(Disk(1), (2, 0)) == -1
    assert signed_distance(Rectangle(1, 1), (1.5, 0.5)) == -0.5


def test_areas():
    assert Disk(3).area == pytest.approx(9 * math.pi)
    assert Rectangle(2, 3).area == 6


@pytest.mark.parametrize("bad", [lambda: Disk(0), lambda: Disk(-1), lambda: Rectangle(1, 0)])
def test_invalid_domains(bad):
    with pytest.raises(ValueError):
        bad()


@pytest.mark.parametrize("n,i,expected", [(1, 0, math.pi), (2, 0, math.pi / 4), (2, 1, 3 * math.pi / 4)])
def test_ring_measure_examples(n, i, expected):
    assert ring_measure(RingPartition(1.0, n), i) == pytest.approx(expected, rel=1e-15)


def test_ring_measure_out_of_range():
    with pytest.raises(IndexError):
        RingPartition(1.0, 3).ring_measure(3)


@pytest.mark.parametrize("n", range(1, 101))
def test_rings_sum_to_disk_area(n):
    part = RingPartition(1.7, n)
    total = sum(part.ring_measure(i) for i in range(n))
    assert total == pytest.approx(Disk(1.7).area, rel=1e-12)


def test_ring_index():
    part = RingPartition(1.0, 4)
    idx = part.ring_index(np.array([[0.1, 0], [0, 0.3], [0.6, 0], [0, 0.99], [1.0, 0], [2, 2]]))
    assert idx.tolist() == [0, 1, 2, 3, -1, -1]


def test_ring_gauss_nodes_integrate_polynomials():
    rho, w = RingPartition(2.0, 7).gauss_nodes()
    # area integral of rho^2 over a disk of radius 2 is pi r^4 / 2
    assert np.dot(w, rho**2) == pytest.approx(math.pi * 16 / 2, rel=1e-13)


@settings(max_examples=300, deadline=None)
@given(domains, coords, coords)
def test_contains_iff_positive_distance(domain, x, y):
    assert bool(domain.contains((x, y))) == (domain.signed_distance((x, y)) > 0)


@settings(max_examples=300, deadline=None)
@given(domains, coords, coords, coords, coords, st.floats(0, 1))
def test_signed_distance_is_1_lipschitz(domain, x0, y0, x1, y1, s):
    p = np.array([x0, y0])
    q = p + s * (np.array([x1, y1]) - p)
    dd = abs(domain.signed_distance(p) - domain.signed_distance(q))
    assert dd <= np.linalg.norm(p - q) + 1e-12


def test_vectorised_calls_match_scalar():
    rect = Rectangle(1, 2)
    pts = np.random.default_rng(0).uniform(-0.5, 2.5, size=(50, 2))
    vec = rect.signed_distance(pts)
    assert vec.shape == (50,)
    assert all(vec[i] == rect.signed_distance(pts[i]) for i in range(50))
