"""Path presets, cuts, and reparametrization."""

import numpy as np
import pytest

from pathbundle.connections import Chart
from pathbundle.errors import (InvalidInputError,
                               InvalidReparametrizationError)
from pathbundle.paths import (affine_path, circle_arc_path, constant_path,
                              identity_reparametrization, line_path,
                              power_reparametrization, reparametrize,
                              sitting_reparametrization, spline_path)

LINE = Chart(1)
PLANE = Chart(2)


def test_affine_and_line_paths():
    p = affine_path(PLANE, [1.0, 2.0], [3.0, -1.0], (0.0, 2.0))
    np.testing.assert_array_equal(p.point(0.5), [2.5, 1.5])
    np.testing.assert_array_equal(p.speed_vector(1.7), [3.0, -1.0])

    q = line_path(PLANE, [0.0, 0.0], [2.0, 4.0], (1.0, 3.0))
    np.testing.assert_allclose(q.point(1.0), [0.0, 0.0])
    np.testing.assert_allclose(q.point(3.0), [2.0, 4.0])
    np.testing.assert_allclose(q.speed_vector(2.0), [1.0, 2.0])


def test_circle_arc_velocity_is_tangent():
    arc = circle_arc_path(PLANE, (1.0, -1.0), 2.0, (0.0, np.pi))
    for u in (0.1, 1.3, 2.9):
        radial = arc.point(u) - np.array([1.0, -1.0])
        assert abs(radial @ arc.speed_vector(u)) < 1e-12
        assert np.linalg.norm(arc.speed_vector(u)) == pytest.approx(2.0)


def test_spline_velocity_matches_finite_differences():
    times = np.linspace(0.0, 1.0, 7)
    rng = np.random.default_rng(2)
    waypoints = rng.normal(size=(7, 2))
    path = spline_path(PLANE, times, waypoints)
    h = 1e-6
    for u in (0.15, 0.5, 0.85):
        fd = (path.point(u + h) - path.point(u - h)) / (2.0 * h)
        np.testing.assert_allclose(path.speed_vector(u), fd, atol=1e-8)
    np.testing.assert_allclose(path.point(times[3]), waypoints[3], atol=1e-12)


def test_cuts_validation():
    with pytest.raises(InvalidInputError):
        affine_path(LINE, [0.0], [1.0], (0.0, 1.0), cuts=(0.5, 0.2))
    with pytest.raises(InvalidInputError):
        affine_path(LINE, [0.0], [1.0], (0.0, 1.0), cuts=(0.0, 2.0))
    p = affine_path(LINE, [0.0], [1.0], (0.0, 1.0), cuts=(0.2, 0.5, 0.9))
    assert p.carrier == (0.2, 0.9)


def test_reparametrize_identity_and_square():
    path = affine_path(LINE, [0.0], [1.0], (0.0, 1.0), cuts=(0.0, 0.25, 1.0))
    same = reparametrize(path, identity_reparametrization((0.0, 1.0)))
    np.testing.assert_array_equal(same.point(0.3), path.point(0.3))
    assert same.cuts == path.cuts

    squared = reparametrize(path, power_reparametrization((0.0, 1.0), 2.0))
    np.testing.assert_allclose(squared.point(0.5), path.point(0.25))
    # cuts pull back through the inverse: 0.25 -> 0.5
    np.testing.assert_allclose(squared.cuts, (0.0, 0.5, 1.0), atol=1e-12)
    # chain rule velocity
    np.testing.assert_allclose(squared.speed_vector(0.5),
                               path.speed_vector(0.25) * 1.0, atol=1e-12)


def test_reparametrize_rejects_decreasing():
    path = affine_path(LINE, [0.0], [1.0], (0.0, 1.0))
    from pathbundle.paths import Reparametrization
    backwards = Reparametrization(lambda u: 1.0 - u, lambda u: -1.0, (0.0, 1.0))
    with pytest.raises(InvalidReparametrizationError):
        reparametrize(path, backwards)
    not_onto = Reparametrization(lambda u: 0.5 * u, lambda u: 0.5, (0.0, 1.0))
    with pytest.raises(InvalidReparametrizationError):
        reparametrize(path, not_onto)


def test_sitting_profile_is_flat_at_the_ends():
    phi = sitting_reparametrization((2.0, 6.0), flat=0.2)
    assert phi(2.0) == 2.0 and phi(6.0) == 6.0
    # exactly constant on the end zones
    assert phi(2.0 + 0.1) == 2.0
    assert phi(6.0 - 0.1) == 6.0
    assert phi.deriv(2.3) == 0.0 and phi.deriv(5.9) == 0.0
    # monotone in between
    us = np.linspace(2.0, 6.0, 200)
    vals = np.array([phi(u) for u in us])
    assert np.all(np.diff(vals) >= -1e-15)


def test_sitting_reparametrized_path_sits():
    path = affine_path(LINE, [0.0], [1.0], (0.0, 1.0))
    sat = reparametrize(path, sitting_reparametrization((0.0, 1.0), flat=0.25))
    np.testing.assert_array_equal(sat.point(0.1), sat.point(0.0))
    np.testing.assert_array_equal(sat.point(0.9), sat.point(1.0))
    np.testing.assert_array_equal(sat.speed_vector(0.05), [0.0])


def test_constant_path_has_zero_velocity():
    p = constant_path(PLANE, [0.3, 0.4])
    np.testing.assert_array_equal(p.speed_vector(0.77), [0.0, 0.0])
    np.testing.assert_array_equal(p.point(0.0), p.point(1.0))
