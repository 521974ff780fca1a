"""Parallel transport: ODE reference, product formula, functor axioms."""

import math

import numpy as np
import pytest

from pathbundle.connections import (Chart, constant_connection,
                                    magnetic_connection,
                                    polynomial_connection, zero_connection)
from pathbundle.errors import InvalidInputError
from pathbundle.matrices import (identity_distance, matrix_exponential,
                                 operator_distance, smallest_singular_value)
from pathbundle.paths import (affine_path, circle_arc_path, constant_path,
                              power_reparametrization, reparametrize)
from pathbundle.transport import (cocycle_residual, convergence_slope,
                                  default_steps, method_agreement,
                                  transport_ode, transport_product)

LINE = Chart(1)
X_GEN = np.array([[0.0, 1.0], [-0.5, 0.2]])
UNIT_PATH = affine_path(LINE, [0.0], [1.0])


def test_zero_connection_transports_identically():
    conn = zero_connection(LINE, 3)
    result = transport_ode(conn, UNIT_PATH)
    np.testing.assert_array_equal(result.map, np.eye(3))
    prod = transport_product(conn, UNIT_PATH, n=7)
    np.testing.assert_array_equal(prod.map, np.eye(3))


def test_scalar_unit_connection_gives_e():
    conn = constant_connection(LINE, [np.array([[1.0]])])
    result = transport_ode(conn, UNIT_PATH, 0.0, 1.0)
    assert result.map[0, 0] == pytest.approx(math.e, rel=1e-12)


def test_constant_matrix_connection_matches_exponential():
    conn = constant_connection(LINE, [X_GEN])
    for s, t in [(0.0, 1.0), (0.25, 0.8), (0.9, 0.1)]:
        got = transport_ode(conn, UNIT_PATH, s, t).map
        want = matrix_exponential((t - s) * X_GEN)
        assert operator_distance(got, want) < 1e-12


def test_product_formula_exact_for_commuting_factors():
    conn = constant_connection(LINE, [X_GEN])
    want = matrix_exponential(X_GEN)
    for n in (1, 3, 17):
        got = transport_product(conn, UNIT_PATH, 0.0, 1.0, n=n).map
        assert operator_distance(got, want) < 1e-13


def test_scalar_ramp_product_limits():
    # A = t dt on [0, 1]: transport is exp(int_0^1 t dt) = exp(1/2).  The
    # midpoint quadrature is exact for a linear integrand; the left rule
    # converges at first order.
    conn = polynomial_connection(LINE, 1, [[((1,), np.array([[1.0]]))]])
    want = math.exp(0.5)
    for n in (8, 64):
        mid = transport_product(conn, UNIT_PATH, n=n, rule="midpoint").map[0, 0]
        assert mid == pytest.approx(want, abs=1e-14)
    left_errs = [abs(transport_product(conn, UNIT_PATH, n=n,
                                       rule="left").map[0, 0] - want)
                 for n in (8, 16, 32, 64)]
    for e0, e1 in zip(left_errs, left_errs[1:]):
        assert e0 / e1 == pytest.approx(2.0, rel=0.1)


def test_scalar_quadratic_midpoint_second_order():
    # A = t^2 dt on [0, 1]: transport is exp(1/3) and the midpoint error
    # genuinely scales as 1/n^2.
    conn = polynomial_connection(LINE, 1, [[((2,), np.array([[1.0]]))]])
    want = math.exp(1.0 / 3.0)
    errs = [abs(transport_product(conn, UNIT_PATH, n=n,
                                  rule="midpoint").map[0, 0] - want)
            for n in (8, 16, 32, 64)]
    for e0, e1 in zip(errs, errs[1:]):
        assert e0 / e1 == pytest.approx(4.0, rel=0.2)


def test_cocycle_residual_degenerate_and_generic():
    conn = magnetic_connection()
    arc = circle_arc_path(conn.chart, (0.3, 0.2), 0.8, (0.0, 2.0))
    assert cocycle_residual(conn, arc, 0.7, 0.7, 0.7) == 0.0
    assert cocycle_residual(conn, arc, 0.4, 0.4, 1.5) <= 1e-12
    assert cocycle_residual(conn, arc, 0.0, 0.5, 1.0, step=1e-3) < 1e-8
    with pytest.raises(InvalidInputError):
        cocycle_residual(conn, arc, 1.0, 0.5, 1.5)


def test_orientation_reversal_inverts_transport():
    conn = magnetic_connection()
    arc = circle_arc_path(conn.chart, (0.3, 0.2), 0.8, (0.0, 2.0))
    forward = transport_ode(conn, arc, 0.0, 2.0).map
    backward = transport_ode(conn, arc, 2.0, 0.0).map
    assert identity_distance(forward @ backward) < 1e-8


def test_equal_endpoints_is_exactly_identity():
    conn = magnetic_connection()
    arc = circle_arc_path(conn.chart, (0.3, 0.2), 0.8, (0.0, 2.0))
    result = transport_ode(conn, arc, 1.3, 1.3)
    np.testing.assert_array_equal(result.map, np.eye(1))
    assert result.steps == 0


def test_constant_path_transport_is_identity():
    for conn in (magnetic_connection(),
                 constant_connection(LINE, [X_GEN])):
        path = constant_path(conn.chart, np.zeros(conn.chart.dim) + 0.3)
        result = transport_ode(conn, path)
        np.testing.assert_array_equal(result.map, np.eye(conn.fiber_dim))


def test_transport_results_are_invertible():
    plane = Chart(2)
    a = np.array([[0.0, 0.7], [-0.7, 0.0]])
    b = np.array([[0.3, 0.0], [0.4, -0.3]])
    poly = polynomial_connection(plane, 2, [
        [((0, 0), a), ((1, 0), 0.5 * b)], [((0, 1), b)]])
    arc = circle_arc_path(plane, (0.1, -0.2), 0.9, (0.0, 2.0))
    rng = np.random.default_rng(0)
    for _ in range(5):
        s, t = np.sort(rng.uniform(0.0, 2.0, size=2))
        result = transport_ode(poly, arc, s, t)
        assert result.smallest_singular_value > 1e-8


def test_method_agreement_orders_nonabelian():
    plane = Chart(2)
    a = np.array([[0.0, 0.7], [-0.7, 0.0]])
    b = np.array([[0.3, 0.0], [0.4, -0.3]])
    poly = polynomial_connection(plane, 2, [
        [((0, 0), a), ((1, 0), 0.5 * b)], [((0, 1), b)]])
    arc = circle_arc_path(plane, (0.1, -0.2), 0.9, (0.0, 2.0))
    n_values = (16, 32, 64, 128, 256)
    _, left = method_agreement(poly, arc, n_values=n_values, rule="left")
    _, mid = method_agreement(poly, arc, n_values=n_values, rule="midpoint")
    assert convergence_slope(left) >= 1.0 - 0.1
    assert convergence_slope(mid) >= 2.0 - 0.2


def test_reparametrization_invariance():
    conn = magnetic_connection()
    arc = circle_arc_path(conn.chart, (0.3, 0.2), 0.8, (0.0, 1.0))
    direct = transport_ode(conn, arc).map
    pulled = reparametrize(arc, power_reparametrization((0.0, 1.0), 2.0))
    again = transport_ode(conn, pulled).map
    assert operator_distance(direct, again) < 1e-8


def test_default_step_density():
    assert default_steps(0.0, 1.0) == 2048
    assert default_steps(0.0, 0.25) == 512
    assert default_steps(1.0, 0.5) == 1024  # direction-independent


def test_error_estimate_tracks_truncation():
    conn = magnetic_connection()
    arc = circle_arc_path(conn.chart, (0.3, 0.2), 0.8, (0.0, 2.0))
    coarse = transport_ode(conn, arc, steps=32, estimate_error=True)
    fine = transport_ode(conn, arc, steps=4096).map
    true_err = operator_distance(coarse.map, fine)
    assert coarse.error_estimate == pytest.approx(true_err, rel=2.0)


def test_out_of_domain_rejected():
    conn = magnetic_connection()
    arc = circle_arc_path(conn.chart, (0.3, 0.2), 0.8, (0.0, 2.0))
    with pytest.raises(InvalidInputError):
        transport_ode(conn, arc, 0.0, 3.0)
    with pytest.raises(InvalidInputError):
        transport_product(conn, arc, 0.0, 1.0, n=0)
    with pytest.raises(InvalidInputError):
        transport_product(conn, arc, 0.0, 1.0, rule="simpson")
