"""Connection forms, gauge fields, and the gauge action."""

import numpy as np
import pytest

from pathbundle.connections import (Chart, GaugeField, constant_connection,
                                    constant_gauge, exponential_gauge,
                                    gauge_transform,
                                    levi_civita_sphere_connection,
                                    magnetic_connection, one_parameter_gauge,
                                    polynomial_connection, sampled_connection,
                                    zero_connection)
from pathbundle.errors import InvalidInputError, SingularGaugeError
from pathbundle.matrices import matrix_inverse, operator_distance
from pathbundle.paths import affine_path
from pathbundle.transport import transport_ode

LINE = Chart(1)
PLANE = Chart(2, ((-2.0, 2.0), (-2.0, 2.0)))
X_GEN = np.array([[0.0, 1.0], [-0.5, 0.2]])


def test_zero_connection_evaluates_to_zero():
    conn = zero_connection(PLANE, 3)
    np.testing.assert_array_equal(conn.evaluate([0.3, -1.0], [2.0, 5.0]),
                                  np.zeros((3, 3)))


def test_constant_connection_linearity_in_direction():
    conn = constant_connection(LINE, [X_GEN])
    np.testing.assert_array_equal(conn.evaluate([0.7], [2.0]), 2.0 * X_GEN)
    # exact homogeneity, not approximate
    lam = 0.123456789
    np.testing.assert_array_equal(conn.evaluate([0.7], [lam]),
                                  lam * conn.coefficient(0, [0.7]))


def test_magnetic_preset_substitution():
    conn = magnetic_connection()
    # A = x dy - y dx at p=(1,0), v=(0,1): the dy component contributes x = 1
    assert conn.evaluate([1.0, 0.0], [0.0, 1.0])[0, 0] == pytest.approx(1.0)
    assert conn.evaluate([1.0, 0.0], [1.0, 0.0])[0, 0] == pytest.approx(0.0)
    assert conn.evaluate([0.0, 1.0], [1.0, 0.0])[0, 0] == pytest.approx(-1.0)


def test_polynomial_connection_monomials():
    a = np.array([[1.0, 0.0], [0.0, -1.0]])
    b = np.array([[0.0, 1.0], [1.0, 0.0]])
    conn = polynomial_connection(PLANE, 2, [
        [((1, 1), a)],          # A_x = x y a
        [((0, 2), b)],          # A_y = y^2 b
    ])
    p = np.array([0.5, -1.5])
    want = 2.0 * (0.5 * -1.5) * a + 3.0 * (-1.5) ** 2 * b
    np.testing.assert_allclose(conn.evaluate(p, [2.0, 3.0]), want, rtol=1e-15)


def conformal_christoffels_fd(p, h=1e-6):
    """Independent oracle: Christoffels of 4/(1+r^2)^2 delta by finite
    differences of the metric."""
    def metric(q):
        r2 = q @ q
        return 4.0 / (1.0 + r2) ** 2 * np.eye(2)

    dg = np.zeros((2, 2, 2))  # dg[k] = d_k g
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        dg[k] = (metric(p + e) - metric(p - e)) / (2.0 * h)
    ginv = np.linalg.inv(metric(p))
    gamma = np.zeros((2, 2, 2))  # gamma[i][j][k] = G^i_jk
    for i in range(2):
        for j in range(2):
            for k in range(2):
                total = 0.0
                for l in range(2):
                    total += ginv[i, l] * (dg[j][l, k] + dg[k][j, l]
                                           - dg[l][j, k])
                gamma[i, j, k] = 0.5 * total
    return gamma


def test_levi_civita_matches_metric_christoffels():
    conn = levi_civita_sphere_connection()
    rng = np.random.default_rng(0)
    for _ in range(5):
        p = rng.uniform(-1.5, 1.5, size=2)
        gamma = conformal_christoffels_fd(p)
        for i in range(2):
            coeff = conn.coefficient(i, p)
            # transport convention: (A_i)^j_k = -G^j_{ik}
            want = -gamma[:, i, :]
            np.testing.assert_allclose(coeff, want, atol=1e-8)


def test_sampled_connection_reproduces_smooth_field():
    axes = (np.linspace(-1.0, 1.0, 21), np.linspace(-1.0, 1.0, 21))
    def a_x(p):
        return np.array([[np.sin(p[0]) * p[1]]])
    def a_y(p):
        return np.array([[p[0] ** 2]])
    values = np.zeros((2, 21, 21, 1, 1))
    for i, x in enumerate(axes[0]):
        for j, y in enumerate(axes[1]):
            values[0, i, j] = a_x((x, y))
            values[1, i, j] = a_y((x, y))
    conn = sampled_connection(Chart(2, ((-1, 1), (-1, 1))), 1, axes, values)
    p = np.array([0.37, -0.41])
    got = conn.evaluate(p, [1.0, 1.0])[0, 0]
    want = a_x(p)[0, 0] + a_y(p)[0, 0]
    assert got == pytest.approx(want, abs=5e-6)
    # clamped boundary: queries outside the box evaluate at the edge
    edge = conn.coefficient(1, [2.0, 0.0])[0, 0]
    assert edge == pytest.approx(1.0, abs=5e-6)


def test_sampled_connection_rejects_nonfinite():
    axes = (np.linspace(0, 1, 5),)
    values = np.zeros((1, 5, 1, 1))
    values[0, 2] = np.inf
    with pytest.raises(InvalidInputError):
        sampled_connection(Chart(1), 1, axes, values)


def test_gauge_transform_constant_gauge_is_conjugation():
    conn = constant_connection(LINE, [X_GEN])
    g0 = np.array([[2.0, 1.0], [0.0, 1.0]])
    primed = gauge_transform(conn, constant_gauge(LINE, g0))
    want = g0 @ X_GEN @ matrix_inverse(g0)
    np.testing.assert_allclose(primed.coefficient(0, [0.3]), want, rtol=1e-14)


def test_gauge_transform_zero_connection_exponential_gauge():
    # A = 0, g(t) = exp(tX): A' = (dg) g^-1 = X, so transport of A' is
    # exp((y-x) X) and the covariance identity g(y) F_A = F_A' g(x) holds.
    conn = zero_connection(LINE, 2)
    gauge = exponential_gauge(LINE, X_GEN)
    primed = gauge_transform(conn, gauge)
    np.testing.assert_allclose(primed.coefficient(0, [0.37]), X_GEN, atol=1e-13)


def test_gauge_covariance_through_transport():
    conn = magnetic_connection()
    path = affine_path(conn.chart, [0.1, -0.3], [0.5, 0.9], (0.0, 1.0))
    gen = np.array([[0.3]])
    gauge = one_parameter_gauge(
        conn.chart, gen,
        profile=lambda p: float(np.sin(p[0]) + 0.5 * p[1]),
        profile_grad=lambda p: np.array([np.cos(p[0]), 0.5]))
    primed = gauge_transform(conn, gauge)
    x, y = 0.2, 0.9
    f_a = transport_ode(conn, path, x, y).map
    f_ap = transport_ode(primed, path, x, y).map
    lhs = gauge(path.point(y)) @ f_a
    rhs = f_ap @ gauge(path.point(x))
    assert operator_distance(lhs, rhs) < 1e-7


def test_gauge_roundtrip_with_finite_difference_derivative():
    conn = magnetic_connection()
    raw = lambda p: np.array([[np.exp(0.3 * np.sin(p[0]) * p[1])]])
    gauge = GaugeField(conn.chart, raw)           # derivative from FD
    inverse = GaugeField(conn.chart, lambda p: matrix_inverse(raw(p)))
    back = gauge_transform(gauge_transform(conn, gauge), inverse)
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(5):
        p = rng.uniform(-1.0, 1.0, size=2)
        for i in range(2):
            worst = max(worst, operator_distance(
                back.coefficient(i, p), conn.coefficient(i, p)))
    assert worst < 1e-7


def test_gauge_fd_richardson_improves():
    chart = LINE
    raw = lambda p: np.array([[np.exp(np.sin(3.0 * p[0]))]])
    truth = lambda p: 3.0 * np.cos(3.0 * p[0]) * raw(p)
    plain = GaugeField(chart, raw, fd_step=1e-4)
    better = GaugeField(chart, raw, fd_step=1e-4, richardson=True)
    p = np.array([0.4])
    err_plain = abs(plain.partial(0, p)[0, 0] - truth(p)[0, 0])
    err_rich = abs(better.partial(0, p)[0, 0] - truth(p)[0, 0])
    assert err_rich < err_plain


def test_singular_gauge_raises():
    gauge = GaugeField(LINE, lambda p: np.array([[p[0]]]))
    with pytest.raises(SingularGaugeError):
        gauge([0.0])


def test_evaluate_checks_dimensions():
    conn = magnetic_connection()
    with pytest.raises(InvalidInputError):
        conn.evaluate([1.0], [0.0, 1.0])
    with pytest.raises(InvalidInputError):
        conn.evaluate([1.0, 0.0], [1.0])
