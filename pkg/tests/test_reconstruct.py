"""Connection recovery from black-box transport oracles."""

import numpy as np
import pytest

from pathbundle.connections import (Chart, constant_connection,
                                    gauge_transform, magnetic_connection,
                                    one_parameter_gauge)
from pathbundle.errors import InvalidInputError, OracleError
from pathbundle.matrices import matrix_exponential, operator_distance
from pathbundle.reconstruct import (TransportOracle, additivity_residual,
                                    grid_points, homogeneity_residual,
                                    oracle_from_table, reconstruct_at,
                                    reconstruct_connection, roundtrip_error,
                                    tabulate_oracle)

LINE = Chart(1)
X_GEN = np.array([[0.0, 1.0], [-0.5, 0.2]])


def exp_oracle(chart=LINE, gen=X_GEN):
    """F(p, v, s, t) = exp((t - s) |v| X): transport of the constant
    connection X dt along the affine probe, in closed form."""
    def func(p, v, s, t):
        return matrix_exponential((t - s) * float(np.sum(v)) * gen)
    return TransportOracle(chart, gen.shape[0], func)


def test_flat_oracle_reconstructs_zero():
    oracle = TransportOracle(LINE, 2, lambda p, v, s, t: np.eye(2))
    got = reconstruct_at(oracle, [0.3], [1.0])
    np.testing.assert_array_equal(got, np.zeros((2, 2)))


def test_exponential_oracle_reconstructs_generator():
    got = reconstruct_at(exp_oracle(), [0.0], [1.0], h=1e-4)
    assert operator_distance(got, X_GEN) < 1e-8


def test_one_sided_scheme_is_first_order():
    central = reconstruct_at(exp_oracle(), [0.0], [1.0], h=1e-4)
    one_sided = reconstruct_at(exp_oracle(), [0.0], [1.0], h=1e-4,
                               scheme="one_sided")
    assert operator_distance(central, X_GEN) < operator_distance(one_sided, X_GEN)
    assert operator_distance(one_sided, X_GEN) < 1e-3  # O(h)


def test_roundtrip_magnetic_grid():
    conn = magnetic_connection()
    grid = grid_points(((-1.0, 1.0), (-1.0, 1.0)), (10, 10))
    assert roundtrip_error(conn, grid, h=1e-4) < 1e-4


def test_roundtrip_constant_connection():
    conn = constant_connection(LINE, [X_GEN])
    assert roundtrip_error(conn, [[0.0], [0.5], [-0.3]], h=1e-4) < 1e-8


def test_homogeneity_and_additivity():
    conn = magnetic_connection()
    oracle = TransportOracle.from_connection(conn)
    p = np.array([0.4, -0.2])
    v = np.array([0.8, 0.5])
    assert homogeneity_residual(oracle, p, v, 1.0) == 0.0
    assert homogeneity_residual(oracle, p, v, 2.0, h=1e-4) < 1e-6
    u = np.array([-0.3, 1.1])
    assert additivity_residual(oracle, p, u, v, h=1e-4) < 1e-6
    with pytest.raises(InvalidInputError):
        homogeneity_residual(oracle, p, v, -1.0)


def test_central_difference_order():
    conn = magnetic_connection()
    oracle = TransportOracle.from_connection(conn)
    p, v = np.array([0.7, 0.3]), np.array([1.0, 0.5])
    truth = conn.evaluate(p, v)
    err = {h: operator_distance(reconstruct_at(oracle, p, v, h=h), truth)
           for h in (2e-3, 1e-3, 5e-4)}
    assert 3.5 < err[2e-3] / err[1e-3] < 4.5
    assert 3.5 < err[1e-3] / err[5e-4] < 4.5


def test_gauge_compatibility_of_reconstruction():
    # reconstructing from g(y) F g(x)^-1 recovers the gauge-transformed form
    conn = magnetic_connection()
    gauge = one_parameter_gauge(
        conn.chart, np.array([[0.4]]),
        profile=lambda p: float(np.sin(p[0]) - 0.3 * p[1]),
        profile_grad=lambda p: np.array([np.cos(p[0]), -0.3]))
    oracle = TransportOracle.from_connection(conn).conjugated(gauge)
    primed = gauge_transform(conn, gauge)
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(5):
        p = rng.uniform(-0.8, 0.8, size=2)
        for i in range(2):
            e = np.zeros(2)
            e[i] = 1.0
            rec = reconstruct_at(oracle, p, e, h=1e-4)
            worst = max(worst, operator_distance(rec, primed.coefficient(i, p)))
    assert worst < 1e-4


def test_reconstruct_connection_object():
    conn = magnetic_connection()
    oracle = TransportOracle.from_connection(conn)
    rebuilt = reconstruct_connection(oracle, h=1e-4)
    p = np.array([0.5, -0.6])
    v = np.array([1.3, 0.4])
    assert operator_distance(rebuilt.evaluate(p, v), conn.evaluate(p, v)) < 1e-4


def test_oracle_validates_results():
    bad = TransportOracle(LINE, 2, lambda p, v, s, t: np.full((2, 2), np.nan))
    with pytest.raises(OracleError):
        bad([0.0], [1.0], 0.0, 0.5)
    mismatched = TransportOracle(LINE, 3, lambda p, v, s, t: np.eye(2))
    with pytest.raises(OracleError):
        mismatched([0.0], [1.0], 0.0, 0.5)


def test_tabulated_oracle_roundtrip(tmp_path):
    table = tmp_path / "oracle.csv"
    ts = np.linspace(-0.02, 0.02, 33)
    probes = [(np.array([0.0]), np.array([1.0])),
              (np.array([0.5]), np.array([1.0]))]
    tabulate_oracle(exp_oracle(), probes, ts, table)

    loaded = oracle_from_table(table, LINE, 2)
    got = reconstruct_at(loaded, [0.0], [1.0], h=1e-3)
    assert operator_distance(got, X_GEN) < 1e-6
    # cocycle recovery F(s, t) = F(0, t) F(0, s)^-1
    direct = exp_oracle()([0.5], [1.0], 0.005, 0.015)
    np.testing.assert_allclose(loaded([0.5], [1.0], 0.005, 0.015), direct,
                               atol=1e-9)
    # probes and parameters off the table are refused
    with pytest.raises(OracleError):
        loaded([0.25], [1.0], 0.0, 0.01)
    with pytest.raises(OracleError):
        loaded([0.0], [1.0], 0.0, 0.5)
