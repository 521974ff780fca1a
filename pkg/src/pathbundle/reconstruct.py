"""Recover a connection form from a black-box transport functor.

A transport oracle is a callable F(p, v, s, t) returning the transport
matrix along the affine probe gamma(u) = p + u v from parameter s to t,
normalized so that F(p, v, s, s) = id.  The connection is read off as the
parameter derivative at zero,

    A_p(v) = d/dt F(p, v, 0, t) |_{t=0},

approximated by central differences, (F(0, h) - F(0, -h)) / (2h), an
O(h^2)-accurate scheme.  The one-sided quotient (F(0, h) - id) / h is kept
as a cross-check mode.  Positive homogeneity and additivity of v -> A_p(v)
are exposed as residuals.
"""

import numpy as np

from .connections import ConnectionForm
from .errors import InvalidInputError, OracleError
from .matrices import as_endmap, matrix_inverse, operator_distance
from .paths import affine_path
from .transport import transport_ode

DEFAULT_PROBE_STEP = 1e-4
# Fixed RK4 steps per oracle probe; probe intervals are O(h), so truncation
# is negligible at this resolution.
ORACLE_ODE_STEPS = 16


class TransportOracle:
    """Black-box transport data on affine probes through a chart.

    Wraps ``func(p, v, s, t) -> (d, d) array``; every result is validated
    finite, and F(p, v, s, s) must be the identity.
    """

    def __init__(self, chart, fiber_dim, func, name=""):
        self.chart = chart
        self.fiber_dim = fiber_dim
        self._func = func
        self.name = name

    def __call__(self, p, v, s, t):
        p = self.chart.check_point(p)
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.shape[0] != self.chart.dim:
            raise InvalidInputError("probe direction does not match chart dim")
        try:
            out = as_endmap(self._func(p, v, s, t))
        except InvalidInputError as exc:
            raise OracleError(f"oracle returned unusable data: {exc}") from exc
        if out.shape[0] != self.fiber_dim:
            raise OracleError(
                f"oracle returned a {out.shape[0]}x{out.shape[1]} matrix, "
                f"fiber dimension is {self.fiber_dim}")
        return out

    @classmethod
    def from_connection(cls, connection, steps=ORACLE_ODE_STEPS):
        """The transport of a connection form, packaged as an oracle."""
        def func(p, v, s, t):
            lo = min(0.0, s, t) - 1.0
            hi = max(0.0, s, t) + 1.0
            probe = affine_path(connection.chart, p, v, (lo, hi))
            return transport_ode(connection, probe, s, t, steps=steps).map
        return cls(connection.chart, connection.fiber_dim, func,
                   name=f"transport({connection.name or 'A'})")

    def conjugated(self, gauge):
        """The oracle p, v, s, t -> g(p + t v) F(p, v, s, t) g(p + s v)^-1."""
        def func(p, v, s, t):
            left = gauge(p + t * np.asarray(v, dtype=float))
            right = matrix_inverse(gauge(p + s * np.asarray(v, dtype=float)))
            return left @ self(p, v, s, t) @ right
        return TransportOracle(self.chart, self.fiber_dim, func,
                               name=f"conj({self.name})")


def reconstruct_at(oracle, p, v, h=DEFAULT_PROBE_STEP, scheme="central"):
    """A_p(v) from the oracle by differencing at parameter zero.

    scheme="central" is the default O(h^2) rule; scheme="one_sided" is the
    first-order quotient kept as a cross-check.
    """
    if h <= 0:
        raise InvalidInputError("probe step h must be positive")
    if scheme == "central":
        plus = oracle(p, v, 0.0, h)
        minus = oracle(p, v, 0.0, -h)
        return (plus - minus) / (2.0 * h)
    if scheme == "one_sided":
        plus = oracle(p, v, 0.0, h)
        return (plus - np.eye(oracle.fiber_dim)) / h
    raise InvalidInputError(f"unknown scheme {scheme!r}")


def homogeneity_residual(oracle, p, v, lam, h=DEFAULT_PROBE_STEP):
    """Distance between A_p(lam v) and lam A_p(v) for lam > 0.

    The scaled probe uses step h / lam so both derivatives sample the same
    stretch of the chart.
    """
    if lam <= 0:
        raise InvalidInputError("homogeneity factor must be positive")
    v = np.asarray(v, dtype=float)
    scaled = reconstruct_at(oracle, p, lam * v, h / lam)
    base = reconstruct_at(oracle, p, v, h)
    return operator_distance(scaled, lam * base)


def additivity_residual(oracle, p, u, v, h=DEFAULT_PROBE_STEP):
    """Distance between A_p(u + v) and A_p(u) + A_p(v)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    total = reconstruct_at(oracle, p, u + v, h)
    parts = reconstruct_at(oracle, p, u, h) + reconstruct_at(oracle, p, v, h)
    return operator_distance(total, parts)


def reconstruct_connection(oracle, h=DEFAULT_PROBE_STEP):
    """Connection form with components A_i(p) read off along coordinate axes.

    Linearity of v -> A_p(v) justifies sampling only coordinate directions.
    """
    n = oracle.chart.dim

    def component(i):
        e = np.zeros(n)
        e[i] = 1.0
        def field(p):
            return reconstruct_at(oracle, p, e, h)
        return field

    return ConnectionForm(oracle.chart, oracle.fiber_dim,
                          [component(i) for i in range(n)],
                          name=f"reconstructed({oracle.name})")


def roundtrip_error(connection, grid, h=DEFAULT_PROBE_STEP,
                    steps=ORACLE_ODE_STEPS):
    """Max reconstruction error over a point grid, against direct evaluation.

    Wraps the connection's transport as an oracle, reconstructs along every
    coordinate direction at every grid point, and returns the largest
    operator distance from the connection's own component matrices.
    """
    oracle = TransportOracle.from_connection(connection, steps=steps)
    n = connection.chart.dim
    worst = 0.0
    for p in grid:
        p = connection.chart.check_point(p)
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            rec = reconstruct_at(oracle, p, e, h)
            ref = connection.coefficient(i, p)
            worst = max(worst, operator_distance(rec, ref))
    return worst


def grid_points(bbox, counts):
    """Uniform grid inside a bounding box: one count per dimension."""
    axes = [np.linspace(lo, hi, c) for (lo, hi), c in zip(bbox, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


# ---------------------------------------------------------------------------
# tabulated oracles
#
# CSV schema (shared with the command-line tools): a header row then one row
# per (probe, parameter) sample,
#
#     p_0,...,p_{n-1}, v_0,...,v_{n-1}, t, m_0_0, m_0_1, ..., m_{d-1}_{d-1}
#
# where the matrix entries are F(p, v, 0, t) row-major.  Floats are written
# in scientific notation with 17 significant digits, so values round-trip
# exactly.  Queries interpolate t with a cubic spline per entry and recover
# F(p, v, s, t) = F(0, t) F(0, s)^-1 from the cocycle property; (p, v)
# pairs must match a tabulated probe.
# ---------------------------------------------------------------------------

def tabulate_oracle(oracle, probes, ts, path):
    """Write oracle samples F(p, v, 0, t) for each probe and t to a CSV file.

    ``probes`` is a sequence of (p, v) pairs; ``ts`` the parameter grid
    (shared by all probes).
    """
    import csv

    n = oracle.chart.dim
    d = oracle.fiber_dim
    header = ([f"p_{i}" for i in range(n)] + [f"v_{i}" for i in range(n)]
              + ["t"] + [f"m_{i}_{j}" for i in range(d) for j in range(d)])
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for p, v in probes:
            p = np.asarray(p, dtype=float).reshape(-1)
            v = np.asarray(v, dtype=float).reshape(-1)
            for t in ts:
                mat = oracle(p, v, 0.0, float(t))
                row = ([f"{c:.16e}" for c in p] + [f"{c:.16e}" for c in v]
                       + [f"{float(t):.16e}"]
                       + [f"{c:.16e}" for c in np.asarray(mat).ravel()])
                writer.writerow(row)


def oracle_from_table(path, chart, fiber_dim):
    """Load a tabulated transport oracle written by ``tabulate_oracle``.

    Each tabulated (p, v) probe gets a cubic interpolant of F(0, t); other
    probes, or parameters outside the tabulated range, raise OracleError.
    """
    import csv

    from scipy.interpolate import CubicSpline

    n, d = chart.dim, fiber_dim
    groups = {}
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        expected_cols = 2 * n + 1 + d * d
        if header is None or len(header) != expected_cols:
            raise OracleError(
                f"oracle table {path} has {0 if header is None else len(header)} "
                f"columns, expected {expected_cols}")
        for row in reader:
            values = [float(c) for c in row]
            key = tuple(values[:2 * n])
            groups.setdefault(key, []).append(
                (values[2 * n], values[2 * n + 1:]))
    if not groups:
        raise OracleError(f"oracle table {path} has no data rows")

    splines = {}
    for key, samples in groups.items():
        samples.sort(key=lambda pair: pair[0])
        ts = np.array([t for t, _ in samples])
        mats = np.array([m for _, m in samples]).reshape(len(ts), d, d)
        if len(ts) < 4:
            raise OracleError(
                f"probe {key} has {len(ts)} samples; cubic interpolation "
                f"needs at least 4")
        splines[key] = (CubicSpline(ts, mats, axis=0), ts[0], ts[-1])

    def lookup(p, v):
        key = tuple(p) + tuple(v)
        if key in splines:
            return splines[key]
        for cand, data in splines.items():
            if max(abs(a - b) for a, b in zip(cand, key)) < 1e-12:
                return data
        raise OracleError(f"probe (p={tuple(p)}, v={tuple(v)}) is not tabulated")

    def func(p, v, s, t):
        spline, lo, hi = lookup(p, v)
        for u in (s, t):
            if not lo - 1e-12 <= u <= hi + 1e-12:
                raise OracleError(
                    f"parameter {u} is outside the tabulated range [{lo}, {hi}]")
        return spline(t) @ matrix_inverse(spline(s))

    return TransportOracle(chart, fiber_dim, func, name=f"table({path})")
