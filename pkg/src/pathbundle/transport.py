"""Parallel transport along chart paths by two independent methods.

Transport of a connection form A along gamma from parameter s to t is the
solution F(s, t) of the linear initial value problem

    dF/du = A(gamma(u), gamma'(u)) F,    F(s, s) = id,

integrated here with a fixed-step classical 4th-order Runge-Kutta scheme
(``transport_ode``).  The independent second route is the ordered product
of exponentials

    F(s, t) ~= exp(D A(u_N)) ... exp(D A(u_2)) exp(D A(u_1)),

with D = (t - s)/N and u_i the left endpoint or midpoint of the i-th
subinterval (``transport_product``).  Later subintervals enter on the left:
the factor closest to the target is applied last, matching composition of
transports F(y, z) F(x, y) = F(x, z).

Both methods accept s > t and then return the inverse-direction solution.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .matrices import (as_gaugemap, matrix_exponential, operator_distance,
                       smallest_singular_value)

# Step-count density: steps per unit parameter length (config default).
STEPS_PER_UNIT = 2048
# Default ODE parameter step for cocycle residuals.
COCYCLE_STEP = 1e-3


@dataclass(frozen=True)
class TransportResult:
    """An invertible transport map plus bookkeeping about how it was made."""

    map: np.ndarray
    method: str          # "ode" | "product"
    steps: int
    error_estimate: float = None

    def __post_init__(self):
        as_gaugemap(self.map)

    @property
    def smallest_singular_value(self):
        return smallest_singular_value(self.map)


def default_steps(s, t, per_unit=STEPS_PER_UNIT):
    """Fixed-step count for the interval [s, t]: per_unit steps per unit length."""
    return max(1, int(np.ceil(abs(t - s) * per_unit)))


def _rhs(connection, path, validate_at=()):
    """Right-hand side u -> A(gamma(u), gamma'(u)).

    Full input validation runs once at the ``validate_at`` parameters;
    the returned closure then uses the unchecked evaluation path (any
    non-finite blowup is still caught on the accumulated result).
    """
    for u in validate_at:
        connection.evaluate(path.point(u), path.speed_vector(u))
    position, velocity = path.position, path.velocity
    evaluate = connection.evaluate_unchecked

    def f(u):
        return evaluate(np.asarray(position(u), dtype=float),
                        np.asarray(velocity(u), dtype=float))
    return f


def _rk4_solve(f, dim, s, t, steps):
    """Classical RK4 for dF/du = f(u) F, F(s) = id, fixed step (t-s)/steps."""
    h = (t - s) / steps
    y = np.eye(dim)
    a_left = f(s)
    for k in range(steps):
        u = s + k * h
        a_mid = f(u + 0.5 * h)
        a_right = f(u + h)
        k1 = a_left @ y
        k2 = a_mid @ (y + (0.5 * h) * k1)
        k3 = a_mid @ (y + (0.5 * h) * k2)
        k4 = a_right @ (y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        a_left = a_right
    return y


def transport_ode(connection, path, s=None, t=None, steps=None,
                  estimate_error=False):
    """Parallel transport by the fixed-step RK4 reference integrator.

    Parameters
    ----------
    connection : ConnectionForm
    path : Path
        Must live on the same chart as the connection.
    s, t : float
        Parameter endpoints; default to the path carrier.  s == t returns
        the identity exactly; s > t returns the inverse-direction solution.
    steps : int
        Fixed step count; defaults to STEPS_PER_UNIT per unit length.
    estimate_error : bool
        When set, a half-resolution solve provides a Richardson-style
        truncation estimate in the result.
    """
    if connection.chart.dim != path.chart.dim:
        raise InvalidInputError("connection and path live on different charts")
    if s is None:
        s = path.carrier[0]
    if t is None:
        t = path.carrier[1]
    a, b = path.domain
    lo, hi = min(s, t), max(s, t)
    if lo < a - 1e-12 or hi > b + 1e-12:
        raise InvalidInputError(
            f"[{s}, {t}] is not inside the path domain [{a}, {b}]")

    d = connection.fiber_dim
    if s == t:
        return TransportResult(np.eye(d), "ode", 0, 0.0)
    if steps is None:
        steps = default_steps(s, t)
    if steps < 1:
        raise InvalidInputError("steps must be >= 1")

    f = _rhs(connection, path, validate_at=(s, t))
    y = _rk4_solve(f, d, s, t, steps)
    estimate = None
    if estimate_error and steps >= 2:
        coarse = _rk4_solve(f, d, s, t, steps // 2)
        estimate = operator_distance(y, coarse) / 15.0
    return TransportResult(y, "ode", steps, estimate)


def transport_product(connection, path, s=None, t=None, n=64, rule="left"):
    """Parallel transport by the ordered product of exponentials.

    Splits [s, t] into n equal subintervals and multiplies
    exp(D * A(gamma(u_i), gamma'(u_i))) with u_i the left endpoint
    (rule="left", first order) or midpoint (rule="midpoint", second order)
    of the i-th subinterval.  Factors for later subintervals are applied on
    the left.
    """
    if connection.chart.dim != path.chart.dim:
        raise InvalidInputError("connection and path live on different charts")
    if s is None:
        s = path.carrier[0]
    if t is None:
        t = path.carrier[1]
    if rule not in ("left", "midpoint"):
        raise InvalidInputError(f"unknown rule {rule!r} (use 'left' or 'midpoint')")
    d = connection.fiber_dim
    if s == t:
        return TransportResult(np.eye(d), "product", 0, 0.0)
    if n < 1:
        raise InvalidInputError("n must be >= 1")

    f = _rhs(connection, path, validate_at=(s, t))
    h = (t - s) / n
    offset = 0.0 if rule == "left" else 0.5
    y = np.eye(d)
    for i in range(n):
        u = s + (i + offset) * h
        y = matrix_exponential(h * f(u)) @ y
    return TransportResult(y, "product", n, None)


def cocycle_residual(connection, path, x, y, z, step=COCYCLE_STEP):
    """Distance between F(y, z) F(x, y) and F(x, z).

    All three legs use transport_ode with fixed parameter step ``step``.
    Requires x <= y <= z inside the path domain.
    """
    if not x <= y <= z:
        raise InvalidInputError("need x <= y <= z for the cocycle residual")

    def legs(lo, hi):
        if lo == hi:
            return TransportResult(np.eye(connection.fiber_dim), "ode", 0, 0.0)
        return transport_ode(connection, path, lo, hi,
                             steps=max(1, int(np.ceil((hi - lo) / step))))

    f_xy = legs(x, y).map
    f_yz = legs(y, z).map
    f_xz = legs(x, z).map
    return operator_distance(f_yz @ f_xy, f_xz)


def method_agreement(connection, path, s=None, t=None, n_values=(16, 64, 256),
                     rule="left", reference_steps=None):
    """Distances between the product formula and the ODE reference.

    Returns (reference, [(n, distance), ...]); the reference is a single
    high-resolution transport_ode solve.
    """
    ref = transport_ode(connection, path, s, t, steps=reference_steps)
    rows = []
    for n in n_values:
        prod = transport_product(connection, path, s, t, n=n, rule=rule)
        rows.append((n, operator_distance(prod.map, ref.map)))
    return ref, rows


def convergence_slope(pairs):
    """Least-squares slope of log(error) against log(n).

    ``pairs`` is a sequence of (n, error); entries with error at the
    round-off floor (< 1e-14) are dropped.
    """
    pts = [(n, e) for n, e in pairs if e > 1e-14]
    if len(pts) < 2:
        raise InvalidInputError("need at least two points above round-off")
    logn = np.log([float(n) for n, _ in pts])
    loge = np.log([float(e) for _, e in pts])
    slope = np.polyfit(logn, loge, 1)[0]
    return float(-slope)
