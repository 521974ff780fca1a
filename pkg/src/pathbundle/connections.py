"""Connection 1-forms and gauge fields on coordinate charts.

A chart is a copy of R^n.  A connection form A on a chart with fiber
dimension d is given by n component fields A_i(p), each valued in d x d
matrices; its evaluation on a tangent vector v at p is

    A(p, v) = sum_i v_i A_i(p),

which is exactly linear in v by construction.  A gauge field g assigns an
invertible d x d matrix to each point; it acts on connection forms by

    A'_i(p) = g(p) A_i(p) g(p)^-1 + (d_i g)(p) g(p)^-1,

the sign being fixed by the covariance identity
g(y) F_A(x, y) = F_A'(x, y) g(x) for transports solving dF = A(gamma') F.

Component fields may be closed-form callables, polynomial data, or sampled
grids with tensor-product cubic interpolation (clamped at the boundary).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import InvalidInputError, SingularGaugeError
from .matrices import as_endmap, matrix_inverse, smallest_singular_value

# Central-difference step for gauge derivatives when no closed form is given.
GAUGE_FD_STEP = 1e-5


@dataclass(frozen=True)
class Chart:
    """A coordinate chart R^n with an optional sampling box.

    The bounding box is advisory: it scopes grid sampling and interpolation,
    not evaluation.
    """

    dim: int
    bbox: tuple = None  # ((lo_1, hi_1), ..., (lo_n, hi_n)) or None

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidInputError(f"chart dimension must be >= 1, got {self.dim}")
        if self.bbox is not None and len(self.bbox) != self.dim:
            raise InvalidInputError("bbox must give one (lo, hi) pair per dimension")

    def check_point(self, p):
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.shape[0] != self.dim:
            raise InvalidInputError(
                f"point has dimension {p.shape[0]}, chart has dimension {self.dim}"
            )
        if not np.all(np.isfinite(p)):
            raise InvalidInputError("point has non-finite coordinates")
        return p


class ConnectionForm:
    """An End(V)-valued 1-form on a chart, one matrix field per coordinate.

    Parameters
    ----------
    chart : Chart
    fiber_dim : int
        Dimension d of the fiber V.
    components : sequence of callables
        components[i](p) returns the d x d matrix A_i(p); one per chart
        coordinate.
    name : str
        Diagnostic label.
    """

    def __init__(self, chart, fiber_dim, components, name=""):
        if fiber_dim < 1:
            raise InvalidInputError("fiber dimension must be >= 1")
        if len(components) != chart.dim:
            raise InvalidInputError(
                f"got {len(components)} component fields for a "
                f"{chart.dim}-dimensional chart"
            )
        self.chart = chart
        self.fiber_dim = fiber_dim
        self.components = tuple(components)
        self.name = name

    def coefficient(self, i, p):
        """The i-th component matrix A_i(p)."""
        p = self.chart.check_point(p)
        a = as_endmap(self.components[i](p))
        if a.shape[0] != self.fiber_dim:
            raise InvalidInputError(
                f"component {i} returned a {a.shape[0]}x{a.shape[1]} matrix; "
                f"fiber dimension is {self.fiber_dim}"
            )
        return a

    def __call__(self, p, v):
        return self.evaluate(p, v)

    def evaluate(self, p, v):
        """A(p, v) = sum_i v_i A_i(p); exactly linear in v."""
        p = self.chart.check_point(p)
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.shape[0] != self.chart.dim:
            raise InvalidInputError(
                f"direction has dimension {v.shape[0]}, chart has {self.chart.dim}"
            )
        out = np.zeros((self.fiber_dim, self.fiber_dim))
        for i in range(self.chart.dim):
            if v[i] != 0.0:
                out = out + v[i] * self.coefficient(i, p)
        return out

    def evaluate_unchecked(self, p, v):
        """evaluate() without input validation, for integrator hot loops.

        Callers validate one sample up front and the finiteness of whatever
        they accumulate.
        """
        out = None
        for i, comp in enumerate(self.components):
            vi = v[i]
            if vi != 0.0:
                term = vi * comp(p)
                out = term if out is None else out + term
        if out is None:
            return np.zeros((self.fiber_dim, self.fiber_dim))
        return out


class GaugeField:
    """A pointwise-invertible matrix field g on a chart.

    ``derivative`` may supply closed-form partials as derivative(i, p);
    otherwise partials come from central differences with step ``fd_step``
    (one Richardson extrapolation level when ``richardson`` is set).
    """

    def __init__(self, chart, func, derivative=None, fd_step=GAUGE_FD_STEP,
                 richardson=False, name=""):
        self.chart = chart
        self._func = func
        self._derivative = derivative
        self.fd_step = float(fd_step)
        self.richardson = bool(richardson)
        self.name = name

    def __call__(self, p):
        p = self.chart.check_point(p)
        g = as_endmap(self._func(p))
        if smallest_singular_value(g) <= 1e-10:
            raise SingularGaugeError(
                f"gauge field{' ' + self.name if self.name else ''} is singular "
                f"at p = {p}"
            )
        return g

    def inverse_at(self, p):
        return matrix_inverse(self(p))

    def partial(self, i, p):
        """d_i g at p: closed form when available, else central differences."""
        p = self.chart.check_point(p)
        if self._derivative is not None:
            return as_endmap(self._derivative(i, p))
        return self._fd_partial(i, p)

    def _fd_partial(self, i, p):
        h = self.fd_step
        e = np.zeros(self.chart.dim)
        e[i] = 1.0
        d1 = (self._func(p + h * e) - self._func(p - h * e)) / (2.0 * h)
        if not self.richardson:
            return as_endmap(d1)
        d2 = (self._func(p + 0.5 * h * e) - self._func(p - 0.5 * h * e)) / h
        return as_endmap((4.0 * d2 - d1) / 3.0)


def gauge_transform(a, g):
    """Act on a connection form by a gauge field.

    Returns the connection form with components

        A'_i(p) = g(p) A_i(p) g(p)^-1 + (d_i g)(p) g(p)^-1,

    the unique 1-form whose transport satisfies the covariance identity
    g(y) F_A(x, y) = F_A'(x, y) g(x) under the transport convention
    dF/du = A(gamma') F.  (Differentiate g(y) F_A(x, y) g(x)^-1 in y: the
    coefficient that appears is g A g^-1 + (dg) g^-1.)

    Raises SingularGaugeError if g is singular at an evaluation point.
    """
    if g.chart.dim != a.chart.dim:
        raise InvalidInputError("connection and gauge live on different charts")

    def component(i):
        def field_i(p):
            gp = g(p)
            gp_inv = matrix_inverse(gp)
            return gp @ a.coefficient(i, p) @ gp_inv + g.partial(i, p) @ gp_inv
        return field_i

    return ConnectionForm(
        a.chart, a.fiber_dim,
        [component(i) for i in range(a.chart.dim)],
        name=f"gauge({a.name or 'A'})",
    )


# ---------------------------------------------------------------------------
# connection presets
# ---------------------------------------------------------------------------

def zero_connection(chart, fiber_dim):
    """A == 0: flat transport, every path maps to the identity."""
    z = np.zeros((fiber_dim, fiber_dim))
    return ConnectionForm(chart, fiber_dim,
                          [lambda p, z=z: z] * chart.dim, name="zero")


def constant_connection(chart, mats):
    """Constant component matrices: A_i(p) = X_i for all p."""
    mats = [as_endmap(m) for m in mats]
    if len(mats) != chart.dim:
        raise InvalidInputError("need one constant matrix per chart coordinate")
    d = mats[0].shape[0]
    if any(m.shape[0] != d for m in mats):
        raise InvalidInputError("constant component matrices differ in size")
    return ConnectionForm(chart, d,
                          [lambda p, m=m: m for m in mats], name="constant")


def magnetic_connection(strength=1.0, bbox=((-2.0, 2.0), (-2.0, 2.0))):
    """Scalar field on R^2: A = strength * (x dy - y dx).

    Fiber dimension 1; transport along a closed loop is exp(2 * strength *
    signed enclosed area).
    """
    chart = Chart(2, bbox)
    s = float(strength)
    return ConnectionForm(
        chart, 1,
        [lambda p: np.array([[-s * p[1]]]),
         lambda p: np.array([[s * p[0]]])],
        name="magnetic",
    )


def polynomial_connection(chart, fiber_dim, terms):
    """Polynomial component fields.

    ``terms[i]`` is a list of (exponents, matrix) pairs for coordinate i;
    A_i(p) = sum over pairs of matrix * prod_k p_k**exponents\\[k\\].
    """
    if len(terms) != chart.dim:
        raise InvalidInputError("need one term list per chart coordinate")
    parsed = []
    for term_list in terms:
        pairs = []
        for exponents, mat in term_list:
            exponents = tuple(int(e) for e in exponents)
            if len(exponents) != chart.dim:
                raise InvalidInputError("exponent tuple length must equal chart dim")
            m = as_endmap(mat)
            if m.shape[0] != fiber_dim:
                raise InvalidInputError("polynomial coefficient has wrong fiber size")
            pairs.append((exponents, m))
        parsed.append(tuple(pairs))

    def component(pairs):
        def field(p):
            out = np.zeros((fiber_dim, fiber_dim))
            for exponents, m in pairs:
                mono = 1.0
                for pk, ek in zip(p, exponents):
                    if ek:
                        mono *= pk ** ek
                out = out + mono * m
            return out
        return field

    return ConnectionForm(chart, fiber_dim,
                          [component(pairs) for pairs in parsed],
                          name="polynomial")


def levi_civita_sphere_connection(bbox=((-4.0, 4.0), (-4.0, 4.0))):
    """Levi-Civita connection of the round sphere in a stereographic chart.

    In stereographic coordinates the metric is conformal,
    ds^2 = 4 (dX^2 + dY^2) / (1 + r^2)^2, and the Christoffel symbols of a
    conformal metric e^(2 lam) delta are

        G^j_ik = d_i(lam) delta_jk + d_k(lam) delta_ji - d_j(lam) delta_ik,

    with lam = log 2 - log(1 + r^2).  Transport of tangent-vector components
    solves dV/dt = A(gamma') V with (A_i)^j_k = -G^j_ik.
    """
    chart = Chart(2, bbox)

    def component(i):
        def field(p):
            mu = -2.0 * p / (1.0 + p @ p)  # d(lam)/dp
            a = np.zeros((2, 2))
            for j in range(2):
                for k in range(2):
                    gamma = 0.0
                    if j == i:
                        gamma += mu[k]
                    if j == k:
                        gamma += mu[i]
                    if i == k:
                        gamma -= mu[j]
                    a[j, k] = -gamma
            return a
        return field

    return ConnectionForm(chart, 2, [component(0), component(1)],
                          name="levi_civita_sphere")


def sampled_connection(chart, fiber_dim, axes, values):
    """Connection from sampled component fields with cubic interpolation.

    ``axes`` is a tuple of n strictly increasing 1d grids; ``values`` has
    shape (n, *grid_shape, d, d).  Queries are clamped to the grid box.
    """
    values = np.asarray(values, dtype=float)
    grid_shape = tuple(len(ax) for ax in axes)
    expect = (chart.dim, *grid_shape, fiber_dim, fiber_dim)
    if values.shape != expect:
        raise InvalidInputError(
            f"sampled values have shape {values.shape}, expected {expect}")
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("sampled connection values must be finite")
    lo = np.array([ax[0] for ax in axes])
    hi = np.array([ax[-1] for ax in axes])
    interps = [
        RegularGridInterpolator(axes, values[i], method="cubic")
        for i in range(chart.dim)
    ]

    def component(i):
        def field(p):
            q = np.clip(p, lo, hi)
            return interps[i](q)[0]
        return field

    return ConnectionForm(chart, fiber_dim,
                          [component(i) for i in range(chart.dim)],
                          name="sampled")


# ---------------------------------------------------------------------------
# gauge presets
# ---------------------------------------------------------------------------

def constant_gauge(chart, mat):
    """g(p) = G for all p; derivative vanishes identically."""
    g0 = as_endmap(mat)
    d = g0.shape[0]
    zero = np.zeros((d, d))
    return GaugeField(chart, lambda p: g0,
                      derivative=lambda i, p: zero, name="constant")


def exponential_gauge(chart, generator, direction=None):
    """g(p) = exp((u . p) X) with closed-form derivative d_i g = u_i X g.

    ``direction`` u defaults to the first coordinate axis, so on R^1 this is
    the one-parameter group t -> exp(t X).
    """
    x = as_endmap(generator)
    if direction is None:
        u = np.zeros(chart.dim)
        u[0] = 1.0
    else:
        u = np.asarray(direction, dtype=float).reshape(-1)
        if u.shape[0] != chart.dim:
            raise InvalidInputError("direction length must equal chart dim")
    exp_of = _cached_exponential(x)

    def g_at(p):
        return exp_of(u @ p)

    return GaugeField(chart, g_at,
                      derivative=lambda i, p: u[i] * (x @ g_at(p)),
                      name="exponential")


def one_parameter_gauge(chart, generator, profile, profile_grad, frame=None):
    """g(p) = G0 exp(phi(p) X) with closed-form derivative.

    ``profile`` is a scalar field phi, ``profile_grad`` its gradient
    (returns a length-n array); d_i g = phi_i(p) G0 X exp(phi X).
    The exponential is evaluated through a cached eigendecomposition of X.
    """
    x = as_endmap(generator)
    g0 = as_endmap(frame) if frame is not None else np.eye(x.shape[0])
    exp_of = _cached_exponential(x)

    def g_at(p):
        return g0 @ exp_of(profile(p))

    def dg(i, p):
        return profile_grad(p)[i] * (g0 @ x @ exp_of(profile(p)))

    return GaugeField(chart, g_at, derivative=dg, name="one_parameter")


def _cached_exponential(x):
    """t -> exp(t x) through a cached eigendecomposition.

    Falls back to scipy's expm when x is defective (ill-conditioned
    eigenvector matrix).
    """
    import scipy.linalg

    evals, vecs = np.linalg.eig(x)
    real_input = not np.iscomplexobj(x)
    use_eig = np.linalg.cond(vecs) < 1e8
    if use_eig:
        vecs_inv = np.linalg.inv(vecs)
        check = (vecs * np.exp(evals)) @ vecs_inv
        use_eig = np.allclose(check, scipy.linalg.expm(x), atol=1e-12, rtol=1e-10)

    if use_eig:
        def exp_of(t):
            e = (vecs * np.exp(t * evals)) @ vecs_inv
            return e.real if real_input else e
    else:
        def exp_of(t):
            return scipy.linalg.expm(t * x)

    return exp_of
