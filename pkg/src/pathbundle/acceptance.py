"""The acceptance suite: eight numbered criteria run at fixed tolerances.

Each criterion function takes a seed, runs deterministically, and returns a
CriterionResult holding named checks with their computed values and
thresholds.  ``run_all`` executes the full suite; the CLI's verify-all
subcommand and the test suite both call into this module.

  1. cocycle identity of transport over the preset connections
  2. product-formula convergence orders (left / midpoint)
  3. gauge covariance of transport under random smooth gauges
  4. constant-path identity and reparametrization invariance
  5. connection reconstruction: round trip, linearity, O(h^2) order
  6. glued sphere holonomy against the closed-form rotation angle
  7. descent: cut refinement, single-chart agreement, Cech cocycles
  8. bordism relations: snakes, circle trace, monoidality, sitting profiles
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import bordisms
from .bundles import (chart_global_path, check_cech_cocycle, circle_loop,
                      colatitude_loop, constant_circle_cocycle, circle_atlas,
                      flat_circle_bundle, global_transport,
                      levi_civita_sphere_bundle, loop_holonomy_angle,
                      single_chart_bundle, sphere_tangent_cocycle,
                      sphere_atlas, subordinate_cut)
from .connections import (Chart, constant_connection, gauge_transform,
                          levi_civita_sphere_connection, magnetic_connection,
                          one_parameter_gauge, polynomial_connection,
                          zero_connection)
from .matrices import operator_distance, smallest_singular_value
from .paths import (affine_path, circle_arc_path, constant_path,
                    power_reparametrization, reparametrize,
                    sitting_reparametrization, spline_path)
from .reconstruct import (TransportOracle, additivity_residual,
                          grid_points, homogeneity_residual, reconstruct_at,
                          roundtrip_error)
from .transport import (convergence_slope, cocycle_residual, transport_ode,
                        transport_product)


@dataclass(frozen=True)
class Check:
    """One named numeric check against its threshold."""

    name: str
    value: float
    threshold: float
    comparator: str = "<"   # "<", "<=", ">=", "in" (threshold = (lo, hi))

    @property
    def passed(self):
        if self.comparator == "<":
            return self.value < self.threshold
        if self.comparator == "<=":
            return self.value <= self.threshold
        if self.comparator == ">=":
            return self.value >= self.threshold
        if self.comparator == "in":
            lo, hi = self.threshold
            return lo <= self.value <= hi
        raise ValueError(f"unknown comparator {self.comparator!r}")

    def describe(self):
        if self.comparator == "in":
            lo, hi = self.threshold
            bound = f"in [{lo:g}, {hi:g}]"
        else:
            bound = f"{self.comparator} {self.threshold:g}"
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict}  {self.name}: {self.value:.6e} {bound}"


@dataclass(frozen=True)
class CriterionResult:
    index: int
    name: str
    checks: tuple

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def describe(self):
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict}  criterion {self.index}: {self.name}"

    def detail_lines(self):
        return [f"  {c.describe()}" for c in self.checks]


# ---------------------------------------------------------------------------
# the shared preset suite
# ---------------------------------------------------------------------------

def preset_transport_suite():
    """Named (connection, path) pairs covering flat, abelian, non-abelian,
    and curved cases."""
    suite = []

    line = Chart(1, ((-1.0, 3.0),))
    suite.append(("zero",
                  zero_connection(line, 2),
                  affine_path(line, [0.0], [1.0])))

    x_gen = np.array([[0.2, 1.0], [-0.6, -0.1]])
    suite.append(("constant",
                  constant_connection(line, [x_gen]),
                  affine_path(line, [0.0], [1.0])))

    magnetic = magnetic_connection()
    suite.append(("magnetic",
                  magnetic,
                  circle_arc_path(magnetic.chart, (0.3, 0.2), 0.8, (0.0, 2.0))))

    plane = Chart(2, ((-2.0, 2.0), (-2.0, 2.0)))
    a_mat = np.array([[0.0, 0.7], [-0.7, 0.0]])
    b_mat = np.array([[0.3, 0.0], [0.4, -0.3]])
    poly = polynomial_connection(plane, 2, [
        [((0, 0), a_mat), ((1, 0), 0.5 * b_mat)],
        [((0, 1), b_mat)],
    ])
    suite.append(("polynomial",
                  poly,
                  circle_arc_path(plane, (0.1, -0.2), 0.9, (0.0, 2.0))))

    levi = levi_civita_sphere_connection()
    suite.append(("levi_civita_chart",
                  levi,
                  circle_arc_path(levi.chart, (0.2, 0.1), 0.7, (0.0, 2.0))))

    return suite


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def criterion_cocycle(seed=0):
    """F(y,z) F(x,y) = F(x,z) over presets and random triples, step 1e-3."""
    rng = np.random.default_rng([seed, 1])
    suite = preset_transport_suite()
    per_preset = 100 // len(suite)
    worst = 0.0
    for _, conn, path in suite:
        lo, hi = path.carrier
        for _ in range(per_preset):
            x, y, z = np.sort(rng.uniform(lo, hi, size=3))
            worst = max(worst, cocycle_residual(conn, path, x, y, z, step=1e-3))
    return CriterionResult(1, "cocycle identity", (
        Check("max cocycle residual (100 triples, step 1e-3)", worst, 1e-8),
    ))


def criterion_product_convergence(seed=0):
    """Product-formula error orders against the ODE reference (magnetic)."""
    magnetic = magnetic_connection()
    path = circle_arc_path(magnetic.chart, (0.3, 0.2), 0.8, (0.0, 2.0))
    reference = transport_ode(magnetic, path, steps=8192).map
    n_values = [2 ** k for k in range(4, 13)]  # 16 .. 4096
    errors = {}
    for rule in ("left", "midpoint"):
        rows = []
        for n in n_values:
            approx = transport_product(magnetic, path, n=n, rule=rule).map
            rows.append((n, operator_distance(approx, reference)))
        errors[rule] = rows
    left_slope = convergence_slope(errors["left"])
    mid_slope = convergence_slope(errors["midpoint"])
    result = CriterionResult(2, "product-formula convergence", (
        Check("left-rule slope", left_slope, (0.9, 1.1), "in"),
        Check("midpoint-rule slope", mid_slope, 1.8, ">="),
    ))
    return result, errors


def _random_gauge(chart, fiber_dim, rng):
    """A random smooth gauge G0 exp(phi(p) B) with closed-form derivative."""
    b_gen = rng.normal(scale=0.3, size=(fiber_dim, fiber_dim))
    g0 = np.eye(fiber_dim) + rng.normal(scale=0.2, size=(fiber_dim, fiber_dim))
    amp = rng.uniform(0.3, 0.9, size=chart.dim)
    shift = rng.uniform(0.0, 2.0 * math.pi, size=chart.dim)

    def profile(p):
        return float(np.sum(amp * np.sin(p + shift)))

    def profile_grad(p):
        return amp * np.cos(p + shift)

    return one_parameter_gauge(chart, b_gen, profile, profile_grad, frame=g0)


def criterion_gauge_covariance(seed=0, gauges_per_preset=10, steps=512):
    """g(y) F_A(x,y) = F_A'(x,y) g(x) for 50 random smooth gauges."""
    rng = np.random.default_rng([seed, 3])
    worst = 0.0
    for _, conn, path in preset_transport_suite():
        lo, hi = path.carrier
        for _ in range(gauges_per_preset):
            gauge = _random_gauge(conn.chart, conn.fiber_dim, rng)
            primed = gauge_transform(conn, gauge)
            x, y = np.sort(rng.uniform(lo, hi, size=2))
            f_a = transport_ode(conn, path, x, y, steps=steps).map
            f_ap = transport_ode(primed, path, x, y, steps=steps).map
            residual = operator_distance(
                gauge(path.point(y)) @ f_a, f_ap @ gauge(path.point(x)))
            worst = max(worst, residual)
    return CriterionResult(3, "gauge covariance", (
        Check("max covariance residual (50 gauges)", worst, 1e-7),
    ))


def criterion_identity_and_reparam(seed=0):
    """Constant paths transport to the identity; transport is invariant
    under orientation-preserving parameter changes."""
    id_worst = 0.0
    for _, conn, path in preset_transport_suite():
        base = constant_path(conn.chart, path.point(path.carrier[0]))
        result = transport_ode(conn, base)
        id_worst = max(id_worst, operator_distance(
            result.map, np.eye(conn.fiber_dim)))

    reparam_worst = 0.0
    for _, conn, path in preset_transport_suite():
        direct = transport_ode(conn, path).map
        for phi in (power_reparametrization(path.domain, 2.0),
                    sitting_reparametrization(path.domain)):
            pulled = reparametrize(path, phi)
            again = transport_ode(conn, pulled).map
            reparam_worst = max(reparam_worst, operator_distance(direct, again))

    return CriterionResult(4, "constant-path identity and reparametrization", (
        Check("max constant-path residual", id_worst, 1e-12),
        Check("max reparametrization residual", reparam_worst, 1e-8),
    ))


def criterion_reconstruction(seed=0):
    """Reconstruction round trip, linearity residuals, and O(h^2) order."""
    rng = np.random.default_rng([seed, 5])
    magnetic = magnetic_connection()
    grid = grid_points(((-1.0, 1.0), (-1.0, 1.0)), (10, 10))
    magnetic_rt = roundtrip_error(magnetic, grid, h=1e-4)

    line = Chart(1)
    x_gen = np.array([[0.2, 1.0], [-0.6, -0.1]])
    const = constant_connection(line, [x_gen])
    const_rt = roundtrip_error(const, [[0.0], [0.4], [-0.7]], h=1e-4)

    plane = Chart(2, ((-2.0, 2.0), (-2.0, 2.0)))
    a_mat = np.array([[0.0, 0.7], [-0.7, 0.0]])
    b_mat = np.array([[0.3, 0.0], [0.4, -0.3]])
    poly = polynomial_connection(plane, 2, [
        [((0, 0), a_mat), ((1, 0), 0.5 * b_mat)],
        [((0, 1), b_mat)],
    ])

    lin_worst = 0.0
    for conn in (magnetic, poly):
        oracle = TransportOracle.from_connection(conn)
        for _ in range(5):
            p = rng.uniform(-0.8, 0.8, size=2)
            u = rng.uniform(-1.0, 1.0, size=2)
            v = rng.uniform(-1.0, 1.0, size=2)
            lam = rng.uniform(0.5, 3.0)
            lin_worst = max(lin_worst,
                            homogeneity_residual(oracle, p, v, lam, h=1e-4),
                            additivity_residual(oracle, p, u, v, h=1e-4))

    # order of accuracy: halving h divides the error by ~4
    oracle = TransportOracle.from_connection(magnetic)
    p0, v0 = np.array([0.7, 0.3]), np.array([1.0, 0.5])
    truth = magnetic.evaluate(p0, v0)
    err_h = operator_distance(reconstruct_at(oracle, p0, v0, h=1e-3), truth)
    err_h2 = operator_distance(reconstruct_at(oracle, p0, v0, h=5e-4), truth)
    ratio = err_h / err_h2

    return CriterionResult(5, "reconstruction round trip", (
        Check("magnetic grid round-trip error (h=1e-4)", magnetic_rt, 1e-4),
        Check("constant-connection round-trip error", const_rt, 1e-8),
        Check("max homogeneity/additivity residual", lin_worst, 1e-6),
        Check("central-difference halving ratio", ratio, (3.5, 4.5), "in"),
    ))


# Rotation angle of the preset colatitude loop, measured in its source
# chart frame: traversal with increasing azimuth comes out as a clockwise
# rotation, i.e. minus the enclosed solid angle, modulo 2 pi.  The sign and
# the closed form are cross-checked against a dense product-formula oracle
# in the test suite.
def expected_colatitude_angle(theta):
    angle = -2.0 * math.pi * (1.0 - math.cos(theta))
    return _wrap_angle(angle)


def _wrap_angle(a):
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def circle_distance(a, b):
    return abs(_wrap_angle(a - b))


def criterion_sphere_holonomy(seed=0):
    """Glued Levi-Civita holonomy angles match 2 pi (1 - cos theta)."""
    bundle = levi_civita_sphere_bundle()
    checks = []
    for theta in (math.pi / 6, math.pi / 3, math.pi / 2):
        loop = colatitude_loop(bundle.atlas, theta)
        angle = loop_holonomy_angle(bundle, loop)
        gap = circle_distance(angle, expected_colatitude_angle(theta))
        checks.append(Check(
            f"holonomy angle gap at theta={theta:.4f}", gap, 1e-6))
    return CriterionResult(6, "sphere holonomy", tuple(checks))


def criterion_descent(seed=0):
    """Cut-refinement invariance, single-chart agreement, Cech residuals."""
    bundle = levi_civita_sphere_bundle()
    loop = colatitude_loop(bundle.atlas, math.pi / 3)
    cut = subordinate_cut(loop, bundle.atlas)
    base = global_transport(bundle, loop, cut=cut, target_chart=0).map
    refined = global_transport(bundle, loop, cut=cut.refined(),
                               target_chart=0).map
    twice = global_transport(bundle, loop, cut=cut.refined().refined(),
                             target_chart=0).map
    refine_worst = max(operator_distance(base, refined),
                       operator_distance(base, twice))

    # a loop that stays inside a single chart: glued == plain transport
    small = colatitude_loop(bundle.atlas, math.pi / 6)
    small_cut = subordinate_cut(small, bundle.atlas)
    glued = global_transport(bundle, small, cut=small_cut).map
    idx = small_cut.chart_indices[0]
    direct = transport_ode(bundle.connections[idx],
                           small.chart_path(idx)).map
    single_chart_gap = operator_distance(glued, direct)

    circle_bundle = flat_circle_bundle(far=_rotation(0.7))
    sphere_cech = check_cech_cocycle(sphere_tangent_cocycle(bundle.atlas),
                                     samples=8)
    circle_cech = check_cech_cocycle(circle_bundle.cocycle, samples=8)

    return CriterionResult(7, "descent and gluing", (
        Check("cut-refinement invariance", refine_worst, 1e-10),
        Check("glued vs single-chart transport", single_chart_gap, 1e-8),
        Check("Cech cocycle residual", max(sphere_cech, circle_cech), 1e-10),
    ))


def _rotation(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def criterion_bordism(seed=0):
    """Snake identities, circle-equals-trace, monoidality, sitting profiles."""
    magnetic = magnetic_connection()
    flat_bundle = single_chart_bundle(magnetic)
    base_point = chart_global_path(
        flat_bundle.atlas, constant_path(magnetic.chart, (0.3, 0.2)))
    snake_const = max(
        bordisms.snake_residual(flat_bundle, base_point, "plus"),
        bordisms.snake_residual(flat_bundle, base_point, "minus"))

    sphere_bundle = levi_civita_sphere_bundle()
    sphere_loop = colatitude_loop(sphere_bundle.atlas, math.pi / 3)
    snake_decorated = bordisms.snake_residual(sphere_bundle, sphere_loop, "plus")

    # circle word value = trace of the loop holonomy
    mag_loop = chart_global_path(
        flat_bundle.atlas,
        circle_arc_path(magnetic.chart, (0.3, 0.2), 0.8, (0.0, 2.0 * math.pi)))
    word = bordisms.circle_word(flat_bundle, mag_loop)
    value = bordisms.evaluate_bordism(word, flat_bundle).matrix[0, 0]
    holonomy = transport_ode(
        magnetic,
        circle_arc_path(magnetic.chart, (0.3, 0.2), 0.8, (0.0, 2.0 * math.pi))).map
    trace_gap = abs(value - np.trace(holonomy))

    # monoidality: a parallel pair of words equals the tensor of the parts
    first = bordisms.circle_word(flat_bundle, base_point)
    second = bordisms.snake_word(flat_bundle, base_point, "plus")
    union = bordisms.tensor_words(first, second)
    v1 = bordisms.evaluate_bordism(first, flat_bundle).matrix
    v2 = bordisms.evaluate_bordism(second, flat_bundle).matrix
    vu = bordisms.evaluate_bordism(union, flat_bundle).matrix
    monoidality = float(np.abs(np.kron(v1, v2) - vu).max())

    # sitting-instance insensitivity of a decorated arc
    arc = chart_global_path(
        flat_bundle.atlas,
        circle_arc_path(magnetic.chart, (0.3, 0.2), 0.8, (0.0, 2.0)))
    sat = arc.reparametrized(sitting_reparametrization(arc.domain))
    plain_value = _single_arc_value(flat_bundle, arc)
    sat_value = _single_arc_value(flat_bundle, sat)
    sitting_gap = operator_distance(plain_value, sat_value)

    return CriterionResult(8, "bordism relations", (
        Check("snake residual, constant decorations", snake_const, 1e-10),
        Check("snake residual, decorated across charts", snake_decorated, 1e-8),
        Check("circle word vs holonomy trace", trace_gap, 1e-8),
        Check("disjoint-union monoidality", monoidality, 1e-12),
        Check("sitting-instance insensitivity", sitting_gap, 1e-8),
    ))


def _single_arc_value(bundle, path):
    t0, _ = path.carrier
    chart = subordinate_cut(path, bundle.atlas).chart_indices[0]
    start = bordisms.SignedPoint(+1, path.position(t0), chart)
    word = bordisms.BordismWord(
        bordisms.ObjectConfig((start,)),
        ((bordisms.Arc(path, source_chart=chart),),))
    return bordisms.evaluate_bordism(word, bundle).matrix


ALL_CRITERIA = (
    ("cocycle identity", criterion_cocycle),
    ("product-formula convergence",
     lambda seed=0: criterion_product_convergence(seed)[0]),
    ("gauge covariance", criterion_gauge_covariance),
    ("constant-path identity and reparametrization", criterion_identity_and_reparam),
    ("reconstruction round trip", criterion_reconstruction),
    ("sphere holonomy", criterion_sphere_holonomy),
    ("descent and gluing", criterion_descent),
    ("bordism relations", criterion_bordism),
)


def run_all(seed=0, printer=None):
    """Run all eight criteria; returns the list of CriterionResult."""
    results = []
    for _, func in ALL_CRITERIA:
        result = func(seed=seed)
        results.append(result)
        if printer is not None:
            printer(result.describe())
            for line in result.detail_lines():
                printer(line)
    return results
