"""Atlases, transition cocycles, and glued global transport.

Manifold presets
----------------
line(dim)   a single chart R^n; manifold points are chart points.
circle()    angles mod 2pi, two overlapping interval charts; the two
            overlap components sit near angle 0 and near angle pi.
sphere()    the unit sphere in R^3, two stereographic charts projecting
            from the antipodal equatorial points +x and -x.  Each chart
            domain excludes a cap around its projection point, so paths
            near those points must change charts; colatitude loops around
            the z-axis at theta = pi/3 or pi/2 genuinely cross charts.

Conventions
-----------
Transition entries g_ij are callables of the *manifold* point and convert
fiber coordinates from the chart-i frame to the chart-j frame,
v_j = g_ij(q) v_i; the cocycle condition is g_jk g_ij = g_ik on triple
overlaps.  Glued transport along a cut path composes segment transports
with junction conversions,

    F = C_m F_m ... C_1 F_1,

where F_s solves the transport ODE in segment s's chart and C_s converts
frames at the junction point (C_m converts into the designated target
chart).  The result is reported with its source and target chart tags.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .connections import Chart, ConnectionForm, levi_civita_sphere_connection
from .errors import (CoverageError, InconsistentBundleError, InvalidInputError,
                     NotARotationError, SamplingError)
from .matrices import matrix_inverse, operator_distance
from .paths import Path
from .transport import STEPS_PER_UNIT, default_steps, transport_ode

# Interior margin for subordinate cutting, as a fraction of chart size.
CUT_MARGIN_FRACTION = 0.05
# Parameter samples per unit length when marching along a path.
CUT_SCAN_DENSITY = 512


class AtlasChart:
    """One chart of an atlas: coordinate maps plus a domain description.

    ``to_coords(q)``/``from_coords(x)`` convert between manifold points and
    chart coordinates; ``velocity_to_coords(q, dq)`` pushes a manifold
    velocity into the chart; ``depth(q)`` measures how far inside the chart
    domain q sits (<= 0 means outside), in units comparable to ``size``.
    """

    def __init__(self, index, chart, to_coords, from_coords,
                 velocity_to_coords, depth, size, coords_jacobian=None):
        self.index = index
        self.chart = chart
        self.to_coords = to_coords
        self.from_coords = from_coords
        self.velocity_to_coords = velocity_to_coords
        self.depth = depth
        self.size = size
        self._coords_jacobian = coords_jacobian

    def contains(self, q, margin=0.0):
        return self.depth(q) > margin

    def coords_jacobian(self, q):
        """d(from_coords)/dx at to_coords(q): point_dim x chart_dim matrix."""
        if self._coords_jacobian is not None:
            return self._coords_jacobian(q)
        x = self.to_coords(q)
        h = 1e-6
        cols = []
        for i in range(self.chart.dim):
            e = np.zeros(self.chart.dim)
            e[i] = h
            cols.append((np.asarray(self.from_coords(x + e), dtype=float)
                         - np.asarray(self.from_coords(x - e), dtype=float))
                        / (2.0 * h))
        return np.stack(cols, axis=1)


class Atlas:
    """A manifold preset with overlapping charts and closed-form chart maps."""

    def __init__(self, kind, charts, point_dim):
        self.kind = kind
        self.charts = charts
        self.point_dim = point_dim

    def __len__(self):
        return len(self.charts)

    def chart_containing(self, q, margin=0.0):
        """Index of the deepest chart at q; CoverageError if none contains it."""
        depths = [c.depth(q) for c in self.charts]
        best = int(np.argmax(depths))
        if depths[best] <= margin:
            raise CoverageError(
                f"point {np.asarray(q)} is not interior to any chart "
                f"(margin {margin:g})")
        return best

    def overlap_samples(self, i, j, count, rng=None):
        """Deterministic sample points in the (i, j) overlap region."""
        rng = rng or np.random.default_rng(0)
        out = []
        attempts = 0
        while len(out) < count:
            attempts += 1
            if attempts > 10000 * count:
                raise SamplingError(
                    f"could not sample the overlap of charts {i} and {j}")
            q = self._random_point(rng)
            if self.charts[i].contains(q) and self.charts[j].contains(q):
                out.append(q)
        return out

    def _random_point(self, rng):
        if self.kind == "line":
            return rng.uniform(-2.0, 2.0, size=self.point_dim)
        if self.kind == "circle":
            return np.array([rng.uniform(0.0, 2.0 * math.pi)])
        if self.kind == "sphere":
            q = rng.normal(size=3)
            return q / np.linalg.norm(q)
        raise InvalidInputError(f"unknown manifold preset {self.kind!r}")


# ---------------------------------------------------------------------------
# atlas presets
# ---------------------------------------------------------------------------

def line_atlas(dim=1, halfwidth=8.0):
    """A single chart R^dim (the trivial atlas).

    ``dim`` > 1 hosts planar connections (e.g. the magnetic preset) in
    single-chart bundles.
    """
    chart = Chart(dim, tuple((-halfwidth, halfwidth) for _ in range(dim)))
    identity = lambda q: np.asarray(q, dtype=float).reshape(-1)
    ac = AtlasChart(
        0, chart,
        to_coords=identity,
        from_coords=identity,
        velocity_to_coords=lambda q, dq: np.asarray(dq, dtype=float).reshape(-1),
        depth=lambda q: 1.0,
        size=1.0,
        coords_jacobian=lambda q: np.eye(dim),
    )
    return Atlas("line", [ac], dim)


def circle_atlas(overhang=0.4):
    """Two interval charts on angles mod 2pi.

    Chart 0 covers (-overhang, pi + overhang), chart 1 covers
    (pi - overhang, 2pi + overhang); the overlap components sit around
    angle pi ("far") and around angle 0 ("near", where chart-1 coordinates
    run past 2pi).
    """
    if not 0.0 < overhang < math.pi / 2:
        raise InvalidInputError("overhang must be in (0, pi/2)")

    def wrap(q):
        return float(np.asarray(q).reshape(-1)[0]) % (2.0 * math.pi)

    def make(lo, hi, index):
        # representative of the angle inside (lo, hi), if any
        def rep(q):
            r = wrap(q)
            for shift in (0.0, 2.0 * math.pi, -2.0 * math.pi):
                if lo < r + shift < hi:
                    return r + shift
            return None

        def to_coords(q):
            r = rep(q)
            if r is None:
                raise CoverageError(
                    f"angle {wrap(q):.4f} is outside chart {index}")
            return np.array([r])

        def depth(q):
            r = rep(q)
            if r is None:
                return -1.0
            return min(r - lo, hi - r)

        chart = Chart(1, ((lo, hi),))
        return AtlasChart(
            index, chart,
            to_coords=to_coords,
            from_coords=lambda x: np.array([wrap(x)]),
            velocity_to_coords=lambda q, dq: np.asarray(dq, dtype=float).reshape(-1),
            depth=depth,
            size=hi - lo,
            coords_jacobian=lambda q: np.array([[1.0]]),
        )

    c0 = make(-overhang, math.pi + overhang, 0)
    c1 = make(math.pi - overhang, 2.0 * math.pi + overhang, 1)
    return Atlas("circle", [c0, c1], 1)


def sphere_atlas(cap=0.8, extent=12.0):
    """Two stereographic charts of the unit sphere.

    Chart i projects from the pole e_i in {+x, -x}; its domain is
    {q . e_i < cap}, a sphere minus a cap around the projection point.
    Coordinates are stereographic after rotating e_i to (0, 0, 1):

        (X, Y) = (w_1, w_2) / (1 - w_3),    w = R_i q.

    Chart maps, inverses, and Jacobians are closed-form.
    """
    if not 0.0 < cap < 1.0:
        raise InvalidInputError("cap cutoff must be in (0, 1)")
    poles = [np.array([1.0, 0.0, 0.0]), np.array([-1.0, 0.0, 0.0])]
    rotations = [
        np.array([[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]),
        np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]]),
    ]  # R_i maps e_i to (0, 0, 1)

    def make(i):
        pole, rot = poles[i], rotations[i]

        def to_coords(q):
            w = rot @ _unit3(q)
            if w[2] >= 1.0 - 1e-15:
                raise CoverageError(f"point at the projection pole of chart {i}")
            return w[:2] / (1.0 - w[2])

        def from_coords(x):
            x = np.asarray(x, dtype=float).reshape(-1)
            r2 = x @ x
            w = np.array([2.0 * x[0], 2.0 * x[1], r2 - 1.0]) / (1.0 + r2)
            return rot.T @ w

        def velocity_to_coords(q, dq):
            w = rot @ _unit3(q)
            dw = rot @ np.asarray(dq, dtype=float).reshape(-1)
            s = 1.0 - w[2]
            return (dw[:2] * s + w[:2] * dw[2]) / (s * s)

        def depth(q):
            return cap - float(_unit3(q) @ pole)

        def coords_jacobian(q):
            x = to_coords(q)
            big_d = 1.0 + x @ x
            jw = np.array([
                [2.0 * big_d - 4.0 * x[0] * x[0], -4.0 * x[0] * x[1]],
                [-4.0 * x[0] * x[1], 2.0 * big_d - 4.0 * x[1] * x[1]],
                [4.0 * x[0], 4.0 * x[1]],
            ]) / (big_d * big_d)
            return rot.T @ jw

        chart = Chart(2, ((-extent, extent), (-extent, extent)))
        return AtlasChart(i, chart, to_coords, from_coords,
                          velocity_to_coords, depth, size=2.0,
                          coords_jacobian=coords_jacobian)

    return Atlas("sphere", [make(0), make(1)], 3)


def _unit3(q):
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape[0] != 3:
        raise InvalidInputError("sphere points are length-3 vectors")
    n = np.linalg.norm(q)
    if not 0.5 < n < 2.0:
        raise InvalidInputError("sphere point is far from the unit sphere")
    return q / n


# ---------------------------------------------------------------------------
# global paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GlobalPath:
    """A C1 path into a manifold preset, with cut values.

    position(u) returns the manifold point (length point_dim array);
    velocity(u) its derivative in the ambient representation.
    """

    atlas: Atlas
    position: callable
    velocity: callable
    domain: tuple
    cuts: tuple = None
    name: str = ""

    def __post_init__(self):
        a, b = self.domain
        cuts = self.cuts if self.cuts is not None else (a, b)
        cuts = tuple(float(c) for c in cuts)
        if any(c2 < c1 for c1, c2 in zip(cuts, cuts[1:])):
            raise InvalidInputError("cut values must be nondecreasing")
        object.__setattr__(self, "cuts", cuts)

    @property
    def carrier(self):
        return (self.cuts[0], self.cuts[-1])

    def chart_path(self, chart_index, domain=None, cuts=None):
        """This path expressed in one chart's coordinates, as a Path."""
        ac = self.atlas.charts[chart_index]
        return Path(
            ac.chart,
            lambda u: ac.to_coords(self.position(u)),
            lambda u: ac.velocity_to_coords(self.position(u), self.velocity(u)),
            domain if domain is not None else self.domain,
            cuts,
            name=f"{self.name or 'path'}@chart{chart_index}",
        )

    def reversed(self):
        """The orientation-reversed path over the same parameter interval."""
        a, b = self.domain
        flip = lambda u: a + b - u
        return GlobalPath(
            self.atlas,
            lambda u: self.position(flip(u)),
            lambda u: -np.asarray(self.velocity(flip(u)), dtype=float),
            (a, b),
            tuple(sorted(flip(c) for c in self.cuts)),
            name=(self.name or "path") + "~",
        )

    def reparametrized(self, phi):
        """Precompose with a monotone parameter change (see paths module).

        Cuts are pulled back through phi-preimages; weakly monotone maps
        (e.g. profiles that sit at the endpoints) are accepted.
        """
        from .paths import _monotone_preimage

        a2, b2 = phi.domain

        def pulled_back(t):
            if phi.inverse is not None:
                return float(phi.inverse(t))
            return _monotone_preimage(phi, a2, b2, t)

        return GlobalPath(
            self.atlas,
            lambda u: self.position(phi(u)),
            lambda u: np.asarray(self.velocity(phi(u)), dtype=float) * phi.deriv(u),
            (a2, b2),
            tuple(sorted(pulled_back(c) for c in self.cuts)),
            name=(self.name or "path") + "*phi",
        )


def colatitude_loop(atlas, theta, start_azimuth=math.pi / 2):
    """Closed loop at colatitude theta around the sphere's z-axis.

    The parameter is the azimuth offset over [0, 2pi]; the start azimuth
    defaults to pi/2 (the point (0, sin theta, cos theta)), which is
    interior to both preset charts.
    """
    st, ct = math.sin(theta), math.cos(theta)

    def position(u):
        a = start_azimuth + u
        return np.array([st * math.cos(a), st * math.sin(a), ct])

    def velocity(u):
        a = start_azimuth + u
        return np.array([-st * math.sin(a), st * math.cos(a), 0.0])

    return GlobalPath(atlas, position, velocity, (0.0, 2.0 * math.pi),
                      name=f"colatitude({theta:.3f})")


def circle_loop(atlas, winding=1, offset=0.0):
    """The full circle traversed ``winding`` times, angle(u) = offset + u."""
    w = int(winding)

    def position(u):
        return np.array([offset + u])

    def velocity(u):
        return np.array([1.0])

    return GlobalPath(atlas, position, velocity,
                      (0.0, abs(w) * 2.0 * math.pi), name="circle_loop")


def chart_global_path(atlas, path):
    """Wrap a chart Path on a single-chart atlas as a GlobalPath."""
    if len(atlas) != 1:
        raise InvalidInputError("chart_global_path needs a single-chart atlas")
    return GlobalPath(atlas, path.position, path.velocity, path.domain,
                      path.cuts, name=path.name)


# ---------------------------------------------------------------------------
# transition cocycles and bundles
# ---------------------------------------------------------------------------

class TransitionCocycle:
    """Transition data g_ij on chart overlaps, indexed by ordered pairs.

    ``entries[(i, j)]`` is a callable of the manifold point.  Missing
    inverses are filled in as pointwise matrix inverses; g_ii is the
    identity.
    """

    def __init__(self, atlas, fiber_dim, entries):
        self.atlas = atlas
        self.fiber_dim = fiber_dim
        self._entries = dict(entries)
        for (i, j) in list(self._entries):
            if (j, i) not in self._entries:
                self._entries[(j, i)] = _pointwise_inverse(self._entries[(i, j)])

    def __call__(self, i, j, q):
        if i == j:
            return np.eye(self.fiber_dim)
        entry = self._entries.get((i, j))
        if entry is None:
            raise InvalidInputError(f"no transition registered for charts {(i, j)}")
        return np.asarray(entry(q), dtype=float)

    def pairs(self):
        return sorted(self._entries)


def _pointwise_inverse(entry):
    return lambda q: matrix_inverse(entry(q))


def constant_circle_cocycle(atlas, far=None, near=None):
    """Circle transitions that are constant on each overlap component.

    ``far`` is the matrix used on the component around angle pi, ``near``
    around angle 0; both default to the identity.  Expressed in the chart-0
    frame, the holonomy of a flat bundle glued this way around one positive
    loop is near^-1 far.
    """
    d = 2 if far is None and near is None else \
        np.asarray(far if far is not None else near).shape[0]
    far = np.eye(d) if far is None else np.asarray(far, dtype=float)
    near = np.eye(d) if near is None else np.asarray(near, dtype=float)

    def g01(q):
        angle = float(np.asarray(q).reshape(-1)[0]) % (2.0 * math.pi)
        if abs(angle - math.pi) < math.pi / 2:
            return far
        return near

    return TransitionCocycle(atlas, d, {(0, 1): g01})


def sphere_tangent_cocycle(atlas):
    """Tangent-bundle transitions of the sphere preset: chart-change Jacobians.

    g_ij(q) = J_j(q) K_i(x_i) where J_j is the (2x3) differential of chart
    j's coordinate map and K_i the (3x2) differential of chart i's inverse;
    both are closed-form, so the chain rule makes the cocycle conditions
    hold to round-off.
    """
    def entry(i, j):
        ci, cj = atlas.charts[i], atlas.charts[j]

        def g(q):
            k_i = ci.coords_jacobian(q)
            cols = [cj.velocity_to_coords(q, k_i[:, a]) for a in range(2)]
            return np.stack(cols, axis=1)
        return g

    return TransitionCocycle(atlas, 2, {(0, 1): entry(0, 1), (1, 0): entry(1, 0)})


class GlobalBundle:
    """An atlas, a transition cocycle, and one connection form per chart."""

    def __init__(self, atlas, cocycle, connections, validate=True,
                 compatibility_tol=1e-7):
        if len(connections) != len(atlas):
            raise InvalidInputError("need one connection form per chart")
        self.atlas = atlas
        self.cocycle = cocycle
        self.connections = list(connections)
        self.fiber_dim = cocycle.fiber_dim
        for a in self.connections:
            if a.fiber_dim != self.fiber_dim:
                raise InvalidInputError("connection fiber dims disagree with cocycle")
        if validate and len(atlas) > 1:
            worst = overlap_compatibility_residual(self, samples=3)
            if worst > compatibility_tol:
                raise InconsistentBundleError(
                    f"local connections are incompatible with the cocycle: "
                    f"residual {worst:.3e} > {compatibility_tol:g}")


def overlap_compatibility_residual(bundle, samples=5, rng=None, fd_step=1e-6):
    """Max residual of the connection transformation law across overlaps.

    For q in the (i, j) overlap and a chart-i direction v_i with pushforward
    v_j, compares A_j(x_j, v_j) against

        g A_i(x_i, v_i) g^-1 + (D_v g)(q) g^-1,

    where D_v g is the derivative of g_ij along the chart-i line through q
    (central differences).  On presets whose overlap coordinates agree, this
    reduces to the plain gauge-transform formula; the pushforward makes it
    the full chart-change law.
    """
    atlas = bundle.atlas
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for (i, j) in bundle.cocycle.pairs():
        ci, cj = atlas.charts[i], atlas.charts[j]
        for q in atlas.overlap_samples(i, j, samples, rng):
            x_i = ci.to_coords(q)
            n = ci.chart.dim
            for axis in range(n):
                v_i = np.zeros(n)
                v_i[axis] = 1.0
                # the same tangent vector in both charts
                qdot = ci.coords_jacobian(q) @ v_i
                v_j = cj.velocity_to_coords(q, qdot)
                g = bundle.cocycle(i, j, q)
                g_inv = matrix_inverse(g)
                dg = _transition_directional_derivative(
                    bundle.cocycle, i, j, ci, x_i, v_i, fd_step)
                lhs = bundle.connections[j].evaluate(cj.to_coords(q), v_j)
                rhs = (g @ bundle.connections[i].evaluate(x_i, v_i) @ g_inv
                       + dg @ g_inv)
                worst = max(worst, operator_distance(lhs, rhs))
    return worst


def _transition_directional_derivative(cocycle, i, j, atlas_chart, x_i, v_i, h):
    q_plus = atlas_chart.from_coords(x_i + h * v_i)
    q_minus = atlas_chart.from_coords(x_i - h * v_i)
    return (cocycle(i, j, q_plus) - cocycle(i, j, q_minus)) / (2.0 * h)


# ---------------------------------------------------------------------------
# subordinate cutting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CutAssignment:
    """Refined cut values with one chart index per segment."""

    cuts: tuple            # t_0 <= ... <= t_m
    chart_indices: tuple   # length m

    def __post_init__(self):
        if len(self.chart_indices) != len(self.cuts) - 1:
            raise InvalidInputError("need one chart index per segment")
        if any(b < a for a, b in zip(self.cuts, self.cuts[1:])):
            raise InvalidInputError("cut values must be nondecreasing")

    @property
    def segments(self):
        return list(zip(self.cuts[:-1], self.cuts[1:], self.chart_indices))

    def refined(self):
        """Insert the midpoint of every segment; charts are inherited."""
        cuts = [self.cuts[0]]
        charts = []
        for (a, b, idx) in self.segments:
            mid = 0.5 * (a + b)
            cuts.extend([mid, b])
            charts.extend([idx, idx])
        return CutAssignment(tuple(cuts), tuple(charts))


def subordinate_cut(path, atlas, margin=None, scan_density=CUT_SCAN_DENSITY):
    """Cut a global path so each segment stays well inside a single chart.

    Marches along a fine parameter grid, extending the current segment
    while the path stays ``margin`` inside the current chart; on exit, a
    cut is placed at the last safe sample and the deepest chart there takes
    over.  Raises CoverageError when some point is not interior to any
    chart.
    """
    t0, t1 = path.carrier
    if margin is None:
        margin = CUT_MARGIN_FRACTION * min(c.size for c in atlas.charts)
    if t0 == t1:
        idx = atlas.chart_containing(path.position(t0), margin=0.0)
        return CutAssignment((t0, t1), (idx,))

    count = max(8, int(np.ceil((t1 - t0) * scan_density)))
    ts = np.linspace(t0, t1, count + 1)
    # every point must clear the margin in some chart
    depths = np.array(
        [[c.depth(path.position(u)) for c in atlas.charts] for u in ts])
    if np.any(depths.max(axis=1) <= margin):
        bad = ts[int(np.argmax(depths.max(axis=1) <= margin))]
        raise CoverageError(
            f"path point at parameter {bad:.6f} is not {margin:g}-interior "
            f"to any chart")

    cuts = [t0]
    charts = []
    current = int(np.argmax(depths[0]))
    for k in range(1, count + 1):
        if depths[k][current] > margin:
            continue
        # cut at the previous sample; the chart deepest where the current
        # one failed takes over (the junction must lie in both charts)
        nxt = int(np.argmax(depths[k]))
        if nxt == current or depths[k - 1][nxt] <= 0.0:
            raise CoverageError(
                f"no usable chart change at parameter {ts[k]:.6f}; "
                f"try a smaller margin (current {margin:g})")
        cuts.append(float(ts[k - 1]))
        charts.append(current)
        current = nxt
    cuts.append(t1)
    charts.append(current)
    return CutAssignment(tuple(cuts), tuple(charts))


# ---------------------------------------------------------------------------
# glued transport
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GluedTransport:
    """Result of a glued transport: the map plus its frame bookkeeping."""

    map: np.ndarray
    source_chart: int
    target_chart: int
    cut: CutAssignment


def global_transport(bundle, path, cut=None, source_chart=None,
                     target_chart=None, steps_per_unit=STEPS_PER_UNIT):
    """Glued parallel transport of a global bundle along a global path.

    Each segment is transported in its own chart with the fixed-step RK4
    integrator; junctions apply the transition cocycle at the junction
    point.  The returned map goes from the ``source_chart`` frame at the
    start point to the ``target_chart`` frame at the end point; both
    default to the first/last segment's chart, and overriding them inserts
    a cocycle conversion at the corresponding endpoint (the endpoint must
    then lie in the requested chart too).
    """
    if cut is None:
        cut = subordinate_cut(path, bundle.atlas)
    segments = cut.segments
    if not segments:
        raise InvalidInputError("cut assignment has no segments")
    for (a, b, idx) in segments:
        for u in (a, 0.5 * (a + b), b):
            if not bundle.atlas.charts[idx].contains(path.position(u)):
                raise CoverageError(
                    f"segment [{a}, {b}] is not subordinate: the path leaves "
                    f"chart {idx} at parameter {u}")

    d = bundle.fiber_dim
    first_idx = segments[0][2]
    if source_chart is None:
        source_chart = first_idx
    start = path.position(cut.cuts[0])
    if source_chart != first_idx and not bundle.atlas.charts[source_chart].contains(start):
        raise CoverageError(
            f"start point is outside the requested source chart {source_chart}")

    total = bundle.cocycle(source_chart, first_idx, start)
    for k, (a, b, idx) in enumerate(segments):
        if k > 0:
            junction = path.position(a)
            conv = bundle.cocycle(segments[k - 1][2], idx, junction)
            total = conv @ total
        if a != b:
            seg_path = path.chart_path(idx, domain=(a, b), cuts=(a, b))
            local = bundle.connections[idx]
            steps = default_steps(a, b, steps_per_unit)
            total = transport_ode(local, seg_path, a, b, steps=steps).map @ total

    last_idx = segments[-1][2]
    if target_chart is None:
        target_chart = last_idx
    if target_chart != last_idx:
        end = path.position(cut.cuts[-1])
        if not bundle.atlas.charts[target_chart].contains(end):
            raise CoverageError(
                f"end point is outside the requested target chart {target_chart}")
        total = bundle.cocycle(last_idx, target_chart, end) @ total
    return GluedTransport(total, source_chart, target_chart, cut)


def loop_holonomy_angle(bundle, path, cut=None, rotation_tol=1e-6):
    """Rotation angle of a 2d loop holonomy, in (-pi, pi].

    The loop's glued transport is expressed in its source chart frame
    (target_chart = source chart); it must be within ``rotation_tol`` of a
    rotation matrix, else NotARotationError.
    """
    if cut is None:
        cut = subordinate_cut(path, bundle.atlas)
    source = cut.chart_indices[0]
    glued = global_transport(bundle, path, cut=cut, target_chart=source)
    h = glued.map
    if h.shape != (2, 2):
        raise NotARotationError("holonomy angle extraction needs a rank-2 bundle")
    defect = operator_distance(h.T @ h, np.eye(2))
    if defect > rotation_tol or np.linalg.det(h) < 0.0:
        raise NotARotationError(
            f"holonomy is not within {rotation_tol:g} of a rotation "
            f"(orthogonality defect {defect:.3e}, det {np.linalg.det(h):.6f})")
    return float(math.atan2(h[1, 0], h[0, 0]))


def check_cech_cocycle(cocycle, samples=8, rng=None):
    """Max cocycle residual over sampled overlap points.

    Checks g_ij g_ji = id on every registered pair and the triple condition
    g_jk g_ij = g_ik whenever all three pairwise entries exist and a triple
    overlap point is found.  Single-chart atlases return 0 (vacuous).
    """
    atlas = cocycle.atlas
    if len(atlas) == 1:
        return 0.0
    rng = rng or np.random.default_rng(0)
    eye = np.eye(cocycle.fiber_dim)
    worst = 0.0
    pair_keys = {(i, j) for (i, j) in cocycle.pairs()}
    for (i, j) in sorted(pair_keys):
        if i >= j:
            continue
        for q in atlas.overlap_samples(i, j, samples, rng):
            gij = cocycle(i, j, q)
            gji = cocycle(j, i, q)
            worst = max(worst, operator_distance(gji @ gij, eye))
            worst = max(worst, operator_distance(cocycle(i, i, q), eye))
    # triple overlaps
    indices = range(len(atlas))
    for i in indices:
        for j in indices:
            for k in indices:
                if len({i, j, k}) < 3:
                    continue
                if not ({(i, j), (j, k), (i, k)} <= pair_keys):
                    continue
                qs = _triple_overlap_samples(atlas, i, j, k, samples, rng)
                for q in qs:
                    lhs = cocycle(j, k, q) @ cocycle(i, j, q)
                    worst = max(worst, operator_distance(lhs, cocycle(i, k, q)))
    return worst


def _triple_overlap_samples(atlas, i, j, k, count, rng, max_tries=20000):
    out = []
    for _ in range(max_tries):
        q = atlas._random_point(rng)
        if all(atlas.charts[m].contains(q) for m in (i, j, k)):
            out.append(q)
            if len(out) >= count:
                break
    return out


# ---------------------------------------------------------------------------
# bundle presets
# ---------------------------------------------------------------------------

def single_chart_bundle(connection):
    """Wrap one connection form on one chart as a trivial global bundle."""
    identity = lambda q: np.asarray(q, dtype=float).reshape(-1)
    ac = AtlasChart(
        0, connection.chart,
        to_coords=identity,
        from_coords=identity,
        velocity_to_coords=lambda q, dq: np.asarray(dq, dtype=float).reshape(-1),
        depth=lambda q: 1.0,
        size=1.0,
        coords_jacobian=lambda q: np.eye(connection.chart.dim),
    )
    atlas = Atlas("line", [ac], connection.chart.dim)
    cocycle = TransitionCocycle(atlas, connection.fiber_dim, {})
    return GlobalBundle(atlas, cocycle, [connection])


def flat_circle_bundle(far=None, near=None):
    """Zero connections on the circle preset glued by constant transitions."""
    from .connections import zero_connection

    atlas = circle_atlas()
    cocycle = constant_circle_cocycle(atlas, far, near)
    conns = [zero_connection(c.chart, cocycle.fiber_dim) for c in atlas.charts]
    return GlobalBundle(atlas, cocycle, conns)


def levi_civita_sphere_bundle(cap=0.8):
    """The sphere's tangent bundle with its Levi-Civita connection, glued
    over the two-chart stereographic atlas."""
    atlas = sphere_atlas(cap)
    cocycle = sphere_tangent_cocycle(atlas)
    conns = [levi_civita_sphere_connection() for _ in atlas.charts]
    return GlobalBundle(atlas, cocycle, conns)
