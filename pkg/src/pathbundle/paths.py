"""Parametrized C1 paths into charts, with cut values and reparametrization.

A path carries its parametrization, its velocity (always analytic, never a
finite difference of positions), a parameter domain [a, b], and ordered cut
values t_0 <= ... <= t_k inside the domain.  The stretch between the first
and last cut is the carrier of every evaluation.
"""

import bisect
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .connections import Chart
from .errors import InvalidInputError, InvalidReparametrizationError


@dataclass(frozen=True)
class Path:
    """A C1 curve gamma: [a, b] -> R^n with cut values.

    position(u) and velocity(u) return length-n arrays; cuts default to the
    domain endpoints.
    """

    chart: Chart
    position: callable
    velocity: callable
    domain: tuple
    cuts: tuple = None
    name: str = ""

    def __post_init__(self):
        a, b = self.domain
        if not (np.isfinite(a) and np.isfinite(b) and a <= b):
            raise InvalidInputError(f"bad parameter domain {self.domain}")
        cuts = self.cuts if self.cuts is not None else (a, b)
        cuts = tuple(float(c) for c in cuts)
        if any(c2 < c1 for c1, c2 in zip(cuts, cuts[1:])):
            raise InvalidInputError("cut values must be nondecreasing")
        if cuts and (cuts[0] < a - 1e-12 or cuts[-1] > b + 1e-12):
            raise InvalidInputError("cut values must lie within the domain")
        object.__setattr__(self, "cuts", cuts)

    @property
    def carrier(self):
        """(t_0, t_k): the parameter stretch all evaluation happens on."""
        return (self.cuts[0], self.cuts[-1])

    def point(self, u):
        return self.chart.check_point(self.position(u))

    def speed_vector(self, u):
        v = np.asarray(self.velocity(u), dtype=float).reshape(-1)
        if v.shape[0] != self.chart.dim:
            raise InvalidInputError("velocity dimension does not match chart")
        return v

    def with_cuts(self, cuts):
        return Path(self.chart, self.position, self.velocity, self.domain,
                    tuple(cuts), self.name)


# ---------------------------------------------------------------------------
# path presets
# ---------------------------------------------------------------------------

def affine_path(chart, point, direction, domain=(0.0, 1.0), cuts=None):
    """gamma(u) = point + u * direction."""
    p0 = np.asarray(point, dtype=float).reshape(-1)
    v = np.asarray(direction, dtype=float).reshape(-1)
    if p0.shape[0] != chart.dim or v.shape[0] != chart.dim:
        raise InvalidInputError("point/direction dimension does not match chart")
    return Path(chart, lambda u: p0 + u * v, lambda u: v, domain, cuts,
                name="affine")


def line_path(chart, start, end, domain=(0.0, 1.0), cuts=None):
    """Affine path traversing start -> end over its domain."""
    p = np.asarray(start, dtype=float)
    q = np.asarray(end, dtype=float)
    a, b = domain
    if b <= a:
        raise InvalidInputError("degenerate domain for line_path")
    v = (q - p) / (b - a)
    return Path(chart, lambda u: p + (u - a) * v, lambda u: v, domain, cuts,
                name="line")


def constant_path(chart, point, domain=(0.0, 1.0), cuts=None):
    """gamma == point; velocity is identically zero."""
    p0 = np.asarray(point, dtype=float).reshape(-1)
    z = np.zeros(chart.dim)
    return Path(chart, lambda u: p0, lambda u: z, domain, cuts, name="constant")


def circle_arc_path(chart, center, radius, domain=(0.0, np.pi), cuts=None):
    """Arc of a circle in a 2d chart; the parameter is the angle."""
    if chart.dim != 2:
        raise InvalidInputError("circle arcs need a 2-dimensional chart")
    c = np.asarray(center, dtype=float).reshape(-1)
    r = float(radius)
    return Path(
        chart,
        lambda u: c + r * np.array([np.cos(u), np.sin(u)]),
        lambda u: r * np.array([-np.sin(u), np.cos(u)]),
        domain, cuts, name="circle_arc",
    )


def spline_path(chart, times, waypoints, cuts=None):
    """Natural cubic spline through waypoints; velocity is the spline derivative."""
    times = np.asarray(times, dtype=float)
    pts = np.asarray(waypoints, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != chart.dim:
        raise InvalidInputError("waypoints must be (k, chart.dim)")
    if len(times) != len(pts):
        raise InvalidInputError("need one time per waypoint")
    spline = CubicSpline(times, pts, axis=0)
    dspline = spline.derivative()
    return Path(chart, lambda u: spline(u), lambda u: dspline(u),
                (float(times[0]), float(times[-1])), cuts, name="spline")


# ---------------------------------------------------------------------------
# reparametrization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Reparametrization:
    """A monotone C1 map phi of parameter intervals.

    ``func`` maps [a', b'] onto the path's domain, ``deriv`` is phi'; an
    optional ``inverse`` avoids bisection when pulling cuts back.
    """

    func: callable
    deriv: callable
    domain: tuple
    inverse: callable = None

    def __call__(self, u):
        return self.func(u)


def identity_reparametrization(domain):
    return Reparametrization(lambda u: u, lambda u: 1.0, domain,
                             inverse=lambda t: t)


def power_reparametrization(domain, exponent=2.0):
    """phi(u) = a + (b - a) * s^exponent with s the normalized parameter."""
    a, b = domain
    w = b - a
    k = float(exponent)
    if k <= 0:
        raise InvalidInputError("exponent must be positive")
    return Reparametrization(
        lambda u: a + w * ((u - a) / w) ** k,
        lambda u: k * ((u - a) / w) ** (k - 1.0),
        domain,
        inverse=lambda t: a + w * ((t - a) / w) ** (1.0 / k),
    )


def sitting_reparametrization(domain, flat=0.15):
    """Monotone surjection of the domain that is constant near both ends.

    The normalized profile sits at 0 on [0, flat] and at 1 on [1-flat, 1];
    in between it follows the closed-form C^2 ramp y - sin(2 pi y)/(2 pi),
    whose derivative vanishes at the zone boundaries.  Precomposing a path
    with this map gives it sitting instances at both endpoints without
    changing any transport along it.
    """
    if not 0.0 < flat < 0.5:
        raise InvalidInputError("flat fraction must be in (0, 1/2)")
    a, b = domain
    w = b - a
    mid = 1.0 - 2.0 * flat

    def s(x):
        if x <= flat:
            return 0.0
        if x >= 1.0 - flat:
            return 1.0
        y = (x - flat) / mid
        return y - np.sin(2.0 * np.pi * y) / (2.0 * np.pi)

    def ds(x):
        if x <= flat or x >= 1.0 - flat:
            return 0.0
        y = (x - flat) / mid
        return (1.0 - np.cos(2.0 * np.pi * y)) / mid

    return Reparametrization(
        lambda u: a + w * s((u - a) / w),
        lambda u: ds((u - a) / w),
        domain,
    )


def reparametrize(path, phi, monotonicity_samples=256):
    """Precompose a path with a monotone parameter change.

    Returns gamma o phi with cuts pulled back through phi-preimages.  phi
    must be nondecreasing and map its domain onto the path's domain;
    otherwise InvalidReparametrizationError is raised.  (Weakly monotone
    maps -- vanishing derivative at isolated points or flat end zones --
    are accepted; the composite is still C1.)
    """
    a2, b2 = phi.domain
    a, b = path.domain
    us = np.linspace(a2, b2, monotonicity_samples)
    vals = np.array([float(phi(u)) for u in us])
    if np.any(np.diff(vals) < -1e-12):
        raise InvalidReparametrizationError("parameter change is not monotone")
    if abs(vals[0] - a) > 1e-9 or abs(vals[-1] - b) > 1e-9:
        raise InvalidReparametrizationError(
            f"parameter change maps [{a2}, {b2}] to [{vals[0]}, {vals[-1]}], "
            f"expected [{a}, {b}]")

    def pulled_back(t):
        if phi.inverse is not None:
            return float(phi.inverse(t))
        return _monotone_preimage(phi, a2, b2, t)

    new_cuts = tuple(sorted(pulled_back(c) for c in path.cuts))

    def position(u):
        return path.position(phi(u))

    def velocity(u):
        return np.asarray(path.velocity(phi(u)), dtype=float) * phi.deriv(u)

    return Path(path.chart, position, velocity, (a2, b2), new_cuts,
                name=path.name + "*phi")


def _monotone_preimage(phi, lo, hi, target, iters=200):
    """Bisection preimage of a nondecreasing map; any preimage is valid."""
    flo, fhi = float(phi(lo)), float(phi(hi))
    if not flo - 1e-12 <= target <= fhi + 1e-12:
        raise InvalidReparametrizationError(
            f"cut value {target} is outside the image [{flo}, {fhi}]")
    x0, x1 = lo, hi
    for _ in range(iters):
        mid = 0.5 * (x0 + x1)
        if float(phi(mid)) < target:
            x0 = mid
        else:
            x1 = mid
        if x1 - x0 < 1e-15 * max(1.0, abs(hi - lo)):
            break
    return 0.5 * (x0 + x1)
