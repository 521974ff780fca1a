"""Evaluate decorated 1-dimensional bordism words against a global bundle.

Objects and strands
-------------------
An object configuration is an ordered list of signed points; a point with
sign + carries the fiber V at its location (in its tagged chart frame), a
point with sign - carries the dual fiber V*.  The empty configuration is
the monoidal unit (a 1-dimensional space).

Words and slices
----------------
A bordism word is a list of slices read source-to-target; each slice is a
list of generator tokens acting on consecutive strands:

    Id()                one strand, identity map.
    Arc(path)           one strand, decorated by a global path.  On a +
                        strand the decoration runs with the slice (input at
                        the path source, output at the target) and the map
                        is the glued transport F.  On a - strand the
                        decoration runs in the strand's intrinsic
                        orientation, against the slice (input at the path
                        *target*, output at the source), and the map is the
                        transpose F^T -- equivalently, the slice-direction
                        transport composed with dual_transport.
    Coev(point, signs)  no strands in, a (+,-) or (-,+) pair out; the map
                        is the canonical element sum_i e_i (x) e_i* of
                        V (x) V*.
    Ev(point)           a {+,-} pair (either order) in, nothing out; the
                        map is the canonical pairing.
    Perm(sigma)         len(sigma) strands; output strand k is input strand
                        sigma[k].

Handles are evaluated at a single point (their sitting instant); arcs do
all the transporting.  Slice maps are ordered tensor (Kronecker) products
of token maps; the word's value is their composite.  Strand locations must
match exactly between slices: they are compared bitwise, so build
configurations from the same symbolic data as the decorating paths.
"""

import math
from dataclasses import dataclass

import numpy as np

from .bundles import GlobalPath, global_transport, subordinate_cut
from .errors import CompositionError, CoverageError, InvalidInputError
from .matrices import matrix_inverse, operator_distance
from .transport import STEPS_PER_UNIT


# ---------------------------------------------------------------------------
# objects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignedPoint:
    """An oriented marked point: sign +1 or -1, manifold location, chart tag."""

    sign: int
    location: tuple
    chart: int = 0

    def __post_init__(self):
        if self.sign not in (+1, -1):
            raise InvalidInputError("sign must be +1 or -1")
        object.__setattr__(self, "location",
                           tuple(float(c) for c in np.asarray(self.location).reshape(-1)))

    def opposite(self):
        return SignedPoint(-self.sign, self.location, self.chart)

    def matches(self, other):
        return (self.sign == other.sign and self.chart == other.chart
                and _same_location(self.location, other.location))


# Bitwise equality is the intended contract for symbolically produced
# locations; the guard band absorbs trig round-off in endpoints of closed
# preset loops (cos(a) vs cos(a + 2*pi)).
LOCATION_MATCH_TOL = 1e-9


def _same_location(a, b):
    if a == b:
        return True
    return (len(a) == len(b)
            and max(abs(x - y) for x, y in zip(a, b)) <= LOCATION_MATCH_TOL)


@dataclass(frozen=True)
class ObjectConfig:
    """An ordered (possibly empty) list of signed points."""

    points: tuple

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))

    def __len__(self):
        return len(self.points)

    def __add__(self, other):
        return ObjectConfig(self.points + other.points)


@dataclass(frozen=True)
class FiberSpace:
    """Ordered tensor factorization attached to an object configuration."""

    factors: tuple       # SignedPoints; V for +, V* for -
    fiber_dim: int

    @property
    def dimension(self):
        return self.fiber_dim ** len(self.factors)


def evaluate_object(config, bundle):
    """The fiber space over an object configuration.

    Every point must be interior to its tagged chart; the empty
    configuration gives the 1-dimensional unit.
    """
    for pt in config.points:
        chart = bundle.atlas.charts[pt.chart]
        if not chart.contains(np.asarray(pt.location)):
            raise CoverageError(
                f"point {pt.location} is outside chart {pt.chart}")
    return FiberSpace(config.points, bundle.fiber_dim)


def dual_transport(f):
    """Inverse-transpose of an invertible transport map.

    This is the unique dual-strand companion that preserves the canonical
    pairing: Ev o (F (x) dual_transport(F)) = Ev.
    """
    return matrix_inverse(f).T


# ---------------------------------------------------------------------------
# generator tokens
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Id:
    """Identity on one strand."""

    def arity(self):
        return 1


@dataclass(frozen=True)
class Arc:
    """One strand decorated by a global path (see module docstring).

    ``source_chart``/``target_chart`` pin the frames at the decoration's
    endpoints (a cocycle conversion is inserted); by default the glued
    transport's own chart choices are used.
    """

    path: GlobalPath
    source_chart: int = None
    target_chart: int = None

    def arity(self):
        return 1


@dataclass(frozen=True)
class Coev:
    """Birth of a paired {+,-} strand couple at one point (a 0-handle)."""

    point: SignedPoint          # sign is ignored; location and chart matter
    signs: tuple = (+1, -1)

    def __post_init__(self):
        if tuple(self.signs) not in ((+1, -1), (-1, +1)):
            raise InvalidInputError("coevaluation signs must be (+,-) or (-,+)")
        object.__setattr__(self, "signs", tuple(self.signs))

    def arity(self):
        return 0


@dataclass(frozen=True)
class Ev:
    """Death of a paired {+,-} strand couple at one point (a 1-handle)."""

    point: SignedPoint

    def arity(self):
        return 2


@dataclass(frozen=True)
class Perm:
    """Strand permutation: output strand k is input strand sigma[k]."""

    sigma: tuple

    def __post_init__(self):
        sig = tuple(int(s) for s in self.sigma)
        if sorted(sig) != list(range(len(sig))):
            raise InvalidInputError(f"{sig} is not a permutation arrangement")
        object.__setattr__(self, "sigma", sig)

    def arity(self):
        return len(self.sigma)


@dataclass(frozen=True)
class BordismWord:
    """A source configuration and a list of slices of generator tokens."""

    source: ObjectConfig
    slices: tuple

    def __post_init__(self):
        object.__setattr__(self, "slices",
                           tuple(tuple(s) for s in self.slices))


@dataclass(frozen=True)
class BordismValue:
    """The linear map a word evaluates to, with its fiber spaces."""

    matrix: np.ndarray
    source: FiberSpace
    target: FiberSpace


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _arc_data(token, bundle, steps_per_unit):
    glued = global_transport(bundle, token.path,
                             source_chart=token.source_chart,
                             target_chart=token.target_chart,
                             steps_per_unit=steps_per_unit)
    t0, t1 = token.path.carrier
    src = SignedPoint(+1, token.path.position(t0), glued.source_chart)
    dst = SignedPoint(+1, token.path.position(t1), glued.target_chart)
    return glued.map, src, dst


def _apply_token(token, inputs, bundle, steps_per_unit):
    """Returns (matrix, output_points) for a token applied to input points."""
    d = bundle.fiber_dim
    if isinstance(token, Id):
        (pt,) = inputs
        return np.eye(d), (pt,)

    if isinstance(token, Arc):
        (pt,) = inputs
        f, src, dst = _arc_data(token, bundle, steps_per_unit)
        if pt.sign == +1:
            if not pt.matches(src):
                raise CompositionError(
                    f"+ strand at {pt.location} (chart {pt.chart}) does not "
                    f"match the arc source {src.location} (chart {src.chart})")
            return f, (SignedPoint(+1, dst.location, dst.chart),)
        # - strand: decoration runs against the slice
        if not pt.opposite().matches(dst):
            raise CompositionError(
                f"- strand at {pt.location} (chart {pt.chart}) does not "
                f"match the arc target {dst.location} (chart {dst.chart})")
        return f.T, (SignedPoint(-1, src.location, src.chart),)

    if isinstance(token, Coev):
        out = tuple(SignedPoint(s, token.point.location, token.point.chart)
                    for s in token.signs)
        vec = np.eye(d).reshape(-1, 1)  # sum_i e_i (x) e_i*
        return vec, out

    if isinstance(token, Ev):
        a, b = inputs
        if {a.sign, b.sign} != {+1, -1}:
            raise CompositionError("evaluation needs one + and one - strand")
        for pt in (a, b):
            if pt.chart != token.point.chart or not _same_location(
                    pt.location, token.point.location):
                raise CompositionError(
                    f"evaluation at {token.point.location} applied to a "
                    f"strand at {pt.location}")
        return np.eye(d).reshape(1, -1), ()

    if isinstance(token, Perm):
        k = len(token.sigma)
        out = tuple(inputs[token.sigma[m]] for m in range(k))
        return _permutation_matrix(token.sigma, d), out

    raise InvalidInputError(f"unknown generator token {token!r}")


def _permutation_matrix(sigma, d):
    k = len(sigma)
    n = d ** k
    p = np.zeros((n, n))
    # digits of the input index, most significant strand first (kron order)
    powers = [d ** (k - 1 - m) for m in range(k)]
    for idx in range(n):
        digits = [(idx // powers[m]) % d for m in range(k)]
        out = sum(digits[sigma[m]] * powers[m] for m in range(k))
        p[out, idx] = 1.0
    return p


def evaluate_bordism(word, bundle, steps_per_unit=STEPS_PER_UNIT):
    """Evaluate a bordism word to a linear map between fiber spaces.

    Walks the slices from the source configuration, validating strand
    counts, signs, and locations at every boundary; token maps are combined
    into slice maps by ordered Kronecker products and the slice maps are
    composed.
    """
    config = word.source
    source_space = evaluate_object(config, bundle)
    total = np.eye(source_space.dimension)
    for slice_no, tokens in enumerate(word.slices):
        arity = sum(tok.arity() for tok in tokens)
        if arity != len(config):
            raise CompositionError(
                f"slice {slice_no} consumes {arity} strands, "
                f"configuration has {len(config)}")
        slice_matrix = np.eye(1)
        out_points = []
        pos = 0
        for tok in tokens:
            taken = config.points[pos:pos + tok.arity()]
            pos += tok.arity()
            mat, outs = _apply_token(tok, taken, bundle, steps_per_unit)
            slice_matrix = np.kron(slice_matrix, mat)
            out_points.extend(outs)
        config = ObjectConfig(tuple(out_points))
        total = slice_matrix @ total
    target_space = evaluate_object(config, bundle)
    return BordismValue(total, source_space, target_space)


# ---------------------------------------------------------------------------
# derived words and residuals
# ---------------------------------------------------------------------------

def snake_word(bundle, loop, flavor="plus"):
    """The zig-zag word whose arcs carry ``loop`` and its reverse.

    flavor="plus" starts from a + strand: birth of a (-,+) pair on the
    right, the original strand transported by the loop, then death of the
    left pair.  flavor="minus" is the mirror word on a - strand.  Perfect
    transport cancellation evaluates both to the identity.
    """
    t0, _ = loop.carrier
    base_chart = subordinate_cut(loop, bundle.atlas).chart_indices[0]
    x = SignedPoint(+1, loop.position(t0), base_chart)
    rev = loop.reversed()
    if flavor == "plus":
        source = ObjectConfig((x,))
        slices = (
            (Id(), Coev(x, signs=(-1, +1))),
            (Arc(loop, base_chart, base_chart),
             Arc(rev, base_chart, base_chart), Id()),
            (Ev(x), Id()),
        )
        return BordismWord(source, slices)
    if flavor == "minus":
        source = ObjectConfig((x.opposite(),))
        slices = (
            (Id(), Coev(x, signs=(+1, -1))),
            (Arc(rev, base_chart, base_chart),
             Arc(loop, base_chart, base_chart), Id()),
            (Ev(x), Id()),
        )
        return BordismWord(source, slices)
    raise InvalidInputError("flavor must be 'plus' or 'minus'")


def snake_residual(bundle, loop, flavor="plus", steps_per_unit=STEPS_PER_UNIT):
    """Distance of the snake word's value from the identity on the fiber."""
    value = evaluate_bordism(snake_word(bundle, loop, flavor), bundle,
                             steps_per_unit=steps_per_unit)
    return operator_distance(value.matrix, np.eye(bundle.fiber_dim))


def circle_word(bundle, loop):
    """Birth, transport around ``loop`` on the + strand, death.

    Evaluates to the 1x1 matrix [trace of the loop holonomy].
    """
    t0, t1 = loop.carrier
    if not np.allclose(loop.position(t0), loop.position(t1)):
        raise InvalidInputError("circle words need a closed decorating loop")
    base_chart = subordinate_cut(loop, bundle.atlas).chart_indices[0]
    x = SignedPoint(+1, loop.position(t0), base_chart)
    return BordismWord(
        ObjectConfig(()),
        (
            (Coev(x, signs=(+1, -1)),),
            (Arc(loop, base_chart, base_chart), Id()),
            (Ev(x),),
        ),
    )


def tensor_words(first, second):
    """Parallel (disjoint) union of two words, padding with identity slices."""
    depth = max(len(first.slices), len(second.slices))

    def pad(word):
        slices = list(word.slices)
        # count strands after the last slice by arity bookkeeping
        n = len(word.source)
        for tokens in slices:
            n = sum(_token_outputs(tok) for tok in tokens)
        while len(slices) < depth:
            slices.append(tuple(Id() for _ in range(n)))
        return slices

    combined = []
    s1, s2 = pad(first), pad(second)
    for a, b in zip(s1, s2):
        combined.append(tuple(a) + tuple(b))
    return BordismWord(first.source + second.source, tuple(combined))


def _token_outputs(tok):
    if isinstance(tok, (Id, Arc)):
        return 1
    if isinstance(tok, Coev):
        return 2
    if isinstance(tok, Ev):
        return 0
    if isinstance(tok, Perm):
        return len(tok.sigma)
    raise InvalidInputError(f"unknown generator token {tok!r}")
