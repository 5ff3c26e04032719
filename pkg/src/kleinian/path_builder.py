"""Piecewise geodesic paths over plane itineraries, and their certification.

A reduced word's itinerary lifts to a chain of junction-plane translates, and
the raw path joins consecutive translates of the basepoint by the diagonal
geodesic inside each plane.  Where consecutive planes share a geodesic the
diagonals can meet at an arbitrarily flat angle, so those segments are rebuilt
from perpendicular legs: along the shared geodesic to the foot, across the
common perpendicular, and out the far side.  Cutting every long run into
chunks of between 3L and 6L then gives the path the bisector-separation shape
the quasi-geodesic argument needs, and `certify_quasigeodesic` checks the
(A, B) = (18L, 4 + 12L) bounds sample against sample.

All geometry here is anchored locally.  A segment stores its data in the frame
of a nearby junction, where the start is the basepoint itself and every
coordinate is O(e^{6L}) rather than O(e^{path length}); the frames are tracked
as scaled isometries.  Pair distances contract a left factor of one frame
against a right factor of the other, which keeps the cancellation budget at
the number of right-angle bends between the samples instead of the full depth,
and each distance is floored by a horofunction difference anchored at the
path's far ends, a bound that stays valid at any range.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace as _dc_replace

import numpy as np

from .configuration import Configuration, quasi_constants, resolve_threads
from .errors import (
    AsymptoticGeodesics,
    EmptyWord,
    InvalidParameters,
    NoConvergence,
    OrthogonalityViolation,
    PerpendicularTooShort,
    TriangleViolation,
    UnexpectedIntersectionDim,
    ZeroTangent,
)
from .hyperboloid import (
    CLASSIFY_TOL,
    BoundaryPoint,
    Geodesic,
    GeodesicSubspace,
    HPoint,
    Isometry,
    ScaledIsometry,
    ScaledPoint,
    angle_at,
    mink_inner,
    minkowski_form,
    normalize_null,
    scaled_dist,
    translation_along,
)
from .words import Itinerary, Syllable, Word

# Legs shorter than this are artifacts of a foot landing on a junction and
# are omitted rather than kept as zero-length stubs.
DROP_TOL = 1e-12

# An O(1) contracted inner product below this is dot-product noise, not
# signal; the direct distance estimate is then discarded in favor of the
# horofunction bound.  At 1e-9 the surviving estimates carry a relative
# error under 1e-7, far inside the triangle-check slack.
VAL_FLOOR = 1e-9

# Residual allowed when certifying that two carriers meet orthogonally.
ORTHO_TOL = 1e-6

# Crossover from acosh(exp(x)) to its asymptotic log form; matches the
# distance helpers in the hyperboloid module.
_LOG_CUT = 30.0

_ITER_CAP = 10_000


# -- scaled-vector helpers ---------------------------------------------------
#
# A scaled vector is a pair (vhat, log): the vector exp(log) * vhat with
# O(1) entries in vhat.  Unlike ScaledPoint this carries no norm contract,
# so null vectors and linear combinations are fair game.

def _sv(v: np.ndarray, log: float = 0.0) -> tuple[np.ndarray, float]:
    c = float(np.max(np.abs(v)))
    if c == 0.0 or not math.isfinite(c):
        raise ValueError("cannot scale a zero or non-finite vector")
    return v / c, log + math.log(c)


def _sv_push(T: ScaledIsometry, sv: tuple[np.ndarray, float]) -> tuple[np.ndarray, float]:
    v, lg = sv
    return _sv(T.R @ v, lg + T.log_scale)


def _sv_lincomb(terms) -> tuple[np.ndarray, float]:
    """Sum of coeff * exp(log) * vhat contributions, evaluated at O(1).

    The largest term sets the working scale; everything smaller enters with
    an exact exp of a log difference, so no intermediate leaves f64 range.
    """
    live = [(v, lg + math.log(abs(cf)), cf) for v, lg, cf in terms if cf != 0.0]
    if not live:
        raise ValueError("empty linear combination")
    top = max(lg for _, lg, _ in live)
    acc = np.zeros_like(live[0][0])
    for v, lg, cf in live:
        acc = acc + math.copysign(math.exp(lg - top), cf) * v
    return _sv(acc, top)


def _acosh_log(log_ch: float) -> float:
    """acosh of exp(log_ch), stable for any magnitude of the argument."""
    if log_ch <= 0.0:
        return 0.0
    if log_ch <= _LOG_CUT:
        return math.acosh(max(1.0, math.exp(log_ch)))
    return math.log(2.0) + log_ch


def _acosh_log_arr(log_ch: np.ndarray) -> np.ndarray:
    clipped = np.minimum(np.maximum(log_ch, 0.0), _LOG_CUT)
    small = np.arccosh(np.maximum(1.0, np.exp(clipped)))
    return np.where(log_ch <= _LOG_CUT, small, math.log(2.0) + log_ch)


def _logcosh(t: float) -> float:
    return abs(t) + math.log1p(math.exp(-2.0 * abs(t))) - math.log(2.0)


def _tangent_toward(base_v: np.ndarray, w_hat: np.ndarray) -> np.ndarray:
    """Unit tangent at the basepoint aiming at the point w_hat represents.

    Scale-free: stripping the base component and J-normalizing ignore the
    overall factor, so w_hat may come straight from a scaled vector.
    """
    u = w_hat + mink_inner(w_hat, base_v) * base_v
    n2 = mink_inner(u, u)
    if n2 <= 1e-24:
        raise ZeroTangent("target coincides with the basepoint")
    return u / math.sqrt(n2)


def _strip_span(w_hat: np.ndarray, base_v: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Unit component of w_hat J-orthogonal to span{base, d}.

    For a point w at distance r from its foot on the geodesic through base
    with direction d, this is exactly the tangent at the foot toward w:
    w = cosh(r) foot + sinh(r) u with u in the perpendicular complement, and
    the complement is fixed pointwise by translations along the geodesic, so
    the same coordinates serve at every foot.
    """
    u = w_hat + mink_inner(w_hat, base_v) * base_v - mink_inner(w_hat, d) * d
    n2 = mink_inner(u, u)
    if n2 <= 1e-24:
        raise ZeroTangent("point lies on the geodesic's plane through base")
    return u / math.sqrt(n2)


def _kind(length: float, L: float) -> str:
    return "long" if length >= 3.0 * L - 1e-9 else "short"


def _translate_frame(F: ScaledIsometry, geo: Geodesic, t: float) -> ScaledIsometry:
    if t == 0.0:
        return F
    return F.compose(ScaledIsometry.from_isometry(translation_along(geo, t)))


# -- junction classification results ----------------------------------------

@dataclass(frozen=True)
class PointIntersection:
    """Consecutive carriers meet only at the junction translate."""

    frame: int
    point: ScaledPoint


@dataclass(frozen=True)
class GeodesicIntersection:
    """Consecutive carriers share a geodesic through the junction.

    The geodesic is expressed in the coordinates of junction frame `frame`,
    where it passes through the basepoint; compose with the path frame to
    place it globally.
    """

    frame: int
    point: ScaledPoint
    geodesic: Geodesic


# -- path pieces -------------------------------------------------------------

@dataclass(frozen=True)
class PathSegment:
    """One geodesic arc, stored in the frame of a nearby junction.

    The local picture is always the same: the arc starts at `base` (the
    configuration's basepoint coordinates) and runs along `dir` for `length`;
    `frame` places it globally.  `reversed` marks arcs traversed against
    that local parametrization, whose anchor then sits at the traversal end.
    """

    frame: ScaledIsometry
    base: np.ndarray
    dir: np.ndarray
    length: float
    kind: str  # "raw" | "long" | "short"
    carrier: Geodesic | GeodesicSubspace
    reversed: bool = False

    def local_point(self, t: float) -> np.ndarray:
        """Frame coordinates of the point at traversal arc t in [0, length]."""
        p = t if not self.reversed else self.length - t
        return self.base * math.cosh(p) + self.dir * math.sinh(p)

    @property
    def start(self) -> HPoint:
        return HPoint(self.local_point(0.0))

    @property
    def end(self) -> HPoint:
        return HPoint(self.local_point(self.length))

    def global_point(self, t: float) -> ScaledPoint:
        return self.frame.apply(ScaledPoint(*_sv(self.local_point(t))))

    def far_frame(self) -> ScaledIsometry:
        """The frame carried to the far end of the local parametrization."""
        geo = Geodesic(HPoint(self.base), self.dir)
        return _translate_frame(self.frame, geo, self.length)


@dataclass(frozen=True)
class PiecewisePath:
    """A chain of segments through plane translates of the basepoint.

    junctions[i] = (point, angle) sits between segments[i] and segments[i+1].
    frames[j] is the accumulated isometry at syllable boundary j and
    syllable_maps[j] the isometry of syllable j alone; both survive the
    surgery stages unchanged.  stage is "raw", "replaced" or "repartitioned".
    """

    config: Configuration
    syllables: tuple[Syllable, ...]
    frames: tuple[ScaledIsometry, ...]
    syllable_maps: tuple[ScaledIsometry, ...]
    segments: tuple[PathSegment, ...]
    junctions: tuple[tuple[ScaledPoint, float], ...]
    stage: str

    def total_length(self) -> float:
        return float(sum(s.length for s in self.segments))

    def boundaries(self) -> np.ndarray:
        """Arc positions of segment boundaries, 0 through total_length."""
        return np.concatenate([[0.0], np.cumsum([s.length for s in self.segments])])

    def point_at(self, arc: float) -> ScaledPoint:
        b = self.boundaries()
        if not 0.0 <= arc <= float(b[-1]) + 1e-9:
            raise InvalidParameters(f"arc {arc} outside [0, {b[-1]}]")
        k = int(np.searchsorted(b, arc, side="right")) - 1
        k = min(max(k, 0), len(self.segments) - 1)
        seg = self.segments[k]
        return seg.global_point(min(arc - float(b[k]), seg.length))

    def endpoints(self) -> tuple[ScaledPoint, ScaledPoint]:
        return self.segments[0].global_point(0.0), self.segments[-1].global_point(
            self.segments[-1].length)


# -- raw path ----------------------------------------------------------------

def build_raw_path(c: Configuration, itinerary: Itinerary, periods: int = 3) -> PiecewisePath:
    """Raw lift of `periods` repeats of the itinerary, one segment per syllable.

    Segment i joins the basepoint translates under the length-i and
    length-(i+1) syllable prefixes and is carried by syllable i's plane in
    the frame of its start junction.  Junction angles are whatever the
    diagonals happen to make; the surgery stages are what straightens them.
    """
    if periods < 1:
        raise InvalidParameters("periods must be at least 1")
    if len(itinerary.syllables) == 0:
        raise EmptyWord("cannot build a path over an empty itinerary")
    sylls = tuple(itinerary.syllables) * periods
    base = c.base.v
    base_sv = _sv(base)

    maps = []
    for s in sylls:
        acc = ScaledIsometry.identity(c.dim)
        for letter in s.letters:
            acc = acc.compose(ScaledIsometry.from_isometry(c.generator(letter)))
        maps.append(acc)
    frames = [ScaledIsometry.identity(c.dim)]
    for h in maps:
        frames.append(frames[-1].compose(h))

    segs = []
    for i, s in enumerate(sylls):
        h_base = maps[i].apply(ScaledPoint(*base_sv))
        length = scaled_dist(ScaledPoint(*base_sv), h_base)
        d = _tangent_toward(base, h_base.v)
        segs.append(PathSegment(frames[i], base, d, length, "raw", c.plane(s.plane)))

    juncs = []
    for i in range(1, len(sylls)):
        w = maps[i - 1].inverse().apply(ScaledPoint(*base_sv))
        back = _tangent_toward(base, w.v)
        ang = angle_at(c.base, back, segs[i].dir)
        juncs.append((frames[i].apply(ScaledPoint(*base_sv)), ang))

    return PiecewisePath(c, sylls, tuple(frames), tuple(maps), tuple(segs),
                         tuple(juncs), "raw")


# -- junction classification -------------------------------------------------

def _intersect_spans(rows1: np.ndarray, rows2: np.ndarray, base_v: np.ndarray):
    """Span intersection by SVD nullspace, scale-free in the rows.

    Rows are Euclidean-normalized first, so a pulled-back basis with entries
    of size e^{hundreds} still yields an O(1) stacked matrix; the span is
    unchanged.  Returns ("point", None), ("geodesic", dir at base), or
    ("high", intrinsic_dim).
    """
    r1 = rows1 / np.linalg.norm(rows1, axis=1, keepdims=True)
    r2 = rows2 / np.linalg.norm(rows2, axis=1, keepdims=True)
    stacked = np.hstack([r1.T, -r2.T])
    _, sv, vt = np.linalg.svd(stacked)
    tol = max(stacked.shape) * float(sv[0]) * 1e-12
    null_rows = [k for k in range(vt.shape[0]) if k >= sv.size or sv[k] < tol]
    if not null_rows:
        raise UnexpectedIntersectionDim(
            "carriers share no direction at all; the junction translate is missing")
    inter = vt[null_rows, :r1.shape[0]] @ r1
    uu, ss, _ = np.linalg.svd(inter.T, full_matrices=False)
    cols = uu[:, ss > 1e-10 * float(ss[0])]
    rank = cols.shape[1]
    if rank == 1:
        return "point", None
    if rank > 2:
        return "high", rank - 1
    # two shared directions: the junction itself plus one geodesic direction
    best = None
    for k in range(cols.shape[1]):
        u = cols[:, k] + mink_inner(cols[:, k], base_v) * base_v
        n2 = mink_inner(u, u)
        if best is None or n2 > best[0]:
            best = (n2, u)
    n2, u = best
    if n2 <= 1e-20:
        raise UnexpectedIntersectionDim("shared pair of directions is all timelike")
    return "geodesic", u / math.sqrt(n2)


def classify_junction(c: Configuration, path: PiecewisePath, i: int):
    """Intersection type of the carriers either side of syllable boundary i.

    Works in the frame of junction i, where the shared translate is the
    basepoint itself: the previous carrier pulls back through the syllable
    map and the next carrier is its own plane.  Raw paths only; valid for
    1 <= i <= len(segments) - 1.
    """
    if path.stage != "raw":
        raise InvalidParameters("junction classification reads the raw path")
    m = len(path.segments)
    if not 1 <= i < m:
        raise InvalidParameters(f"junction index {i} outside 1..{m - 1}")
    h = path.syllable_maps[i - 1]
    prev_rows = (h.inverse().R @ c.plane(path.syllables[i - 1].plane).basis.T).T
    next_rows = c.plane(path.syllables[i].plane).basis
    point = path.frames[i].apply(ScaledPoint(*_sv(c.base.v)))
    kind, payload = _intersect_spans(prev_rows, next_rows, c.base.v)
    if kind == "point":
        return PointIntersection(i, point)
    if kind == "geodesic":
        return GeodesicIntersection(i, point, Geodesic(c.base, payload))
    raise UnexpectedIntersectionDim(
        f"carriers at junction {i} share a {payload}-dimensional subspace")


# -- segment replacement -----------------------------------------------------

def _neg_log_inner(v: np.ndarray, sv: tuple[np.ndarray, float]) -> float:
    """log(-<v, sv>) for a pairing of future null vectors; must be negative."""
    val = mink_inner(v, sv[0])
    if val >= 0.0:
        raise AsymptoticGeodesics("null pairing collapsed: geodesics share an endpoint")
    return math.log(-val) + sv[1]


def _foot_on(geo: Geodesic, p: tuple[np.ndarray, float], base_v: np.ndarray):
    """Foot parameter and perpendicular length from a scaled point to geo."""
    alpha = mink_inner(p[0], base_v)
    if alpha >= 0.0:
        raise InvalidParameters("translate collapsed onto the junction")
    beta = mink_inner(p[0], geo.dir)
    r = max(-1.0 + 1e-15, min(1.0 - 1e-15, -beta / alpha))
    t = math.atanh(r)
    # cosh(drop) = -<p, geo(t)> = -alpha / cosh(t), kept in logs
    drop = _acosh_log(math.log(-alpha) + p[1] - _logcosh(t))
    return t, drop


def _case_keep(c, path, j, h):
    """Point junctions both sides: the diagonal stays, re-labeled by length."""
    seg = path.segments[j]
    piece = _dc_replace(seg, kind=_kind(seg.length, c.L))
    arrive = _tangent_toward(c.base.v, h.inverse().apply(ScaledPoint(*_sv(c.base.v))).v)
    return [piece], [], seg.dir, arrive


def _case_foot_end(c, F, h, geo):
    """Geodesic at the start junction, point at the end.

    The diagonal becomes [junction -> foot] along the shared geodesic plus
    the perpendicular [foot -> next junction]; the two meet at the foot at a
    right angle and the perpendicular stays inside the segment's plane, which
    is what certifies the far junction's angle.
    """
    base = c.base.v
    base_sv = _sv(base)
    p = _sv_push(h, base_sv)
    t, drop = _foot_on(geo, p, base)
    pieces, inner = [], []
    depart = None
    if abs(t) > DROP_TOL:
        d1 = math.copysign(1.0, t) * geo.dir
        pieces.append(PathSegment(F, base, d1, abs(t), _kind(abs(t), c.L), geo))
        depart = d1
    if drop > DROP_TOL:
        u = _strip_span(p[0], base, geo.dir)
        Ff = _translate_frame(F, geo, t if abs(t) > DROP_TOL else 0.0)
        if pieces:
            inner.append((Ff.apply(ScaledPoint(*base_sv)),
                          angle_at(c.base, -pieces[-1].dir, u)))
        pieces.append(PathSegment(Ff, base, u, drop, _kind(drop, c.L),
                                  Geodesic(HPoint(base), u)))
        if depart is None:
            depart = u
    if not pieces:
        raise InvalidParameters("syllable translate coincides with the junction")
    # the perpendicular's far tangent is not native here; the end junction is
    # a point intersection and gets the orthogonality certificate instead
    return pieces, inner, depart, None


def _case_foot_start(c, F1, h, geo):
    """Point at the start junction, geodesic at the end.

    Mirror image of _case_foot_end, built in the end junction's frame where
    the geodesic is native: perpendicular [start junction -> foot] followed
    by [foot -> end junction] along the geodesic.  The perpendicular is
    anchored at its foot, so its traversal runs against the local
    parametrization.
    """
    base = c.base.v
    base_sv = _sv(base)
    q = _sv_push(h.inverse(), base_sv)
    t, drop = _foot_on(geo, q, base)
    Ff = _translate_frame(F1, geo, t if abs(t) > DROP_TOL else 0.0)
    pieces, inner = [], []
    u = None
    if drop > DROP_TOL:
        u = _strip_span(q[0], base, geo.dir)
        pieces.append(PathSegment(Ff, base, u, drop, _kind(drop, c.L),
                                  Geodesic(HPoint(base), u), reversed=True))
    if abs(t) > DROP_TOL:
        d2 = -math.copysign(1.0, t) * geo.dir
        if pieces:
            inner.append((Ff.apply(ScaledPoint(*base_sv)), angle_at(c.base, u, d2)))
        pieces.append(PathSegment(Ff, base, d2, abs(t), _kind(abs(t), c.L),
                                  Geodesic(HPoint(base), geo.dir)))
        arrive = math.copysign(1.0, t) * geo.dir
    else:
        if u is None:
            raise InvalidParameters("syllable translate coincides with the junction")
        arrive = u
    # departure happens at the start junction, a point intersection whose
    # angle is certified; nothing here is native in that frame
    return pieces, inner, None, arrive


def _case_double(c, F0, F1, h, geo):
    """Geodesics at both junctions: bridge with the common perpendicular.

    The shared geodesic maps under the syllable isometry to the far side's
    shared geodesic, and in the end junction's frame that image has the same
    coordinates the original had at the start, so all three legs (along the
    geodesic to the first foot, across the perpendicular, from the second
    foot to the end junction) are native where they are needed.  When the
    isometry translates the geodesic along itself the perpendicular
    degenerates and the diagonal is kept, carried by the geodesic.
    """
    base = c.base.v
    base_sv = _sv(base)
    P = base + geo.dir
    Q = base - geo.dir
    hP = _sv_push(h, _sv(P))
    hQ = _sv_push(h, _sv(Q))

    ends0 = [normalize_null(P).dir, normalize_null(Q).dir]
    ends1 = [normalize_null(hP[0]).dir, normalize_null(hQ[0]).dir]
    shared = sum(1 for a in ends0 for b in ends1
                 if float(np.linalg.norm(a - b)) < CLASSIFY_TOL)
    if shared >= 2:
        # the syllable translates along the shared geodesic itself
        hO = h.apply(ScaledPoint(*base_sv))
        d = _tangent_toward(base, hO.v)
        length = scaled_dist(ScaledPoint(*base_sv), hO)
        seg = PathSegment(F0, base, d, length, _kind(length, c.L), geo)
        arrive = _tangent_toward(base, h.inverse().apply(ScaledPoint(*base_sv)).v)
        return [seg], [], d, arrive
    if shared == 1:
        raise AsymptoticGeodesics(
            "syllable translate is asymptotic to the junction geodesic")

    la = _neg_log_inner(P, hP)
    lb = _neg_log_inner(P, hQ)
    lc = _neg_log_inner(Q, hP)
    ld = _neg_log_inner(Q, hQ)
    # cosh(perp) = (sqrt(ad) + sqrt(bc)) / 2 over the <P,Q> = -2 normalization
    h1 = 0.5 * (la + ld)
    h2 = 0.5 * (lb + lc)
    hi = max(h1, h2)
    log_ch = hi + math.log(math.exp(h1 - hi) + math.exp(h2 - hi)) - math.log(2.0)
    plen = _acosh_log(log_ch)
    if plen < 3.0 * c.L - 1e-9:
        raise PerpendicularTooShort(
            f"common perpendicular {plen:.9f} is below 3L = {3.0 * c.L:.9f}")
    t1 = 0.25 * (ld - la + lc - lb)
    t2 = 0.25 * (ld - la - lc + lb)

    pieces, inner = [], []
    depart = None
    if abs(t1) > DROP_TOL:
        d1 = math.copysign(1.0, t1) * geo.dir
        pieces.append(PathSegment(F0, base, d1, abs(t1), _kind(abs(t1), c.L), geo))
        depart = d1

    b_sv = _sv_lincomb([(hP[0], hP[1] + t2, 0.5), (hQ[0], hQ[1] - t2, 0.5)])
    u_a = _strip_span(b_sv[0], base, geo.dir)
    Fa = _translate_frame(F0, geo, t1 if abs(t1) > DROP_TOL else 0.0)
    if pieces:
        inner.append((Fa.apply(ScaledPoint(*base_sv)),
                      angle_at(c.base, -pieces[-1].dir, u_a)))
    pieces.append(PathSegment(Fa, base, u_a, plen, _kind(plen, c.L),
                              Geodesic(HPoint(base), u_a)))
    if depart is None:
        depart = u_a

    # second foot, native in the end frame where h(geo) has geo's coordinates
    hiP = _sv_push(h.inverse(), _sv(P))
    hiQ = _sv_push(h.inverse(), _sv(Q))
    a_sv = _sv_lincomb([(hiP[0], hiP[1] + t1, 0.5), (hiQ[0], hiQ[1] - t1, 0.5)])
    u_b = _strip_span(a_sv[0], base, geo.dir)
    if abs(t2) > DROP_TOL:
        d2 = -math.copysign(1.0, t2) * geo.dir
        Fb = _translate_frame(F1, geo, t2)
        inner.append((Fb.apply(ScaledPoint(*base_sv)), angle_at(c.base, u_b, d2)))
        pieces.append(PathSegment(Fb, base, d2, abs(t2), _kind(abs(t2), c.L),
                                  Geodesic(HPoint(base), geo.dir)))
        arrive = math.copysign(1.0, t2) * geo.dir
    else:
        arrive = u_b
    return pieces, inner, depart, arrive


def _tangent_rows(rows: np.ndarray, base_v: np.ndarray) -> np.ndarray:
    """J-unit tangent directions at base spanned by (near-)J-orthonormal rows."""
    out = []
    for r in rows / np.linalg.norm(rows, axis=1, keepdims=True):
        u = r + mink_inner(r, base_v) * base_v
        n2 = mink_inner(u, u)
        if n2 > 0.25:  # the timelike row strips to noise and is dropped
            out.append(u / math.sqrt(n2))
    return np.array(out) if out else np.zeros((0, rows.shape[1]))


def _certify_orthogonal_junction(c: Configuration, path: PiecewisePath, cls, i: int):
    """Assert pi/2 at a point junction by checking the carriers' tangent spaces.

    Every replacement leg of a segment stays inside that segment's plane, so
    when the planes meet orthogonally at the junction any arriving tangent is
    orthogonal to any departing one; measuring the angle at the far end of a
    perpendicular leg directly would require transporting through coordinates
    of size e^{length}, which is exactly what this certificate avoids.
    """
    if not isinstance(cls, PointIntersection):
        raise OrthogonalityViolation(
            f"junction {i}: non-native tangents at a geodesic intersection")
    h = path.syllable_maps[i - 1]
    rows_prev = (h.inverse().R @ c.plane(path.syllables[i - 1].plane).basis.T).T
    rows_next = c.plane(path.syllables[i].plane).basis
    TA = _tangent_rows(rows_prev, c.base.v)
    TB = _tangent_rows(rows_next, c.base.v)
    J = minkowski_form(c.dim)
    resid = float(np.max(np.abs(TA @ J @ TB.T))) if TA.size and TB.size else 0.0
    if resid > ORTHO_TOL:
        raise OrthogonalityViolation(
            f"junction {i}: tangent spaces fail orthogonality by {resid:.3e}")


def replace_segments(c: Configuration, path: PiecewisePath) -> PiecewisePath:
    """Rebuild segments adjacent to geodesic junctions from perpendicular legs.

    Each segment is handled by the junction types at its two ends: kept
    outright between point junctions, split into foot-and-perpendicular legs
    when one end shares a geodesic, and routed along the common perpendicular
    of the shared geodesic and its syllable translate when both do.  Original
    junction positions and total endpoints are preserved exactly; new
    interior junctions sit at perpendicular feet.  Angles at point junctions
    between orthogonal carriers are certified pi/2, all others are measured
    directly at a junction origin where both tangents are O(1).
    """
    if path.stage != "raw":
        raise InvalidParameters("segment replacement runs on the raw path")
    m = len(path.segments)
    base_sv = _sv(c.base.v)
    cls = [None] * (m + 1)
    for i in range(1, m):
        cls[i] = classify_junction(c, path, i)

    out_segs: list[PathSegment] = []
    out_juncs: list[tuple[ScaledPoint, float]] = []
    pending_back = None

    for j in range(m):
        start_geo = cls[j].geodesic if isinstance(cls[j], GeodesicIntersection) else None
        end_geo = cls[j + 1].geodesic if isinstance(cls[j + 1], GeodesicIntersection) else None
        h = path.syllable_maps[j]
        if start_geo is None and end_geo is None:
            pieces, inner, depart, arrive = _case_keep(c, path, j, h)
        elif start_geo is not None and end_geo is None:
            pieces, inner, depart, arrive = _case_foot_end(c, path.frames[j], h, start_geo)
        elif start_geo is None:
            pieces, inner, depart, arrive = _case_foot_start(c, path.frames[j + 1], h, end_geo)
        else:
            pieces, inner, depart, arrive = _case_double(
                c, path.frames[j], path.frames[j + 1], h, start_geo)

        if j > 0:
            pt = path.frames[j].apply(ScaledPoint(*base_sv))
            if pending_back is not None and depart is not None:
                ang = angle_at(c.base, pending_back, depart)
            else:
                _certify_orthogonal_junction(c, path, cls[j], j)
                ang = 0.5 * math.pi
            out_juncs.append((pt, ang))
        out_segs.extend(pieces)
        out_juncs.extend(inner)
        pending_back = arrive

    return _dc_replace(path, segments=tuple(out_segs), junctions=tuple(out_juncs),
                       stage="replaced")


# -- repartition -------------------------------------------------------------

def repartition(path: PiecewisePath) -> PiecewisePath:
    """Cut every arc of length >= 6L into 3L chunks with a [3L, 6L) tail.

    Interior cut points are collinear, so the new junctions carry angle pi;
    everything else, including the original junction data and the total
    length, is preserved.
    """
    if path.stage != "replaced":
        raise InvalidParameters("repartition runs on the replaced path")
    L = path.config.L
    L3, L6 = 3.0 * L, 6.0 * L
    segs: list[PathSegment] = []
    juncs: list[tuple[ScaledPoint, float]] = []
    for k, s in enumerate(path.segments):
        if k > 0:
            juncs.append(path.junctions[k - 1])
        if s.length < L6 - 1e-9:
            segs.append(s)
            continue
        cuts = [0.0]
        while s.length - cuts[-1] >= L6 - 1e-9:
            cuts.append(cuts[-1] + L3)
        cuts.append(s.length)
        geo = Geodesic(HPoint(s.base), s.dir)
        for a, b in zip(cuts, cuts[1:]):
            # anchor each chunk at its own near end so local coordinates
            # never exceed e^{6L} regardless of where it sits on the arc
            pl = a if not s.reversed else s.length - b
            F = _translate_frame(s.frame, geo, pl)
            seg = PathSegment(F, s.base, s.dir, b - a, "long", geo, s.reversed)
            if a > 0.0:
                juncs.append((seg.global_point(0.0), math.pi))
            segs.append(seg)
    return _dc_replace(path, segments=tuple(segs), junctions=tuple(juncs),
                       stage="repartitioned")


# -- certification -----------------------------------------------------------

@dataclass(frozen=True)
class QuasiGeodesicCertificate:
    """Result of sampling a path against d >= arc/A - B.

    worst_margin is the minimum of d - (arc/A - B) over all checked pairs;
    the certificate passes when it is nonnegative.  worst_pair holds the arc
    positions realizing it and samples the number of pairs checked.
    """

    A: float
    B: float
    L: float
    worst_margin: float
    worst_pair: tuple[float, float]
    samples: int
    seed: int
    endpoints_distance: float

    @property
    def passes(self) -> bool:
        return self.worst_margin >= 0.0

    def to_dict(self) -> dict:
        return {
            "A": self.A,
            "B": self.B,
            "L": self.L,
            "worst_margin": self.worst_margin,
            "worst_pair": list(self.worst_pair),
            "samples": self.samples,
            "seed": self.seed,
            "endpoints_distance": self.endpoints_distance,
            "passes": self.passes,
        }

    def report(self) -> str:
        lines = [
            "quasi-geodesic certificate",
            f"  A                   {self.A:.12f}",
            f"  B                   {self.B:.12f}",
            f"  L                   {self.L:.12f}",
            f"  worst margin        {self.worst_margin:.9f}",
            f"  worst pair          arc {self.worst_pair[0]:.6f} <-> {self.worst_pair[1]:.6f}",
            f"  samples             {self.samples}",
            f"  seed                {self.seed}",
            f"  endpoints distance  {self.endpoints_distance:.9f}",
            f"  verdict             {'PASS' if self.passes else 'FAIL'}",
        ]
        return "\n".join(lines)


def _junction_rep(path: PiecewisePath, p: int) -> tuple[str, int]:
    """Which segment frame has boundary point p at its local basepoint."""
    segs = path.segments
    if p < len(segs) and not segs[p].reversed:
        return "anchor", p
    if p > 0:
        if segs[p - 1].reversed:
            return "anchor", p - 1  # a reversed arc ends at its anchor
        return "far", p - 1
    return "far", 0  # first arc reversed: its traversal start is the far end


def certify_quasigeodesic(path: PiecewisePath, pair_samples: int = 100,
                          seed: int = 0, threads: int | None = None) -> QuasiGeodesicCertificate:
    """Check sampled pair distances against the lower bound arc/A - B.

    Samples are all segment boundaries plus `pair_samples` random interior
    pairs drawn from the given seed.  Each distance is measured two ways and
    the better lower bound kept: the direct contracted inner product, exact
    until the pair's true separation falls ~36 nats under the intervening
    arc, and the difference of horofunctions anchored behind the path's two
    ends, which is 1-Lipschitz and hence always a true lower bound.  The
    triangle inequality d <= arc is asserted on the same data; bound
    failures are reported in the margin, never raised.
    """
    c = path.config
    A, B = quasi_constants()
    if not path.segments:
        raise EmptyWord("cannot certify an empty path")
    nthreads = resolve_threads(threads)
    bnd = path.boundaries()
    total = float(bnd[-1])
    base_sv = _sv(c.base.v)

    frames: list[ScaledIsometry] = [s.frame for s in path.segments]
    far_cache: dict[int, int] = {}

    def far_index(k: int) -> int:
        if k not in far_cache:
            frames.append(path.segments[k].far_frame())
            far_cache[k] = len(frames) - 1
        return far_cache[k]

    samp_f: list[int] = []
    samp_v: list[np.ndarray] = []
    samp_s: list[float] = []
    samp_arc: list[float] = []

    nb = len(path.segments) + 1
    for p in range(nb):
        side, k = _junction_rep(path, p)
        samp_f.append(k if side == "anchor" else far_index(k))
        samp_v.append(base_sv[0])
        samp_s.append(base_sv[1])
        samp_arc.append(float(bnd[p]))

    rng = np.random.default_rng(seed)
    for t in rng.uniform(0.0, total, 2 * pair_samples):
        k = min(max(int(np.searchsorted(bnd, t, side="right")) - 1, 0),
                len(path.segments) - 1)
        s = path.segments[k]
        u = min(t - float(bnd[k]), s.length)
        pl = u if not s.reversed else s.length - u
        if pl <= 0.5 * s.length:
            fi = k
            v = s.base * math.cosh(pl) + s.dir * math.sinh(pl)
        else:
            # represent from the far end: local depth stays under length/2
            fi = far_index(k)
            q = s.length - pl
            v = s.base * math.cosh(q) - s.dir * math.sinh(q)
        sv = _sv(v)
        samp_f.append(fi)
        samp_v.append(sv[0])
        samp_s.append(sv[1])
        samp_arc.append(float(t))

    V = np.stack(samp_v)
    S = np.array(samp_s)
    Fi = np.array(samp_f, dtype=int)
    arc = np.array(samp_arc)
    Rs = np.stack([f.R for f in frames])
    Rinv = np.stack([f.inverse().R for f in frames])
    flog = np.array([f.log_scale for f in frames])

    JV = V.copy()
    JV[:, 0] *= -1.0
    # val(i, j) = v_i^T J (Finv_i Fj) v_j factors into row i of G dot row j of H
    G = np.einsum("nba,nb->na", Rinv[Fi], JV)
    H = np.einsum("nab,nb->na", Rs[Fi], V)
    off = S + flog[Fi]

    ia, ib = np.triu_indices(nb, 1)
    if pair_samples:
        extra = nb + np.arange(2 * pair_samples)
        ia = np.concatenate([ia, extra[0::2]])
        ib = np.concatenate([ib, extra[1::2]])

    def _vals(lo: int, hi: int) -> np.ndarray:
        return np.einsum("na,na->n", G[ia[lo:hi]], H[ib[lo:hi]])

    n_pairs = ia.size
    if nthreads > 1 and n_pairs >= 4096:
        blocks = np.linspace(0, n_pairs, nthreads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=nthreads) as ex:
            parts = list(ex.map(lambda se: _vals(*se), zip(blocks, blocks[1:])))
        vals = np.concatenate(parts)
    else:
        vals = _vals(0, n_pairs)

    ip = -vals
    trusted = ip > VAL_FLOOR
    log_ch = np.where(trusted, np.log(np.maximum(ip, 1e-300)), -np.inf) \
        + off[ia] + off[ib]
    d_direct = np.where(trusted, _acosh_log_arr(np.where(trusted, log_ch, 0.0)), 0.0)

    # horofunction values: global representatives reuse H = R_f v
    mags = np.max(np.abs(H), axis=1)
    ghat = H / mags[:, None]
    glog = off + np.log(mags)
    s_first, s_last = path.segments[0], path.segments[-1]
    fwd = s_last.base + (-s_last.dir if s_last.reversed else s_last.dir)
    bwd = s_first.base - (-s_first.dir if s_first.reversed else s_first.dir)
    U1 = s_last.frame.R @ fwd
    U2 = s_first.frame.R @ bwd
    bus = []
    for U in (U1, U2):
        JU = U.copy()
        JU[0] *= -1.0
        bus.append(np.log(np.maximum(-(ghat @ JU), 5e-16)) + glog)
    d_buse = np.maximum(np.abs(bus[0][ia] - bus[0][ib]),
                        np.abs(bus[1][ia] - bus[1][ib]))
    d_cert = np.maximum(d_direct, d_buse)

    arcs = np.abs(arc[ia] - arc[ib])
    over = d_cert - arcs - 1e-6 * (1.0 + arcs)
    if np.any(over > 0.0):
        k = int(np.argmax(over))
        raise TriangleViolation(
            f"pair at arcs ({arc[ia[k]]:.6f}, {arc[ib[k]]:.6f}) measured "
            f"{d_cert[k]:.9f} over a path of length {arcs[k]:.9f}")

    margins = d_cert - (arcs / A - B)
    k = int(np.argmin(margins))
    end_mask = (ia == 0) & (ib == nb - 1)
    endpoints_distance = float(d_cert[end_mask][0]) if np.any(end_mask) else float(d_cert[0])
    return QuasiGeodesicCertificate(
        A=A, B=B, L=c.L,
        worst_margin=float(margins[k]),
        worst_pair=(float(arc[ia[k]]), float(arc[ib[k]])),
        samples=int(n_pairs),
        seed=seed,
        endpoints_distance=endpoints_distance,
    )


# -- bisector separations ----------------------------------------------------

def bisector_separations(path: PiecewisePath) -> list[float]:
    """Distances between bisector hyperplanes of successive long arcs.

    Adjacent long arcs contribute their own pair; when short legs intervene,
    the earlier arc is replaced by the chord from its traversal start to the
    later arc's start, the same coarsening the separation argument uses.  A
    bisector is the hyperplane J-orthogonal to the difference of an arc's
    endpoints; disjoint hyperplanes with unit normals u, v lie acosh|<u,v>|
    apart, touching ones contribute 0.
    """
    if path.stage != "repartitioned":
        raise InvalidParameters("bisector separations read the repartitioned path")
    longs = [i for i, s in enumerate(path.segments) if s.kind == "long"]
    out: list[float] = []
    for i1, i2 in zip(longs, longs[1:]):
        ref = path.segments[i2]
        T = ref.frame.inverse().compose(path.segments[i1].frame)
        s1 = path.segments[i1]
        a0 = _sv_push(T, _sv(s1.local_point(0.0)))
        if i2 - i1 == 1:
            a1 = _sv_push(T, _sv(s1.local_point(s1.length)))
        else:
            a1 = _sv(ref.local_point(0.0))  # chord skips the short run
        b0 = _sv(ref.local_point(0.0))
        b1 = _sv(ref.local_point(ref.length))
        # subtract before any inner product: the difference of two nearby
        # representatives keeps ~22 nats of headroom, their Gram does not
        u = _sv_lincomb([(a0[0], a0[1], 1.0), (a1[0], a1[1], -1.0)])
        v = _sv_lincomb([(b0[0], b0[1], 1.0), (b1[0], b1[1], -1.0)])
        uh = u[0] / math.sqrt(mink_inner(u[0], u[0]))
        vh = v[0] / math.sqrt(mink_inner(v[0], v[0]))
        cr = abs(mink_inner(uh, vh))
        out.append(math.acosh(cr) if cr > 1.0 else 0.0)
    return out


# -- ideal endpoints ---------------------------------------------------------

def endpoint_at_infinity(word: Word, c: Configuration, direction: int = 1) -> BoundaryPoint:
    """Attracting fixed direction of the word's isometry on the boundary.

    direction=-1 gives the repelling end (the attracting end of the inverse).
    Normalized power iteration, letter by letter so no product is ever formed
    at full scale; converged when a full cycle moves the projective image by
    less than 1e-10.  Words with nothing to attract to raise NoConvergence
    after 10^4 cycles.
    """
    if direction not in (1, -1):
        raise InvalidParameters("direction must be +1 or -1")
    if not word.letters:
        raise EmptyWord("the identity has no axis endpoints")
    w = word if direction == 1 else word.inverse()
    mats = [c.generator(letter).matrix for letter in w.letters]
    v = c.base.v.copy()
    prev = None
    for _ in range(_ITER_CAP):
        for M in mats:
            v = M @ v
            v /= float(np.linalg.norm(v))
        cur = v[1:] / v[0]
        cur = cur / float(np.linalg.norm(cur))
        if prev is not None and float(np.linalg.norm(cur - prev)) < 1e-10:
            return BoundaryPoint(cur)
        prev = cur
    raise NoConvergence(f"no attracting direction after {_ITER_CAP} cycles")
