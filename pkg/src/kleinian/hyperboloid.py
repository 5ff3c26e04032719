"""Hyperboloid model of H^m inside Minkowski space R^{m,1}.

Points are vectors x with <x,x> = -1 and x0 > 0, where <x,y> is the Lorentz
form -x0*y0 + sum_i xi*yi.  Isometries are matrices M with M^T J M = J
preserving the upper sheet, J = diag(-1, 1, ..., 1).  Geodesics are
parametrized t -> base*cosh(t) + dir*sinh(t) with a unit spacelike direction
J-orthogonal to the base point.

Constructor residuals are measured relative to the square of the entry scale:
for a vector or matrix with entries of size S the form values are sums of
terms of size S^2, so S^2 * eps is the best double precision can certify.  At
entry scale O(1) this reduces to the plain absolute tolerance.

Large translations make raw coordinates overflow (cosh overflows float64 near
710), so long products live in the scaled types at the bottom of the module:
a ScaledPoint or ScaledIsometry keeps O(1) entries next to an explicit
log-scale, and distances come out through the logarithmic form of acosh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AsymptoticGeodesics,
    DegenerateFrame,
    DimensionMismatch,
    EmptyIntersection,
    IntersectingGeodesics,
    ZeroTangent,
)

# Constructor invariants; relative to entry scale squared, see module docstring.
ATOL = 1e-9
# Classification of geodesic pairs: closer than this is "intersecting",
# ideal endpoints closer than this are "asymptotic".
CLASSIFY_TOL = 1e-7
# Gram-Schmidt gives up below this norm.
COLLAPSE_TOL = 1e-8
# Renormalize accumulated products this often.
RENORM_EVERY = 64
# Entry scale below which quadratic invariants (mink norms of unit-size
# results) still carry digits: error ~ scale^2 * eps, so 600^2 * eps ~ 1e-11.
NORM_TRUST_SCALE = 600.0
# J-orthonormalization is only trustworthy while entries stay below e**this;
# beyond it the Gram entries lose all significant digits to cancellation.
_JFIX_LOG_BUDGET = 5.0
# Switch dist to the log form acosh(x) ~ log(2x) above this log(cosh d).
_LOG_DIST_CUTOFF = 30.0


def minkowski_form(m: int) -> np.ndarray:
    """The matrix J = diag(-1, 1, ..., 1) for R^{m,1}."""
    J = np.eye(m + 1)
    J[0, 0] = -1.0
    return J


def mink_inner(x: np.ndarray, y: np.ndarray) -> float:
    """Lorentz inner product -x0*y0 + sum_{i>=1} xi*yi."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionMismatch(f"shapes {x.shape} and {y.shape}")
    return float(x[1:] @ y[1:] - x[0] * y[0])


def _scale2(*arrays: np.ndarray) -> float:
    s = max(float(np.max(np.abs(a))) for a in arrays)
    return max(1.0, s * s)


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class HPoint:
    """A point on the upper sheet: <v,v> = -1, v[0] > 0."""

    v: np.ndarray

    def __post_init__(self):
        v = _frozen(self.v)
        object.__setattr__(self, "v", v)
        if v.ndim != 1 or v.shape[0] < 2:
            raise DimensionMismatch(f"bad point shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite point coordinates")
        if v[0] <= 0:
            raise ValueError("point not on the upper sheet")
        if abs(mink_inner(v, v) + 1.0) > ATOL * _scale2(v):
            raise ValueError("point norm is not -1")

    @property
    def dim(self) -> int:
        """Ambient dimension m of H^m."""
        return self.v.shape[0] - 1


@dataclass(frozen=True)
class Isometry:
    """A Lorentz matrix preserving the upper sheet: M^T J M = J, M[0,0] > 0."""

    matrix: np.ndarray

    def __post_init__(self):
        M = _frozen(self.matrix)
        object.__setattr__(self, "matrix", M)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 2:
            raise DimensionMismatch(f"bad matrix shape {M.shape}")
        if not np.all(np.isfinite(M)):
            raise ValueError("non-finite matrix entries")
        if M[0, 0] <= 0:
            raise ValueError("matrix swaps the sheets")
        J = minkowski_form(M.shape[0] - 1)
        resid = np.max(np.abs(M.T @ J @ M - J))
        if resid > ATOL * _scale2(M):
            raise ValueError(f"Lorentz residual {resid:.3e} too large")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0] - 1

    def apply(self, p: HPoint) -> HPoint:
        w = self.matrix @ p.v
        if float(np.max(np.abs(w))) <= NORM_TRUST_SCALE:
            # re-impose the norm; one multiply only drifts by O(eps)
            w = w / math.sqrt(max(1e-300, -mink_inner(w, w)))
        # at larger scale the computed norm is cancellation noise; the raw
        # image is relatively accurate and passes the scale-aware check
        return HPoint(w)

    def apply_vector(self, u: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(u, dtype=float)

    def compose(self, other: "Isometry") -> "Isometry":
        """self after other (matrix product self @ other)."""
        return Isometry(self.matrix @ other.matrix)

    def inverse(self) -> "Isometry":
        J = minkowski_form(self.dim)
        # M^-1 = J M^T J, exact for Lorentz matrices
        return Isometry(J @ self.matrix.T @ J)


@dataclass(frozen=True)
class Geodesic:
    """Unit-speed geodesic t -> base*cosh t + dir*sinh t."""

    base: HPoint
    dir: np.ndarray

    def __post_init__(self):
        d = _frozen(self.dir)
        object.__setattr__(self, "dir", d)
        if d.shape != self.base.v.shape:
            raise DimensionMismatch("dir does not match base dimension")
        if not np.all(np.isfinite(d)):
            raise ValueError("non-finite direction")
        s2 = _scale2(self.base.v, d)
        if abs(mink_inner(d, d) - 1.0) > ATOL * s2:
            raise ValueError("direction is not unit spacelike")
        if abs(mink_inner(self.base.v, d)) > ATOL * s2:
            raise ValueError("direction is not tangent at base")

    @property
    def dim(self) -> int:
        return self.base.dim


@dataclass(frozen=True)
class GeodesicSubspace:
    """Totally geodesic H^k spanned by one timelike and k spacelike vectors.

    basis rows are J-orthonormal: Gram = diag(-1, 1, ..., 1).  Row 0 is the
    timelike vector, normalized to lie on the upper sheet.
    """

    basis: np.ndarray

    def __post_init__(self):
        B = _frozen(self.basis)
        object.__setattr__(self, "basis", B)
        if B.ndim != 2 or B.shape[0] < 1 or B.shape[1] < B.shape[0]:
            raise DimensionMismatch(f"bad basis shape {B.shape}")
        if not np.all(np.isfinite(B)):
            raise ValueError("non-finite basis entries")
        J = minkowski_form(B.shape[1] - 1)
        gram = B @ J @ B.T
        target = np.eye(B.shape[0])
        target[0, 0] = -1.0
        if np.max(np.abs(gram - target)) > ATOL * _scale2(B):
            raise ValueError("basis is not J-orthonormal")
        if B[0, 0] <= 0:
            raise ValueError("timelike basis vector not on the upper sheet")

    @property
    def intrinsic_dim(self) -> int:
        return self.basis.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.basis.shape[1] - 1

    def base_point(self) -> HPoint:
        return HPoint(self.basis[0])


@dataclass(frozen=True)
class BoundaryPoint:
    """Ideal point, stored by the direction part of its (1, dir) null lift."""

    dir: np.ndarray

    def __post_init__(self):
        d = _frozen(self.dir)
        object.__setattr__(self, "dir", d)
        if d.ndim != 1 or d.shape[0] < 1:
            raise DimensionMismatch(f"bad boundary shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ValueError("non-finite boundary direction")
        if abs(float(d @ d) - 1.0) > ATOL:
            raise ValueError("boundary direction is not unit length")

    @property
    def dim(self) -> int:
        return self.dir.shape[0]


def base_point(m: int) -> HPoint:
    """The origin O = (1, 0, ..., 0) of H^m."""
    v = np.zeros(m + 1)
    v[0] = 1.0
    return HPoint(v)


def axis_geodesic(m: int, i: int) -> Geodesic:
    """The coordinate axis through O in the e_i direction, 1 <= i <= m."""
    if not 1 <= i <= m:
        raise DimensionMismatch(f"axis index {i} outside 1..{m}")
    d = np.zeros(m + 1)
    d[i] = 1.0
    return Geodesic(base_point(m), d)


def dist(p: HPoint, q: HPoint) -> float:
    """Hyperbolic distance acosh(-<p,q>), clamped against roundoff."""
    return math.acosh(max(1.0, -mink_inner(p.v, q.v)))


def geodesic_point(g: Geodesic, t: float) -> HPoint:
    return HPoint(g.base.v * math.cosh(t) + g.dir * math.sinh(t))


def geodesic_tangent(g: Geodesic, t: float) -> np.ndarray:
    """Unit tangent of the parametrization at parameter t."""
    return g.base.v * math.sinh(t) + g.dir * math.cosh(t)


def angle_at(p: HPoint, u: np.ndarray, w: np.ndarray) -> float:
    """Angle in [0, pi] between tangent vectors u, w at p.

    Tangents at a point are spacelike, so the restricted form is positive
    definite and the arccos formula is legitimate.
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    nu = float(np.max(np.abs(u)))
    nw = float(np.max(np.abs(w)))
    if nu == 0.0 or nw == 0.0:
        raise ZeroTangent("zero tangent vector")
    u = u / nu  # balance entry scales before forming quadratic quantities
    w = w / nw
    uu = mink_inner(u, u)
    ww = mink_inner(w, w)
    if uu <= 0 or ww <= 0:
        raise ZeroTangent("tangent vector is not spacelike")
    c = mink_inner(u, w) / math.sqrt(uu * ww)
    return math.acos(min(1.0, max(-1.0, c)))


def foot_of_perpendicular(p: HPoint, g: Geodesic) -> tuple[HPoint, float]:
    """Closest point of g to p, with its parameter.

    Minimizing -<p, g(t)> = -(alpha*cosh t + beta*sinh t) gives
    tanh t = -beta/alpha with alpha = <p, base>, beta = <p, dir>.  alpha is
    the inner product of two upper timelike vectors, hence <= -1, and the
    projection of p to the span of (base, dir) is timelike, so |beta| <
    |alpha| and atanh is defined.
    """
    alpha = mink_inner(p.v, g.base.v)
    beta = mink_inner(p.v, g.dir)
    r = -beta / alpha
    r = min(1.0 - 1e-15, max(-1.0 + 1e-15, r))
    t = math.atanh(r)
    return geodesic_point(g, t), t


def null_pair(g: Geodesic) -> tuple[np.ndarray, np.ndarray]:
    """Future-null endpoint lifts (base + dir, base - dir), <P,Q> = -2."""
    return g.base.v + g.dir, g.base.v - g.dir


def _sep_coefficients(P1, Q1, P2, Q2) -> tuple[float, float, float, float]:
    # negated pairings of future null vectors; nonnegative, zero only for
    # proportional pairs (a shared ideal endpoint)
    a = max(0.0, -mink_inner(P1, P2))
    b = max(0.0, -mink_inner(P1, Q2))
    c = max(0.0, -mink_inner(Q1, P2))
    d = max(0.0, -mink_inner(Q1, Q2))
    return a, b, c, d


def _log_cosh_separation(a: float, b: float, c: float, d: float) -> float:
    """log of the minimal cosh-distance between two null-pair geodesics.

    Parametrizing each geodesic as (x P + Q / x) / 2 with x = e^t turns the
    cosh-distance into (a*x*w + b*x/w + c*w/x + d/(x*w)) / 4, separable in
    (xw, x/w); the global minimum is (sqrt(ad) + sqrt(bc)) / 2, evaluated
    here in logs so far translates cannot overflow.
    """
    terms = []
    if a > 0.0 and d > 0.0:
        terms.append(0.5 * (math.log(a) + math.log(d)))
    if b > 0.0 and c > 0.0:
        terms.append(0.5 * (math.log(b) + math.log(c)))
    if not terms:
        return 0.0  # both products vanished: asymptotic limit, cosh -> 1
    hi = max(terms)
    return hi + math.log(sum(math.exp(t - hi) for t in terms)) - math.log(2.0)


def _acosh_from_log(log_x: float) -> float:
    """acosh(e^log_x), switching to the log form for large arguments."""
    if log_x <= 0.0:
        return 0.0
    if log_x <= _LOG_DIST_CUTOFF:
        return math.acosh(max(1.0, math.exp(log_x)))
    return math.log(2.0) + log_x  # error below e^{-2 log_x}


def separation_of_null_pairs(P1, Q1, P2, Q2) -> float:
    """Infimum distance between geodesics given by null endpoint lifts.

    Each pair must satisfy <P,Q> = -2 (true for base +- dir lifts and all
    their isometric images).  Scale-robust: pairings of small-with-large
    vectors stay relatively accurate where the (base, dir) form of a far
    translate loses the repelling endpoint to cancellation.  Returns 0 for
    intersecting and asymptotic pairs alike (the infimum in both cases).
    """
    return _acosh_from_log(_log_cosh_separation(*_sep_coefficients(P1, Q1, P2, Q2)))


def geodesic_separation(g1: Geodesic, g2: Geodesic) -> float:
    P1, Q1 = null_pair(g1)
    P2, Q2 = null_pair(g2)
    return separation_of_null_pairs(P1, Q1, P2, Q2)


def perpendicular_of_null_pairs(P1, Q1, P2, Q2):
    """Common perpendicular for geodesics given as null endpoint lifts.

    Same <P,Q> = -2 contract as separation_of_null_pairs.  Returns
    (foot1, foot2, length, t1, t2) with the feet as raw Minkowski vectors
    and t1, t2 their parameters in the (e^t P + e^-t Q)/2 parametrization
    of each geodesic; raises for intersecting or asymptotic pairs, which
    have no perpendicular.
    """
    shared = 0
    for U in (P1, Q1):
        du = normalize_null(U).dir
        for V in (P2, Q2):
            if float(np.linalg.norm(du - normalize_null(V).dir)) < CLASSIFY_TOL:
                shared += 1
    if shared >= 2:
        raise IntersectingGeodesics("same geodesic")
    if shared == 1:
        raise AsymptoticGeodesics("shared ideal endpoint")
    a, b, c, d = _sep_coefficients(P1, Q1, P2, Q2)
    length = _acosh_from_log(_log_cosh_separation(a, b, c, d))
    if length < CLASSIFY_TOL:
        raise IntersectingGeodesics(f"geodesics meet, separation {length:.2e}")
    la, lb, lc, ld = (math.log(x) for x in (a, b, c, d))
    t1 = 0.25 * (ld - la + lc - lb)
    t2 = 0.25 * (ld - la - lc + lb)
    foot1 = 0.5 * (math.exp(t1) * P1 + math.exp(-t1) * Q1)
    foot2 = 0.5 * (math.exp(t2) * P2 + math.exp(-t2) * Q2)
    return foot1, foot2, length, t1, t2


def common_perpendicular(g1: Geodesic, g2: Geodesic) -> tuple[HPoint, HPoint, float]:
    """Feet (a, b) on g1, g2 of their common perpendicular, and its length.

    Exact closed form through the null endpoint lifts; see
    perpendicular_of_null_pairs.  For geodesics produced by applying a very
    large isometry, build the null pair structurally (matrix times the
    original endpoint lifts) and call the null-pair form instead: base - dir
    of a far translate is a catastrophically cancelled difference.
    """
    if g1.dim != g2.dim:
        raise DimensionMismatch("geodesics in different dimensions")
    P1, Q1 = null_pair(g1)
    P2, Q2 = null_pair(g2)
    foot1, foot2, length, _, _ = perpendicular_of_null_pairs(P1, Q1, P2, Q2)
    return HPoint(foot1), HPoint(foot2), length


def translation_along(g: Geodesic, ell: float) -> Isometry:
    """Loxodromic translation by ell along g (identity on the J-complement).

    Acts by base -> base*cosh + dir*sinh, dir -> base*sinh + dir*cosh; as a
    matrix, rank-2 correction of the identity by outer products against the
    J-duals of base and dir.
    """
    b = g.base.v
    d = g.dir
    J = minkowski_form(g.dim)
    jb = J @ b
    jd = J @ d
    ch = math.cosh(ell)
    sh = math.sinh(ell)
    M = np.eye(g.dim + 1)
    M += (1.0 - ch) * np.outer(b, jb) + (ch - 1.0) * np.outer(d, jd)
    M += sh * (np.outer(b, jd) - np.outer(d, jb))
    return Isometry(M)


def reorthonormalize(M) -> Isometry:
    """Nearest J-orthonormal frame by Gram-Schmidt in the Lorentz form.

    Accepts an Isometry or a raw matrix whose columns are a slightly drifted
    Lorentz frame (timelike first column).  Worthwhile only at moderate entry
    scale: the Gram entries of a frame with entries of size S carry absolute
    error S^2 * eps, so beyond S ~ e^5 there is nothing left to restore.
    """
    A = np.array(M.matrix if isinstance(M, Isometry) else M, dtype=float)
    n = A.shape[0]
    J = minkowski_form(n - 1)
    signs = [-1.0] + [1.0] * (n - 1)
    cols = []
    for k in range(n):
        c = A[:, k].copy()
        for j, cj in enumerate(cols):
            c -= signs[j] * float(cj @ J @ c) * cj
        nrm2 = signs[k] * float(c @ J @ c)
        if nrm2 < COLLAPSE_TOL ** 2:
            raise DegenerateFrame(f"column {k} collapsed, norm^2 {nrm2:.2e}")
        cols.append(c / math.sqrt(nrm2))
    Q = np.column_stack(cols)
    if Q[0, 0] < 0:
        Q[:, 0] = -Q[:, 0]
    return Isometry(Q)


def boundary_endpoint(g: Geodesic, sign: int) -> BoundaryPoint:
    """Ideal endpoint of g in the +dir (sign=+1) or -dir (sign=-1) direction."""
    nu = g.base.v + (1.0 if sign > 0 else -1.0) * g.dir
    d = nu[1:] / nu[0]
    return BoundaryPoint(d / np.linalg.norm(d))


def normalize_null(x: np.ndarray) -> BoundaryPoint:
    """Boundary point of a (near-)null vector with x0 > 0."""
    x = np.asarray(x, dtype=float)
    d = x[1:] / x[0]
    return BoundaryPoint(d / np.linalg.norm(d))


def image_endpoint(M: np.ndarray, U: np.ndarray) -> BoundaryPoint | None:
    """Boundary image of the null lift U under the matrix M, or None.

    A loxodromic matrix cannot express its own repelling eigendirection in
    double precision: M @ U cancels to the noise floor exactly when U is
    (numerically) that eigendirection, in which case the true image
    direction is U's own and None is returned so the caller can substitute
    it.  Otherwise the image survives cancellation and is normalized.
    """
    hU = M @ U
    floor = (float(np.max(np.abs(M))) * float(np.max(np.abs(U)))
             * M.shape[0] * 64 * np.finfo(float).eps)
    if float(np.max(np.abs(hU))) <= floor:
        return None
    return normalize_null(hU)


def subspace_intersection(s1: GeodesicSubspace, s2: GeodesicSubspace):
    """Intersection of two totally geodesic subspaces through a common point.

    Returns a GeodesicSubspace (intrinsic dim >= 1), or the single common
    HPoint, or raises EmptyIntersection when the linear intersection of the
    spans carries no timelike direction.
    """
    if s1.dim != s2.dim:
        raise DimensionMismatch("subspaces in different dimensions")
    B1 = s1.basis.T  # columns span
    B2 = s2.basis.T
    stacked = np.hstack([B1, -B2])
    # nullspace of [B1 | -B2] -> coefficient pairs -> intersection of spans
    _, sv, vt = np.linalg.svd(stacked)
    tol = max(stacked.shape) * (sv[0] if sv.size else 1.0) * 1e-12
    null_mask = np.zeros(vt.shape[0], dtype=bool)
    null_mask[len(sv):] = True
    null_mask[: len(sv)] |= sv < tol
    coeffs = vt[null_mask, : B1.shape[1]]
    if coeffs.shape[0] == 0:
        raise EmptyIntersection("spans intersect only at the origin")
    inter = coeffs @ B1.T  # rows span the intersection in R^{m+1}
    # Euclidean-orthonormalize the row span, then diagonalize the J-Gram
    q, _ = np.linalg.qr(inter.T)
    q = q[:, : np.linalg.matrix_rank(inter, tol=1e-10)]
    J = minkowski_form(s1.dim)
    gram = q.T @ J @ q
    evals, evecs = np.linalg.eigh(gram)
    neg = evals < -1e-10
    if not np.any(neg):
        raise EmptyIntersection("no timelike direction in the intersection")
    t = q @ evecs[:, int(np.argmax(neg))]
    t = t / math.sqrt(-mink_inner(t, t))
    if t[0] < 0:
        t = -t
    k = q.shape[1] - 1
    if k == 0:
        return HPoint(t)
    # complete t to a J-orthonormal basis of the intersection
    rows = [t]
    for j in range(q.shape[1]):
        c = q[:, j].copy()
        c += mink_inner(c, rows[0]) * rows[0]
        for r in rows[1:]:
            c -= mink_inner(c, r) * r
        nrm2 = mink_inner(c, c)
        if nrm2 > COLLAPSE_TOL ** 2:
            rows.append(c / math.sqrt(nrm2))
        if len(rows) == k + 1:
            break
    if len(rows) != k + 1:
        raise DegenerateFrame("could not complete an intersection frame")
    return GeodesicSubspace(np.vstack(rows))


# -- scaled representations for long products -------------------------------

@dataclass(frozen=True)
class ScaledPoint:
    """A point exp(log_scale) * v with O(1) entries in v.

    The represented vector satisfies <x,x> = -1; v itself is only
    relatively accurate, so no norm check is possible (or meaningful) here
    once log_scale is large.
    """

    v: np.ndarray
    log_scale: float

    def __post_init__(self):
        object.__setattr__(self, "v", _frozen(self.v))

    @classmethod
    def from_point(cls, p: HPoint) -> "ScaledPoint":
        c = float(np.max(np.abs(p.v)))
        return cls(p.v / c, math.log(c))

    def to_point(self) -> HPoint:
        """Back to a plain HPoint; only valid at moderate scale."""
        x = self.v * math.exp(self.log_scale)
        return HPoint(x / math.sqrt(max(1e-300, -mink_inner(x, x))))

    def boundary_direction(self) -> BoundaryPoint:
        """The ideal point this (large) point is heading toward."""
        return normalize_null(self.v)


@dataclass(frozen=True)
class ScaledIsometry:
    """A Lorentz matrix exp(log_scale) * R with O(1) entries in R."""

    R: np.ndarray
    log_scale: float

    def __post_init__(self):
        object.__setattr__(self, "R", _frozen(self.R))

    @classmethod
    def identity(cls, m: int) -> "ScaledIsometry":
        return cls(np.eye(m + 1), 0.0)

    @classmethod
    def from_isometry(cls, g: Isometry) -> "ScaledIsometry":
        c = float(np.max(np.abs(g.matrix)))
        return cls(g.matrix / c, math.log(c))

    def compose(self, other: "ScaledIsometry") -> "ScaledIsometry":
        """self after other, renormalized to O(1) entries."""
        P = self.R @ other.R
        c = float(np.max(np.abs(P)))
        return ScaledIsometry(P / c, self.log_scale + other.log_scale + math.log(c))

    def apply(self, p: ScaledPoint) -> ScaledPoint:
        w = self.R @ p.v
        c = float(np.max(np.abs(w)))
        return ScaledPoint(w / c, self.log_scale + p.log_scale + math.log(c))

    def inverse(self) -> "ScaledIsometry":
        """J R^T J at the same log_scale: exact for Lorentz matrices."""
        J = minkowski_form(self.R.shape[0] - 1)
        return ScaledIsometry(J @ self.R.T @ J, self.log_scale)

    def to_isometry(self) -> Isometry:
        return Isometry(self.R * math.exp(self.log_scale))

    def lorentz_residual(self) -> float:
        """max |R^T J R - exp(-2*log_scale) J|, the scale-aware residual.

        For a genuine scaled Lorentz matrix this is cancellation noise of
        size eps; exp(-2*log_scale) underflows to 0 for large scales, which
        is also its correct double-precision value.
        """
        J = minkowski_form(self.R.shape[0] - 1)
        target = math.exp(max(-745.0, -2.0 * self.log_scale)) * J
        return float(np.max(np.abs(self.R.T @ J @ self.R - target)))


def scaled_dist(p: ScaledPoint, q: ScaledPoint) -> float:
    """Distance between scaled points via the log form of acosh."""
    inner = -mink_inner(p.v, q.v)
    if inner <= 0:
        return 0.0  # coincident up to roundoff
    log_ch = p.log_scale + q.log_scale + math.log(inner)
    if log_ch <= _LOG_DIST_CUTOFF:
        return math.acosh(max(1.0, math.exp(log_ch)))
    # acosh(x) = log(2x) - O(1/x^2); the correction is far below eps here
    return math.log(2.0) + log_ch


class IsometryAccumulator:
    """Running product of many isometries under the renormalization policy.

    Entries are rescaled to O(1) on every push; every RENORM_EVERY pushes the
    frame is re-orthonormalized against J, but only while the total entry
    scale is small enough for the Gram entries to carry any digits (see
    reorthonormalize).  Past that scale the product is maintained in
    relatively accurate scaled form, which is all double precision offers.
    """

    def __init__(self, m: int):
        self.current = ScaledIsometry.identity(m)
        self._count = 0

    def push(self, g) -> ScaledIsometry:
        s = g if isinstance(g, ScaledIsometry) else ScaledIsometry.from_isometry(g)
        self.current = self.current.compose(s)
        self._count += 1
        if self._count % RENORM_EVERY == 0:
            self._maybe_fix()
        return self.current

    def _maybe_fix(self):
        cur = self.current
        if cur.log_scale <= _JFIX_LOG_BUDGET:
            fixed = reorthonormalize(cur.R * math.exp(cur.log_scale))
            self.current = ScaledIsometry.from_isometry(fixed)
