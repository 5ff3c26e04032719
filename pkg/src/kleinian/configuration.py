"""Orthogonal plane configurations in H^{2n} with loxodromic generators.

Factor j of the product owns the coordinate pair (e_{2j-1}, e_{2j}); its two
axes are the coordinate geodesics through O in those directions.  A plane
label is a bit-string b: the totally geodesic H^n spanned by the axes
{axis(j, b_j)}.  All 2^n planes meet pairwise orthogonally and intersect
jointly in the single point O.

Generator a_j translates by ell along axis(j, 0); b_j translates by
ell * phi along axis(j, 1), phi the golden ratio, so that no two generator
powers share a translation length.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import words as W
from .errors import (
    InvalidParameters,
    OrthogonalityViolation,
    SeparationViolation,
    UnknownPlane,
)
from .hyperboloid import (
    Geodesic,
    GeodesicSubspace,
    HPoint,
    Isometry,
    angle_at,
    axis_geodesic,
    base_point,
    dist,
    image_endpoint,
    normalize_null,
    null_pair,
    separation_of_null_pairs,
    subspace_intersection,
    translation_along,
)

PHI = (1.0 + math.sqrt(5.0)) / 2.0

THREADS_ENV = "KLEINIAN_THREADS"


def constant_L() -> float:
    """The separation constant 2*acosh(2*sqrt(2)) + 1."""
    return 2.0 * math.acosh(2.0 * math.sqrt(2.0)) + 1.0


def quasi_constants() -> tuple[float, float]:
    """(A, B) = (18L, 4 + 12L): the quasi-geodesic comparison constants."""
    L = constant_L()
    return 18.0 * L, 4.0 + 12.0 * L


def plane_label(bits: tuple[int, ...]) -> str:
    return "".join(str(b) for b in bits)


def parse_plane(label: str, n: int) -> tuple[int, ...]:
    if len(label) != n or any(ch not in "01" for ch in label):
        raise UnknownPlane(f"plane label {label!r} is not an {n}-bit string")
    return tuple(int(ch) for ch in label)


@dataclass(frozen=True)
class Configuration:
    """Immutable plane/axis/generator data for one value of (n, ell)."""

    n: int
    ell: float
    base: HPoint
    planes: dict[tuple[int, ...], GeodesicSubspace]
    axes: dict[tuple[int, int], Geodesic]
    generators: dict[tuple[int, int], Isometry]
    L: float

    @property
    def dim(self) -> int:
        return 2 * self.n

    def axis(self, j: int, v: int) -> Geodesic:
        return self.axes[(j, v)]

    def plane(self, bits) -> GeodesicSubspace:
        key = tuple(bits)
        if key not in self.planes:
            raise UnknownPlane(f"no plane {plane_label(key)}")
        return self.planes[key]

    def generator(self, letter: W.Letter) -> Isometry:
        g = self.generators[(letter.factor, letter.gen)]
        return g if letter.sign > 0 else g.inverse()

    def generator_length(self, gen: int) -> float:
        return self.ell if gen == 0 else self.ell * PHI

    def word_isometry(self, w: W.Word) -> Isometry:
        """Matrix product of the letters, left to right action order."""
        m = Isometry(np.eye(self.dim + 1))
        for letter in w.letters:
            m = m.compose(self.generator(letter))
        return m


def build_configuration(n: int, ell: float | None = None) -> Configuration:
    """Coordinate realization in H^{2n}; default ell = 6L.

    Any positive ell is constructible; separation against the 3L bound is
    the job of validate_configuration, which small ell will fail.
    """
    L = constant_L()
    if ell is None:
        ell = 6.0 * L
    if n < 1 or not math.isfinite(ell) or ell <= 0:
        raise InvalidParameters(f"need n >= 1 and ell > 0, got n={n} ell={ell}")
    m = 2 * n
    O = base_point(m)
    axes = {}
    for j in range(1, n + 1):
        axes[(j, 0)] = axis_geodesic(m, 2 * j - 1)
        axes[(j, 1)] = axis_geodesic(m, 2 * j)
    planes = {}
    for bits_int in range(2 ** n):
        bits = tuple((bits_int >> (n - 1 - j)) & 1 for j in range(n))
        rows = np.zeros((n + 1, m + 1))
        rows[0, 0] = 1.0
        for j in range(1, n + 1):
            rows[j, 2 * j - 1 + bits[j - 1]] = 1.0
        planes[bits] = GeodesicSubspace(rows)
    gens = {}
    for j in range(1, n + 1):
        gens[(j, 0)] = translation_along(axes[(j, 0)], ell)
        gens[(j, 1)] = translation_along(axes[(j, 1)], ell * PHI)
    return Configuration(n=n, ell=float(ell), base=O, planes=planes,
                         axes=axes, generators=gens, L=L)


@dataclass(frozen=True)
class ValidationReport:
    n: int
    ell: float
    word_depth: int
    words_tested: int
    min_separation: float
    min_word: str
    threshold: float
    orthogonality_residual: float
    single_point_residual: float
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _endpoints_match(e1, e2, tol: float = 1e-9) -> bool:
    """Ideal endpoint pairs coincide as sets."""
    def close(x, y):
        return float(np.linalg.norm(x - y)) < tol

    return (close(e1[0], e2[0]) and close(e1[1], e2[1])) or \
           (close(e1[0], e2[1]) and close(e1[1], e2[0]))


def resolve_threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def validate_configuration(c: Configuration, word_depth: int = 3,
                           threads: int | None = None) -> ValidationReport:
    """Check the separation hypothesis to finite word depth.

    For every axis g and every nontrivial normal-form word h of length <=
    word_depth with h(g) != g, the distance between g and h(g) must be at
    least 3L.  Also reports the worst pairwise plane-orthogonality residual
    at O and how far the joint plane intersection sits from O.

    This is a desk-scale check, not a proof; the report records the depth.
    """
    if word_depth < 1:
        raise InvalidParameters("word_depth must be >= 1")
    threshold = 3.0 * c.L
    all_words = [w for w in W.enumerate_reduced(c.n, word_depth) if w.letters]
    axis_keys = sorted(c.axes)
    # null endpoint lifts move through the matrix without cancellation,
    # unlike the (base, dir) form of a far translate
    lifts = {k: null_pair(c.axes[k]) for k in axis_keys}
    ends = {k: [normalize_null(P).dir, normalize_null(Q).dir]
            for k, (P, Q) in lifts.items()}

    def strip_stabilizer(w: W.Word, key: tuple[int, int]) -> W.Word:
        # leading/trailing letters translating along this very axis fix it
        # setwise; stripping them is exact and removes the one alignment
        # that would cancel the repelling endpoint out of double precision
        ls = list(w.letters)
        while ls and (ls[0].factor, ls[0].gen) == key:
            ls.pop(0)
        while ls and (ls[-1].factor, ls[-1].gen) == key:
            ls.pop()
        return W.Word(tuple(ls))

    def check(w: W.Word) -> tuple[float, str]:
        worst = (math.inf, "")
        for key in axis_keys:
            P, Q = lifts[key]
            h = strip_stabilizer(w, key)
            if not h.letters:
                continue  # pure power along this axis: fixes it
            M = c.word_isometry(h).matrix
            imgP = image_endpoint(M, P)
            imgQ = image_endpoint(M, Q)
            if imgP is None or imgQ is None:
                sep = 0.0  # endpoint numerically pinned: treat as touching
            elif _endpoints_match(ends[key], [imgP.dir, imgQ.dir]):
                continue  # the word maps this axis to itself
            else:
                sep = separation_of_null_pairs(P, Q, M @ P, M @ Q)
            if sep < worst[0]:
                worst = (sep, str(w))
        return worst

    nthreads = resolve_threads(threads)
    if nthreads > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            results = list(pool.map(check, all_words))
    else:
        results = [check(w) for w in all_words]
    # deterministic min-reduce regardless of executor scheduling
    min_separation, min_word = min(
        results, key=lambda r: (r[0], r[1]), default=(math.inf, "")
    )

    ortho = _orthogonality_residual(c)
    single = _single_point_residual(c)
    if ortho > 1e-8:
        raise OrthogonalityViolation(f"plane orthogonality residual {ortho:.3e}")
    passed = min_separation >= threshold
    report = ValidationReport(
        n=c.n, ell=c.ell, word_depth=word_depth, words_tested=len(all_words),
        min_separation=min_separation, min_word=min_word, threshold=threshold,
        orthogonality_residual=ortho, single_point_residual=single,
        passed=passed,
    )
    if not passed:
        raise SeparationViolation(
            f"word {min_word} moves an axis only {min_separation:.6f} "
            f"< 3L = {threshold:.6f}", report)
    return report


def _orthogonality_residual(c: Configuration) -> float:
    """Worst |cos angle| at O between tangent directions of different planes,
    measured off the pairwise intersection."""
    worst = 0.0
    labels = sorted(c.planes)
    for i, b1 in enumerate(labels):
        for b2 in labels[i + 1:]:
            B1 = c.planes[b1].basis[1:]
            B2 = c.planes[b2].basis[1:]
            common = {j for j in range(c.n) if b1[j] == b2[j]}
            for r1 in range(c.n):
                for r2 in range(c.n):
                    if r1 == r2 and r1 in common:
                        continue  # same axis direction, shared by both planes
                    a = angle_at(c.base, B1[r1], B2[r2])
                    worst = max(worst, abs(math.cos(a)))
    return worst


def _single_point_residual(c: Configuration) -> float:
    inter = None
    for bits in sorted(c.planes):
        inter = c.planes[bits] if inter is None else _meet(inter, c.planes[bits])
        if isinstance(inter, HPoint):
            break
    if not isinstance(inter, HPoint):
        return math.inf
    return dist(inter, c.base)


def _meet(a, b):
    if isinstance(a, HPoint):
        return a
    return subspace_intersection(a, b)


# -- serialization ----------------------------------------------------------

def generator_name(j: int, gen: int) -> str:
    return f"{W.GEN_CHARS[gen]}{j}"


def to_json_dict(c: Configuration) -> dict:
    gens = {}
    for (j, g), iso in sorted(c.generators.items()):
        gens[generator_name(j, g)] = [list(row) for row in iso.matrix]
    return {"n": c.n, "ell": c.ell, "L": c.L, "generators": gens}


def save_configuration(c: Configuration, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(to_json_dict(c), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_configuration(path: str) -> Configuration:
    """Rebuild from a saved file; stored matrices are checked bit-exact.

    Construction is deterministic from (n, ell), so the matrices are
    redundant, but a mismatch means the file was edited or produced by a
    different build and is rejected rather than silently rebuilt.
    """
    with open(path) as fh:
        data = json.load(fh)
    try:
        c = build_configuration(int(data["n"]), float(data["ell"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidParameters(f"malformed configuration file: {exc}") from exc
    for (j, g), iso in c.generators.items():
        stored = np.array(data.get("generators", {}).get(generator_name(j, g)))
        if stored.shape != iso.matrix.shape or not np.array_equal(stored, iso.matrix):
            raise InvalidParameters(
                f"stored matrix for {generator_name(j, g)} does not match "
                f"the deterministic build for n={c.n}, ell={c.ell!r}")
    return c
