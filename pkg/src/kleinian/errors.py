"""Exception types shared across the package.

Everything raised on purpose derives from :class:`KleinianError`, so callers
can catch one base class at CLI boundaries and map it to an exit code.
"""


class KleinianError(Exception):
    """Base class for all deliberate failures in this package."""


# -- linear algebra / model geometry ---------------------------------------

class DimensionMismatch(KleinianError):
    """Operands live in different ambient dimensions."""


class ZeroTangent(KleinianError):
    """An angle was requested with a zero tangent vector."""


class DegenerateFrame(KleinianError):
    """Gram-Schmidt collapsed a basis vector below the rescue threshold."""


class IntersectingGeodesics(KleinianError):
    """No common perpendicular: the geodesics cross."""


class AsymptoticGeodesics(KleinianError):
    """No common perpendicular: the geodesics share an ideal endpoint."""


class EmptyIntersection(KleinianError):
    """Subspace spans share no timelike direction, so they miss the model."""


# -- configuration ----------------------------------------------------------

class InvalidParameters(KleinianError):
    """Configuration parameters outside the constructible range."""


class SeparationViolation(KleinianError):
    """A validation word moved the basepoint less than the required bound."""


class OrthogonalityViolation(KleinianError):
    """A junction-plane pair failed the orthogonality certificate."""


# -- words ------------------------------------------------------------------

class EmptyWord(KleinianError):
    """Operation undefined on the empty word."""


# -- path building ----------------------------------------------------------

class UnexpectedIntersectionDim(KleinianError):
    """Consecutive carriers meet in dimension > 1; configuration violation."""


class PerpendicularTooShort(KleinianError):
    """A surgery perpendicular came out shorter than the separation bound."""


class NoConvergence(KleinianError):
    """Fixed-point iteration failed to settle (elliptic or near-elliptic)."""


class TriangleViolation(KleinianError):
    """A sampled pair measured farther apart than the path between them."""


# -- limit set --------------------------------------------------------------

class DepthTooLarge(KleinianError):
    """Word enumeration would exceed the configured cap."""


class UnknownPlane(KleinianError):
    """A plane label does not index a junction plane of the configuration."""


class PoleCollision(KleinianError):
    """A point to project coincides with the stereographic pole."""


class StreamEventuallyConstant(KleinianError):
    """An itinerary stream stopped changing planes before the horizon."""


# -- complexes --------------------------------------------------------------

class SizeCap(KleinianError):
    """Simplex count exceeded the configured cap."""


class WrongDimension(KleinianError):
    """Homological degree outside the complex's dimension range."""


# -- CAT(0) boundary --------------------------------------------------------

class NoActiveFactors(KleinianError):
    """A product ray needs at least one factor with positive speed."""
