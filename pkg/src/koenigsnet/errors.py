"""Exception types shared across the package."""


class KoenigsError(Exception):
    """Base class for all package-specific errors."""


class MixedAmbient(KoenigsError):
    """Operands live in projective spaces of different dimension."""


class DegenerateQuadruple(KoenigsError):
    """Cross-ratio undefined: repeated points among the four arguments."""


class NotCollinear(KoenigsError):
    """The four points do not lie on a common line."""


class InCenter(KoenigsError):
    """Point to be projected lies in the projection center."""


class NotSupplementary(KoenigsError):
    """Center and target of a central projection do not span the ambient space."""


class RestrictionMismatch(KoenigsError):
    """Two quadrics disagree on the overlap where gluing requires agreement."""


class NotFullDimensional(KoenigsError):
    """Quadric fails the full-dimensionality test required by the operation."""


class UnexpectedSolutionDim(KoenigsError):
    """Glue system solution space is not the expected pencil."""


class DegenerateNet(KoenigsError):
    """Net violates a non-degeneracy requirement (coinciding or collinear vertices)."""


class StencilOutOfRange(KoenigsError):
    """Requested transform or invariant needs vertices outside the stored patch."""


class IndexOutOfRange(KoenigsError):
    pass


class DegenerateFace(KoenigsError):
    """Face is not a proper planar quadrilateral."""


class VertexContact(KoenigsError):
    """Contact point coincides with a face vertex."""


class OffEdge(KoenigsError):
    """Prescribed contact point does not lie on the required edge line."""


class FitFailed(KoenigsError):
    """Quadric fitting system has no one-dimensional solution space."""


class NotExtensive(KoenigsError):
    pass


class LiftFailed(KoenigsError):
    """Extensive lift did not reach the required joint dimension within budget."""


class YSelectionFailed(KoenigsError):
    """No valid pencil-selection point found during inscribed-quadric induction."""


class NotGeneric(KoenigsError):
    """Grid fails a genericity requirement (dimension counts or Laplace degeneracy)."""


class MeetEmpty(KoenigsError):
    pass


class NotInParameterSpace(KoenigsError):
    """Seed point for grid extension lies outside the prescribed parameter space."""


class TangentConstructionFailed(KoenigsError):
    """Second tangent from an external point to a conic could not be built."""


class WindowTooSmall(KoenigsError):
    """Stored patch is too small for the requested operation."""


class NotGenericPair(KoenigsError):
    """Pair of curves violates the joint genericity condition."""


class NotAutoconjugate(KoenigsError):
    """Curve osculating spaces are not contained in the reference quadric."""


class GenerationFailed(KoenigsError):
    """Randomized generator exhausted its retry budget."""


class VerifyFailed(KoenigsError):
    """Constructed object fails its own post-construction verification."""


class HypothesisFailed(KoenigsError):
    """Input does not satisfy the hypotheses of the theorem being checked."""
