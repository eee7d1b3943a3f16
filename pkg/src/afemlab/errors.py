"""Exception types raised across the library."""


class AfemError(Exception):
    """Base class for all afemlab errors."""


# -- mesh construction / refinement -------------------------------------

class NonConforming(AfemError):
    """Hanging node, or an edge shared by more than two triangles."""


class DegenerateTriangle(AfemError):
    """Triangle area below the degeneracy tolerance."""


class IncompatibleLabels(AfemError):
    """No terminating refinement-edge chain exists for the given labels."""


class CompletionOverflow(AfemError):
    """Recursive completion exceeded its depth bound."""


class NotARefinement(AfemError):
    """Target mesh is not a refinement of the source mesh."""


# -- finite elements / problems ------------------------------------------

class QuadratureDomainError(AfemError):
    """Coefficient or nonlinearity undefined at a quadrature value."""


class InvalidExponent(AfemError):
    """Power nonlinearity requires an integer exponent >= 2."""


class NonellipticDiffusion(AfemError):
    """Sampled diffusion coefficient is not positive."""


# -- solvers ----------------------------------------------------------------

class NoConvergence(AfemError):
    """Newton iteration reached max_iters without meeting the tolerance."""


class SingularJacobian(AfemError):
    """Linear sub-solver broke down on the Newton correction system."""


class DampingStall(AfemError):
    """Backtracking line search exhausted without sufficient decrease."""


class Breakdown(AfemError):
    """Conjugate gradients detected negative curvature (non-SPD matrix)."""


class MaxIters(AfemError):
    """Iterative linear solver hit its iteration cap."""


# -- verification ----------------------------------------------------------

class MeshTooLarge(AfemError):
    """Dense or reference computation requested on too large a mesh."""
