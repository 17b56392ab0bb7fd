"""Exception types shared across the library."""


class CmaflowError(Exception):
    """Base class for all library errors."""


class DegenerateDomain(CmaflowError):
    """The sublevel set {rho < 0} contains no lattice point."""


class GridTooCoarse(CmaflowError):
    """The grid resolves the domain but has no deep-interior node."""


class ProjectionDiverged(CmaflowError):
    """Newton projection onto {rho = 0} did not converge."""


class NotStronglyPseudoconvex(CmaflowError):
    def __init__(self, point, proxy):
        self.point = point
        self.proxy = proxy
        super().__init__(
            f"complex Hessian proxy {proxy:.3e} is not positive at {point}"
        )


class StencilOutOfDomain(CmaflowError):
    """A stencil probe left the set of known node values."""


class NonFiniteUpdate(CmaflowError):
    """A time step produced NaN/Inf values (CFL violation)."""


class DegenerateDensity(CmaflowError):
    """f + eps_f vanishes somewhere, the log right-hand side is undefined."""


class MaxStepsExceeded(CmaflowError):
    pass


class UnboundedData(CmaflowError):
    pass


class BarrierSearchFailed(CmaflowError):
    """The doubling search for a barrier constant hit its cap."""


class NoWitness(CmaflowError):
    """A superbarrier was requested without an admissibility witness."""


class NoWitnessFound(CmaflowError):
    def __init__(self, residual_mass, c_cap):
        self.residual_mass = residual_mass
        self.c_cap = c_cap
        super().__init__(
            f"witness search exhausted (C cap {c_cap}, residual zero-set mass "
            f"{residual_mass:.3e})"
        )


class CoverIncomplete(CmaflowError):
    """The supplied balls do not cover the deep-interior nodes."""


class NotConverged(CmaflowError):
    pass


class ConvergenceStalled(CmaflowError):
    pass


class InsufficientData(CmaflowError):
    pass


class InputsNotSubSuper(CmaflowError):
    """comparison_test received inputs failing the sub/supersolution sweeps."""


class NoDeltaFound(CmaflowError):
    pass
