"""Exception types raised by the engine."""


class CTSError(Exception):
    """Base class for all engine errors."""


class DegenerateElement(CTSError):
    pass


class NonphysicalForce(CTSError):
    pass


class MultipleModes(CTSError):
    pass


class InfeasibleSign(CTSError):
    pass


class EigSolverFailure(CTSError):
    pass


class InsufficientModes(CTSError):
    pass


class NewtonDivergence(CTSError):
    pass


class IndivisibleClustering(CTSError, ValueError):
    def __init__(self, p, n_c):
        self.p = p
        self.n_c = n_c
        super().__init__(f"n_c={n_c} does not divide p={p}")


class ZeroForceMember(CTSError):
    pass


class InfeasiblePoint(CTSError):
    def __init__(self, c, cause):
        self.c = c
        self.cause = cause
        super().__init__(f"infeasible trajectory point c={c}: {cause}")


class RangeUncovered(CTSError):
    pass


class ConfigError(CTSError, ValueError):
    pass
