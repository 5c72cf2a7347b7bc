"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Bad preset name, config file, or parameter values."""


class SolverError(RuntimeError):
    """Linear solve failed beyond regularization; carries diagnostics."""

    def __init__(self, message, *, residual_norm=None, cond_estimate=None):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.cond_estimate = cond_estimate


class AssemblyError(RuntimeError):
    """Non-finite entry while assembling the equations of motion."""


class NormAbortError(RuntimeError):
    """Norm drift exceeded the abort threshold during integration."""

    def __init__(self, message, *, t=None, norm2=None, partial_trajectory=None):
        super().__init__(message)
        self.t = t
        self.norm2 = norm2
        self.partial_trajectory = partial_trajectory


class TruncationLeakError(RuntimeError):
    """Population reached the edge of the truncated number-state basis."""

    def __init__(self, message, *, t=None, mode=None, boundary_mass=None,
                 partial_trajectory=None):
        super().__init__(message)
        self.t = t
        self.mode = mode
        self.boundary_mass = boundary_mass
        self.partial_trajectory = partial_trajectory
