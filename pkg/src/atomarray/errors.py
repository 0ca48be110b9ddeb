"""Exception types shared across the package."""


class SingularSeparationError(ValueError):
    """Two dipoles closer than the allowed minimum separation."""


class DegenerateConfigurationError(RuntimeError):
    """Position sampling kept producing overlapping atoms."""


class NearFieldRequestError(ValueError):
    """Far-field evaluation requested below the radiation-zone threshold."""


class OnLightConeError(ValueError):
    """Momentum-space kernel evaluated on the light circle (k_perp ~ 0)."""


class BraggResonanceError(OnLightConeError):
    """A reciprocal-lattice order sits exactly on the light cone."""

    def __init__(self, gvec, message=None):
        self.gvec = tuple(gvec)
        super().__init__(message or f"Bragg order g={self.gvec} on the light cone")


class ResonantSingularityError(RuntimeError):
    """Steady-state solve at (or numerically near) a collective resonance."""

    def __init__(self, message, nearest_eigenvalue=None):
        self.nearest_eigenvalue = nearest_eigenvalue
        super().__init__(message)


class StiffnessError(RuntimeError):
    """Adaptive integrator step size underflowed."""


class DimensionCapError(ValueError):
    """Requested Hilbert-space dimension exceeds the configured cap."""


class PerfectReflectionError(RuntimeError):
    """Transfer matrix singular at r = -1; use scattering-matrix composition."""


class UndefinedG2Error(RuntimeError):
    """g2 undefined because the mean detection rate vanishes."""


class NonConvergenceError(RuntimeError):
    """Iterative steady-state search did not reach the requested residual."""

    def __init__(self, message, residual=None, tail=None):
        self.residual = residual
        self.tail = tail
        super().__init__(message)
