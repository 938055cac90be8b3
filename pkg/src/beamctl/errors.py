"""Exception and warning types shared across the package."""


class BeamctlError(Exception):
    """Base class for all package errors."""


class ConfigError(BeamctlError):
    """Configuration file is missing keys or has malformed values."""


class OutOfRange(BeamctlError):
    """A dof index or coordinate is outside its valid range."""


class QuadratureDegreeTooLow(BeamctlError):
    """Coefficient polynomial degree exceeds the quadrature exactness budget."""

    def __init__(self, message, required_points):
        super().__init__(message)
        self.required_points = required_points


class SingularResolvent(BeamctlError):
    """(sI - A) is numerically singular at the requested point."""


class ResolventSingular(SingularResolvent):
    """lambda coincides with a controller-matrix eigenvalue."""


class NotSpr(BeamctlError):
    """The sampled real part of the transfer function is not strictly positive."""


class NoCertificateFound(BeamctlError):
    """No (P, q, eps) certificate found within tolerance on the eps grid."""


class MissingCertificate(BeamctlError):
    """An energy/dissipation quantity was requested without a certificate."""


class SingularSystem(BeamctlError):
    """The time-stepping system matrix could not be factored."""


class NonFiniteState(BeamctlError):
    """A state vector contains NaN or Inf entries."""


class MeshMismatch(BeamctlError):
    """Meshes of a convergence study do not nest."""


class NoConvergence(BeamctlError):
    """Newton iteration failed to converge within the iteration budget."""


class DuplicateRoot(BeamctlError):
    """A root search landed on an already-registered root."""


class EigensolverFailure(BeamctlError):
    """Dense eigenvalue computation failed."""


class NonMinimalRealization(UserWarning):
    """State-space realization is not minimal; reduction path taken."""
