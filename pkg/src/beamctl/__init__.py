"""beamctl: boundary-controlled Euler-Bernoulli beam toolkit.

Dissipative Hermite-cubic FEM with Crank-Nicolson time stepping for a
cantilever with tip body and two strictly-positive-real feedback channels,
plus the closed-loop spectral analysis of the continuous operator
(characteristic-determinant roots and eigenvalue asymptotics).
"""

from .errors import (BeamctlError, ConfigError, DuplicateRoot,
                     EigensolverFailure, MeshMismatch, MissingCertificate,
                     NoCertificateFound, NoConvergence, NonFiniteState,
                     NonMinimalRealization, NotSpr, OutOfRange,
                     QuadratureDegreeTooLow, ResolventSingular,
                     SingularResolvent, SingularSystem)
from .model import (BeamModel, CoefficientField, ControlSystem,
                    KypCertificate, SprChannel, ValidationReport, validate)
from .controller import (kyp_residual, kyp_solve, minimal_realization,
                         spr_margin, transfer_eval)
from .fem import (AssembledSystem, Mesh, SymmetricBanded, assemble,
                  basis_eval, control_vector, interpolate_dofs)
from .stepper import (DiscreteState, EnergyCoordinates, SteppingOperator,
                      build_stepper, discrete_norm_sq, dissipation_decrement,
                      ensure_certificates, initial_state)
from .spectral import (SpectralProblem, SpectralRoot, asymptotic_lambda,
                       char_det, discrete_spectrum, eigenfunction_asymptotic,
                       newton_root, transform_tables)
from .harness import (ConvergenceRow, ExperimentConfig, converge_space,
                      converge_time, load_config, simulate, spectrum_study)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
