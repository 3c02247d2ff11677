"""Scale-invariant (Morrey-type) functionals of sampled Navier-Stokes fields.

Evaluate ladders of critical integrals on parabolic cylinders, audit the
classical a priori estimates between them, and turn epsilon-regularity
criteria into threshold verdicts.
"""

__version__ = "0.1.0"

from .errors import (ConfigurationError, ContractError, DomainError, FieldFileError,
                     NSMorreyError, ResolutionError)
from .fields import (Grid4, ParabolicCylinder, ScalarField, VectorField, divergence_residual,
                     gradient, natural_rescale, sample_at)
from .functionals import FunctionalLadder, LadderConfig, build_ladder, evaluate
from .quadrature import CellWeightRule, integrate_ball, integrate_cylinder, mixed_norm

__all__ = [
    "ConfigurationError", "ContractError", "DomainError", "FieldFileError", "NSMorreyError",
    "ResolutionError", "Grid4", "ParabolicCylinder", "ScalarField", "VectorField",
    "divergence_residual", "gradient", "natural_rescale", "sample_at", "FunctionalLadder",
    "LadderConfig", "build_ladder", "evaluate", "CellWeightRule", "integrate_ball",
    "integrate_cylinder", "mixed_norm",
]
