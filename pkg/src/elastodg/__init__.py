"""Variational gradient-descent DG solver for the 1-D p-system."""

from elastodg.constitutive import ConstitutiveLaw, cubic_law, linear_law
from elastodg.errors import (
    ConstitutiveViolation,
    InvalidArgument,
    NumericalError,
    UnsupportedConfiguration,
)
from elastodg.mesh import DGFunction, DGSpace, Mesh, assemble_matrices, build_mesh, project_l2
from elastodg.variational import GDConfig, StepReport, run_simulation, solve_time_step

__all__ = [
    "ConstitutiveLaw",
    "ConstitutiveViolation",
    "DGFunction",
    "DGSpace",
    "GDConfig",
    "InvalidArgument",
    "Mesh",
    "NumericalError",
    "StepReport",
    "UnsupportedConfiguration",
    "assemble_matrices",
    "build_mesh",
    "cubic_law",
    "linear_law",
    "project_l2",
    "run_simulation",
    "solve_time_step",
]
