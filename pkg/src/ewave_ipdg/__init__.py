"""Space-time discretizations of the elastic wave equation.

Interior penalty dG (SIPG/NIPG/IIPG) and continuous Q_p elements in space,
continuous Galerkin cG(1) in time, plus conditioning and spectrum studies
of the resulting time-slab systems.
"""
from .dg_assembly import DgDofMap, PenaltyConfig, assemble_mass, assemble_stiffness_ip
from .discretization import DgDiscretization, FemDiscretization, make_discretization
from .elasticity import EXPERIMENT_MATERIAL, IsotropicMaterial, manufactured_problem
from .mesh import build_rectangle_mesh, build_unit_square_mesh
from .timeslab import SolverConfig, condensed_matrix, run, time_coefficients

__all__ = [
    "DgDofMap",
    "PenaltyConfig",
    "assemble_mass",
    "assemble_stiffness_ip",
    "DgDiscretization",
    "FemDiscretization",
    "make_discretization",
    "EXPERIMENT_MATERIAL",
    "IsotropicMaterial",
    "manufactured_problem",
    "build_rectangle_mesh",
    "build_unit_square_mesh",
    "SolverConfig",
    "condensed_matrix",
    "run",
    "time_coefficients",
]
__version__ = "0.1.0"
