"""dG and continuous spatial discretizations behind one interface for the time loop."""
from __future__ import annotations

from functools import cached_property

import numpy as np

from . import cg_assembly as cg
from . import dg_assembly as dg
from .elasticity import ProblemData
from .fe_basis import lagrange_shapes_2d
from .mesh import StructuredQuadMesh


class DgDiscretization:
    def __init__(self, mesh: StructuredQuadMesh, p: int, problem: ProblemData, penalty: dg.PenaltyConfig):
        self.mesh = mesh
        self.p = p
        self.problem = problem
        self.penalty = penalty
        self.dofmap = dg.DgDofMap(mesh, p)
        self.label = {1: "SIPG", -1: "NIPG", 0: "IIPG"}[penalty.S]

    @cached_property
    def M(self):
        return dg.assemble_mass(self.mesh, self.dofmap, self.problem.material)

    @cached_property
    def A(self):
        return dg.assemble_stiffness_ip(self.mesh, self.dofmap, self.problem.material, self.penalty)

    @property
    def n_dofs(self) -> int:
        return self.dofmap.n_dofs

    def rhs(self, t: float) -> np.ndarray:
        return dg.assemble_dg_rhs(self.mesh, self.dofmap, self.problem, self.penalty, t)

    def initial(self) -> tuple[np.ndarray, np.ndarray]:
        return self.dofmap.interpolate(self.problem.initial_u), self.dofmap.interpolate(self.problem.initial_v)

    def full_u(self, u: np.ndarray, t: float) -> np.ndarray:
        return u

    def full_v(self, v: np.ndarray, t: float) -> np.ndarray:
        return v

    def cell_coefficients(self, full: np.ndarray) -> np.ndarray:
        return self.dofmap.cell_coefficients(full)

    def spectral_matrices(self):
        """(M, A) whose condensed combination is analysed for conditioning."""
        return self.M, self.A


class FemDiscretization:
    """Q_p continuous elements; the time loop runs on the free dofs only.

    Full vectors are recovered by inserting the Dirichlet data (and its time
    derivative for velocities) on the constrained dofs.
    """

    label = "FEM"

    def __init__(self, mesh: StructuredQuadMesh, p: int, problem: ProblemData):
        self.mesh = mesh
        self.p = p
        self.problem = problem
        self.dofmap = cg.CgDofMap(mesh, p)

    @cached_property
    def ops(self) -> cg.CgOperators:
        return cg.assemble_cg(self.mesh, self.dofmap, self.problem.material)

    @property
    def M(self):
        return self.ops.M

    @property
    def A(self):
        return self.ops.A

    @property
    def n_dofs(self) -> int:
        return len(self.dofmap.free)

    def rhs(self, t: float) -> np.ndarray:
        return cg.reduced_rhs(self.ops, self.problem, t)

    def initial(self) -> tuple[np.ndarray, np.ndarray]:
        f = self.dofmap.free
        return self.dofmap.interpolate(self.problem.initial_u)[f], self.dofmap.interpolate(self.problem.initial_v)[f]

    def full_u(self, u: np.ndarray, t: float) -> np.ndarray:
        return self.dofmap.expand(u, cg.dirichlet_values(self.dofmap, self.problem.dirichlet, t))

    def full_v(self, v: np.ndarray, t: float) -> np.ndarray:
        if self.problem.dirichlet_dt is None:
            raise ValueError("velocity reconstruction needs the time derivative of the Dirichlet data")
        return self.dofmap.expand(v, cg.dirichlet_values(self.dofmap, self.problem.dirichlet_dt, t))

    def cell_coefficients(self, full: np.ndarray) -> np.ndarray:
        return self.dofmap.cell_coefficients(full)

    def spectral_matrices(self, constrained: str = "unreduced"):
        """``unreduced`` keeps the boundary nodes; ``reduced`` is the eliminated system."""
        if constrained == "reduced":
            return self.ops.M, self.ops.A
        if constrained == "unreduced":
            return self.ops.M_full, self.ops.A_full
        raise ValueError(f"unknown FEM operator variant {constrained!r}")


def evaluate_cells(disc, full: np.ndarray, ref_points: np.ndarray) -> np.ndarray:
    """Field values at reference points of each cell: (n_cells, n_points, 2)."""
    sh = lagrange_shapes_2d(disc.p, ref_points)
    return np.einsum("cks,qs->cqk", disc.cell_coefficients(full), sh.values)


def make_discretization(scheme: str, mesh, p: int, problem: ProblemData, gamma0: float = 1e6, **penalty_kw):
    scheme = scheme.upper()
    if scheme == "FEM":
        return FemDiscretization(mesh, p, problem)
    return DgDiscretization(mesh, p, problem, dg.PenaltyConfig.for_scheme(scheme, gamma0, **penalty_kw))
