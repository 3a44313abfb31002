"""Continuous Q_p elasticity matrices with Dirichlet nodes eliminated."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .dg_assembly import _Tabulator, triplets_to_csr
from .elasticity import IsotropicMaterial, ProblemData
from .fe_basis import lagrange_shapes_2d
from .mesh import FaceKind, StructuredQuadMesh


@dataclass(frozen=True)
class CgDofMap:
    """Shared lattice nodes; dof ``2 * node + component``.

    Nodes are numbered x-fastest on the (p nx + 1) x (p ny + 1) lattice.
    """

    mesh: StructuredQuadMesh
    p: int

    @property
    def n_shapes(self) -> int:
        return (self.p + 1) ** 2

    @property
    def lattice(self) -> tuple[int, int]:
        return self.p * self.mesh.nx + 1, self.p * self.mesh.ny + 1

    @property
    def n_nodes(self) -> int:
        lx, ly = self.lattice
        return lx * ly

    @property
    def n_dofs(self) -> int:
        return 2 * self.n_nodes

    @cached_property
    def cell_nodes(self) -> np.ndarray:
        """(n_cells, n_shapes) global node of each local shape."""
        p, nx = self.p, self.mesh.nx
        lx, _ = self.lattice
        cells = np.arange(self.mesh.n_cells)
        ci, cj = cells % nx, cells // nx
        li, lj = np.meshgrid(np.arange(p + 1), np.arange(p + 1))
        li, lj = li.ravel(), lj.ravel()
        return (cj[:, None] * p + lj[None]) * lx + ci[:, None] * p + li[None]

    @cached_property
    def cell_dof_table(self) -> np.ndarray:
        """(n_cells, 2 n_shapes) in the dG local order (component-major)."""
        nodes = self.cell_nodes
        return np.concatenate([2 * nodes, 2 * nodes + 1], axis=1)

    @cached_property
    def node_coordinates(self) -> np.ndarray:
        m = self.mesh
        lx, ly = self.lattice
        xs = np.linspace(m.x_min, m.x_max, lx)
        ys = np.linspace(m.y_min, m.y_max, ly)
        X, Y = np.meshgrid(xs, ys)
        return np.column_stack([X.ravel(), Y.ravel()])

    @cached_property
    def constrained_nodes(self) -> np.ndarray:
        """Lattice nodes lying on Dirichlet faces."""
        flags = np.zeros(self.n_nodes, dtype=bool)
        lx, ly = self.lattice
        grid = np.arange(self.n_nodes).reshape(ly, lx)
        kinds = {}
        for face in self.mesh.boundary_faces():
            side = {(-1.0, 0.0): "left", (1.0, 0.0): "right", (0.0, -1.0): "bottom", (0.0, 1.0): "top"}[face.normal]
            kinds.setdefault(side, set()).add(face.kind)
        edges = {"left": grid[:, 0], "right": grid[:, -1], "bottom": grid[0, :], "top": grid[-1, :]}
        for side, ks in kinds.items():
            if FaceKind.DIRICHLET in ks:
                flags[edges[side]] = True
        return np.flatnonzero(flags)

    @cached_property
    def constrained(self) -> np.ndarray:
        n = self.constrained_nodes
        return np.sort(np.concatenate([2 * n, 2 * n + 1]))

    @cached_property
    def free(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.constrained] = False
        return np.flatnonzero(mask)

    def cell_coefficients(self, vec: np.ndarray) -> np.ndarray:
        """Gather a full global vector into (n_cells, 2, n_shapes)."""
        return np.asarray(vec)[self.cell_dof_table].reshape(self.mesh.n_cells, 2, self.n_shapes)

    def interpolate(self, func) -> np.ndarray:
        return np.asarray(func(self.node_coordinates), dtype=float).ravel()

    def expand(self, free_values: np.ndarray, constrained_values: np.ndarray) -> np.ndarray:
        full = np.zeros(self.n_dofs)
        full[self.free] = free_values
        full[self.constrained] = constrained_values
        return full


@dataclass(frozen=True)
class CgOperators:
    M: sp.csr_matrix  # free x free
    A: sp.csr_matrix
    M_full: sp.csr_matrix
    A_full: sp.csr_matrix
    dofmap: CgDofMap

    @cached_property
    def M_fc(self) -> sp.csr_matrix:
        return self.M_full[self.dofmap.free][:, self.dofmap.constrained]

    @cached_property
    def A_fc(self) -> sp.csr_matrix:
        return self.A_full[self.dofmap.free][:, self.dofmap.constrained]


def assemble_cg(mesh: StructuredQuadMesh, dofmap: CgDofMap, material: IsotropicMaterial) -> CgOperators:
    if dofmap.mesh is not mesh:
        raise ValueError("dof map was built for a different mesh")
    tab = _Tabulator(dofmap.p, material)
    rows, cols, mv, av = [], [], [], []
    for cell in mesh.cells:
        d = dofmap.cell_dof_table[cell.index]
        r, c = np.meshgrid(d, d, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        mv.append(tab.cell_mass(cell.extents).ravel())
        av.append(tab.cell_stiffness(cell.extents).ravel())
    shape = (dofmap.n_dofs, dofmap.n_dofs)
    M_full = triplets_to_csr(rows, cols, mv, shape)
    A_full = triplets_to_csr(rows, cols, av, shape)
    f = dofmap.free
    return CgOperators(M_full[f][:, f].tocsr(), A_full[f][:, f].tocsr(), M_full, A_full, dofmap)


def dirichlet_values(dofmap: CgDofMap, g, t: float) -> np.ndarray:
    """Nodal values of ``g(t, x)`` on the constrained dofs (sorted dof order)."""
    x = dofmap.node_coordinates[dofmap.constrained_nodes]
    vals = np.asarray(g(t, x), dtype=float)  # (nodes, 2)
    full = np.zeros((dofmap.n_nodes, 2))
    full[dofmap.constrained_nodes] = vals
    return full.ravel()[dofmap.constrained]


def assemble_cg_load(mesh: StructuredQuadMesh, dofmap: CgDofMap, problem: ProblemData, t: float) -> np.ndarray:
    """Unreduced load vector: forcing plus Neumann tractions."""
    tab = _Tabulator(dofmap.p, problem.material)
    N = tab.shapes.values
    ext = mesh.cell_extents()
    X = mesh.cell_origins()[:, None, :] + tab.rule2d.points[None] * ext[:, None, :]
    jxw = tab.rule2d.weights[None, :] * (ext[:, 0] * ext[:, 1])[:, None]
    f = np.asarray(problem.forcing(t, X), dtype=float)
    local = np.einsum("cq,cqk,qi->cki", jxw, f, N).reshape(mesh.n_cells, -1)
    b = np.zeros(dofmap.n_dofs)
    np.add.at(b, dofmap.cell_dof_table.ravel(), local.ravel())
    if problem.neumann is not None:
        for face in mesh.faces:
            if face.kind is not FaceKind.NEUMANN:
                continue
            Xf, V, _ = tab.side_tables(face, mesh.cells[face.cell_plus])
            h = np.asarray(problem.neumann(t, Xf), dtype=float)
            contrib = np.einsum("q,qk,qik->i", tab.rule1d.weights * face.measure, h, V)
            np.add.at(b, dofmap.cell_dof_table[face.cell_plus], contrib)
    return b


def reduced_rhs(ops: CgOperators, problem: ProblemData, t: float, *, static: bool = False) -> np.ndarray:
    """Free-dof right-hand side after lifting the Dirichlet data.

    For the dynamic problem the mass coupling to the boundary acceleration
    is moved to the right as well; ``static=True`` drops it.
    """
    dm = ops.dofmap
    load = assemble_cg_load(dm.mesh, dm, problem, t)[dm.free]
    if len(dm.constrained) == 0:
        return load
    g = dirichlet_values(dm, problem.dirichlet, t)
    rhs = load - ops.A_fc @ g
    if not static:
        if problem.dirichlet_dtt is None:
            raise ValueError("dynamic FEM runs with Dirichlet data need its second time derivative")
        rhs -= ops.M_fc @ dirichlet_values(dm, problem.dirichlet_dtt, t)
    return rhs


def cg_evaluate_at(dofmap: CgDofMap, full: np.ndarray, ref_points: np.ndarray) -> np.ndarray:
    sh = lagrange_shapes_2d(dofmap.p, ref_points)
    return np.einsum("cks,qs->cqk", dofmap.cell_coefficients(full), sh.values)
