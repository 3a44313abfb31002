"""Interior penalty dG mass/stiffness matrices and right-hand sides for elasticity.

Each cell carries ``2 (p+1)^2`` coefficients ordered component-major:
local index ``c * (p+1)^2 + i`` is shape ``i`` times unit vector ``e_c``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .elasticity import IsotropicMaterial, ProblemData, stress
from .fe_basis import gauss_legendre, lagrange_shapes_2d, tensor_rule
from .mesh import Face, FaceKind, StructuredQuadMesh

SCHEMES = {"SIPG": 1, "NIPG": -1, "IIPG": 0}


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty tuning factor gamma0 and consistency parameter S.

    ``normal_convention`` selects how the minus-side traction enters the face
    average: "shared" evaluates both tractions with the plus normal (the
    consistent average), "own" uses each side's outward normal, so
    interior averages collapse to half a traction jump.
    """

    gamma0: float = 1e6
    S: int = 1
    normal_convention: str = "shared"

    def __post_init__(self):
        if self.S not in (1, -1, 0):
            raise ValueError(f"consistency parameter S must be 1, -1 or 0, got {self.S}")
        if not self.gamma0 > 0:
            raise ValueError(f"gamma0 must be positive, got {self.gamma0}")
        if self.normal_convention not in ("shared", "own"):
            raise ValueError(f"unknown normal convention {self.normal_convention!r}")

    @classmethod
    def for_scheme(cls, scheme: str, gamma0: float, **kw) -> "PenaltyConfig":
        return cls(gamma0=gamma0, S=SCHEMES[scheme.upper()], **kw)


@dataclass(frozen=True)
class DgDofMap:
    mesh: StructuredQuadMesh
    p: int

    @property
    def n_shapes(self) -> int:
        return (self.p + 1) ** 2

    @property
    def dofs_per_cell(self) -> int:
        return 2 * self.n_shapes

    @property
    def n_dofs(self) -> int:
        return self.mesh.n_cells * self.dofs_per_cell

    def cell_dofs(self, cell: int) -> np.ndarray:
        k = self.dofs_per_cell
        return np.arange(cell * k, (cell + 1) * k)

    def cell_coefficients(self, vec: np.ndarray) -> np.ndarray:
        """View a global vector as (n_cells, 2, n_shapes)."""
        return np.asarray(vec).reshape(self.mesh.n_cells, 2, self.n_shapes)

    @cached_property
    def nodes(self) -> np.ndarray:
        """Physical nodal points, shape (n_cells, n_shapes, 2)."""
        ref = lagrange_shapes_2d(self.p, np.zeros((1, 2))).nodes
        return self.mesh.cell_origins()[:, None, :] + ref[None] * self.mesh.cell_extents()[:, None, :]

    def interpolate(self, func) -> np.ndarray:
        """Nodal interpolant of ``func(x) -> (..., 2)``."""
        vals = np.asarray(func(self.nodes))  # (cells, shapes, 2)
        return np.ascontiguousarray(np.swapaxes(vals, 1, 2)).ravel()


# --- trace operators -------------------------------------------------------


def jump0(plus, minus=None):
    """[v]_0: v+ - v- on interior faces, v+ on boundary faces."""
    plus = np.asarray(plus, dtype=float)
    return plus if minus is None else plus - np.asarray(minus, dtype=float)


def jump(plus, minus=None, g=None):
    """[v]: v+ - v- on interior faces, v+ - g on Dirichlet faces."""
    if minus is not None and g is not None:
        raise ValueError("interior faces take a minus trace, boundary faces take Dirichlet data")
    if minus is not None:
        return np.asarray(plus, dtype=float) - np.asarray(minus, dtype=float)
    return np.asarray(plus, dtype=float) - (0.0 if g is None else np.asarray(g, dtype=float))


def average_traction(t_plus, t_minus=None, boundary: bool = False):
    """{t_F}: tractions given w.r.t. each side's own outward normal.

    The minus traction is flipped onto the plus normal before averaging, so
    for a continuous stress field the result equals ``t_plus``.
    """
    t_plus = np.asarray(t_plus, dtype=float)
    if boundary:
        if t_minus is not None:
            raise ValueError("boundary faces have no minus trace")
        return t_plus
    if t_minus is None:
        raise ValueError("interior faces need a minus trace")
    return 0.5 * (t_plus - np.asarray(t_minus, dtype=float))


# --- local tabulation --------------------------------------------------------


def _vector_basis(values: np.ndarray, grads: np.ndarray):
    """Scalar tables (nq, ns) / (nq, ns, 2) -> vector (nq, 2ns, 2) / (nq, 2ns, 2, 2)."""
    nq, ns = values.shape
    V = np.zeros((nq, 2 * ns, 2))
    G = np.zeros((nq, 2 * ns, 2, 2))
    for c in range(2):
        V[:, c * ns:(c + 1) * ns, c] = values
        G[:, c * ns:(c + 1) * ns, c, :] = grads
    return V, G


def penalty_value(face: Face, material: IsotropicMaterial, config: PenaltyConfig, p: int) -> float:
    """gamma_F = gamma0 * (lambda + 2 mu) * p (p+1) / h_F."""
    return config.gamma0 * material.p_modulus * p * (p + 1) / face.h_F


class _Tabulator:
    """Caches reference tables; cell/face matrices depend only on geometry sizes."""

    def __init__(self, p: int, material: IsotropicMaterial):
        self.p = p
        self.material = material
        self.rule1d = gauss_legendre(p + 1)
        self.rule2d = tensor_rule(self.rule1d)
        self.shapes = lagrange_shapes_2d(p, self.rule2d)
        self._cell_cache: dict = {}

    def cell_mass(self, extents) -> np.ndarray:
        key = ("M", *np.round(extents, 14))
        if key not in self._cell_cache:
            jxw = self.rule2d.weights * extents[0] * extents[1]
            N = self.shapes.values
            m = self.material.rho * np.einsum("q,qi,qj->ij", jxw, N, N)
            m = 0.5 * (m + m.T)
            self._cell_cache[key] = np.kron(np.eye(2), m)
        return self._cell_cache[key]

    def cell_stiffness(self, extents) -> np.ndarray:
        key = ("A", *np.round(extents, 14))
        if key not in self._cell_cache:
            jxw = self.rule2d.weights * extents[0] * extents[1]
            _, G = _vector_basis(self.shapes.values, self.shapes.gradients / np.asarray(extents))
            sig = stress(self.material, G)
            eps = 0.5 * (G + np.swapaxes(G, -1, -2))
            k = np.einsum("q,qjkl,qikl->ij", jxw, sig, eps)
            self._cell_cache[key] = 0.5 * (k + k.T)
        return self._cell_cache[key]

    def side_tables(self, face: Face, cell) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Face quadrature points, and vector values/gradients of ``cell``'s basis there."""
        X = face.points(self.rule1d.points)
        xi = (X - np.asarray(cell.origin)) / np.asarray(cell.extents)
        sh = lagrange_shapes_2d(self.p, xi)
        V, G = _vector_basis(sh.values, sh.gradients / np.asarray(cell.extents))
        return X, V, G


@dataclass
class FaceBlocks:
    """Per-face couplings; ``blocks[(r, s)]`` couples test side r to trial side s (0=plus, 1=minus)."""

    cells: tuple[int, ...]
    blocks: dict = field(default_factory=dict)
    penalty: dict = field(default_factory=dict)


def face_blocks(
    face: Face,
    mesh: StructuredQuadMesh,
    tab: _Tabulator,
    config: PenaltyConfig,
) -> FaceBlocks:
    n = np.asarray(face.normal)
    jxw = tab.rule1d.weights * face.measure
    gamma = penalty_value(face, tab.material, config, tab.p)
    cells = (face.cell_plus,) if face.cell_minus is None else (face.cell_plus, face.cell_minus)
    interior = face.cell_minus is not None
    avg = 0.5 if interior else 1.0
    J, W = [], []
    for side, c in enumerate(cells):
        _, V, G = tab.side_tables(face, mesh.cells[c])
        sign = 1.0 if side == 0 else -1.0
        n_side = n if (side == 0 or config.normal_convention == "shared") else -n
        J.append(sign * V)
        W.append(avg * stress(tab.material, G) @ n_side)
    fb = FaceBlocks(cells)
    m = len(cells)
    C = {(r, s): np.einsum("q,qjk,qik->ij", jxw, W[s], J[r]) for r in range(m) for s in range(m)}
    for r in range(m):
        for s in range(r, m):
            P = np.einsum("q,qik,qjk->ij", jxw, J[r], J[s])
            if s == r:
                P = 0.5 * (P + P.T)
            fb.penalty[(r, s)] = P
            if s != r:
                fb.penalty[(s, r)] = P.T
    for (r, s), Crs in C.items():
        # grouped so that S=1 blocks are transposes of each other bit for bit
        fb.blocks[(r, s)] = gamma * fb.penalty[(r, s)] - (Crs + config.S * C[(s, r)].T)
    return fb


class _Triplets:
    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []

    def add(self, rdofs, cdofs, block):
        r, c = np.meshgrid(rdofs, cdofs, indexing="ij")
        self.rows.append(r.ravel())
        self.cols.append(c.ravel())
        self.vals.append(np.asarray(block).ravel())

    def tocsr(self, n: int, m: int | None = None) -> sp.csr_matrix:
        return triplets_to_csr(self.rows, self.cols, self.vals, (n, n if m is None else m))


def triplets_to_csr(rows, cols, vals, shape) -> sp.csr_matrix:
    """Sum duplicates in insertion order, so the result is reproducible bit for bit.

    ``rows``/``cols``/``vals`` are flat arrays or lists of chunks.
    """
    r, c, v = (np.concatenate(a) if isinstance(a, list) and a else np.asarray(a).ravel() for a in (rows, cols, vals))
    if r.size == 0:
        return sp.csr_matrix(shape)
    key = r.astype(np.int64) * shape[1] + c
    order = np.argsort(key, kind="stable")
    key, v = key[order], v[order]
    starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    summed = np.add.reduceat(v, starts)
    ukey = key[starts]
    return sp.csr_matrix((summed, (ukey // shape[1], ukey % shape[1])), shape=shape)


def _check(mesh: StructuredQuadMesh, dofmap: DgDofMap):
    if dofmap.mesh is not mesh:
        raise ValueError("dof map was built for a different mesh")


def assemble_mass(mesh: StructuredQuadMesh, dofmap: DgDofMap, material: IsotropicMaterial) -> sp.csr_matrix:
    _check(mesh, dofmap)
    tab = _Tabulator(dofmap.p, material)
    trip = _Triplets()
    for cell in mesh.cells:
        d = dofmap.cell_dofs(cell.index)
        trip.add(d, d, tab.cell_mass(cell.extents))
    return trip.tocsr(dofmap.n_dofs)


def _assemble_faces(mesh, dofmap, material, config, *, volume: bool, face_part: str):
    tab = _Tabulator(dofmap.p, material)
    trip = _Triplets()
    if volume:
        for cell in mesh.cells:
            d = dofmap.cell_dofs(cell.index)
            trip.add(d, d, tab.cell_stiffness(cell.extents))
    cache: dict = {}
    for face in mesh.faces:
        if face.kind is FaceKind.NEUMANN:
            continue
        # matrices depend on geometry sizes and orientation only
        key = (
            face.kind,
            face.normal,
            round(face.measure, 14),
            round(face.h_F, 14),
            tuple(np.round(mesh.cells[face.cell_plus].extents, 14)),
        )
        fb = cache.get(key)
        if fb is None:
            fb = cache[key] = face_blocks(face, mesh, tab, config)
        cells = (face.cell_plus,) if face.cell_minus is None else (face.cell_plus, face.cell_minus)
        store = fb.blocks if face_part == "full" else fb.penalty
        scale = 1.0 if face_part == "full" else penalty_value(face, material, config, dofmap.p)
        for (r, s), B in store.items():
            trip.add(dofmap.cell_dofs(cells[r]), dofmap.cell_dofs(cells[s]), scale * B)
    return trip.tocsr(dofmap.n_dofs)


def assemble_stiffness_ip(
    mesh: StructuredQuadMesh,
    dofmap: DgDofMap,
    material: IsotropicMaterial,
    config: PenaltyConfig,
) -> sp.csr_matrix:
    """Stiffness matrix of the interior penalty form with homogeneous Dirichlet jumps."""
    _check(mesh, dofmap)
    if config.S not in (1, -1, 0):
        raise ValueError(f"consistency parameter S must be 1, -1 or 0, got {config.S}")
    return _assemble_faces(mesh, dofmap, material, config, volume=True, face_part="full")


def assemble_penalty(
    mesh: StructuredQuadMesh,
    dofmap: DgDofMap,
    material: IsotropicMaterial,
    config: PenaltyConfig,
) -> sp.csr_matrix:
    """Pure penalty part: sum over faces of gamma_F * int [u].[w]_0."""
    _check(mesh, dofmap)
    return _assemble_faces(mesh, dofmap, material, config, volume=False, face_part="penalty")


def assemble_dg_rhs(
    mesh: StructuredQuadMesh,
    dofmap: DgDofMap,
    problem: ProblemData,
    config: PenaltyConfig,
    t: float,
) -> np.ndarray:
    """Load vector at time t: forcing, Dirichlet lifting and Neumann tractions."""
    _check(mesh, dofmap)
    material = problem.material
    tab = _Tabulator(dofmap.p, material)
    N = tab.shapes.values
    origins = mesh.cell_origins()
    ext = mesh.cell_extents()
    X = origins[:, None, :] + tab.rule2d.points[None] * ext[:, None, :]
    jxw = tab.rule2d.weights[None, :] * (ext[:, 0] * ext[:, 1])[:, None]
    f = np.asarray(problem.forcing(t, X), dtype=float)
    b = np.einsum("cq,cqk,qi->cki", jxw, f, N)

    for face in mesh.faces:
        if face.kind is FaceKind.INTERIOR:
            continue
        cell = mesh.cells[face.cell_plus]
        Xf, V, G = tab.side_tables(face, cell)
        jw = tab.rule1d.weights * face.measure
        if face.kind is FaceKind.DIRICHLET:
            g = np.asarray(problem.dirichlet(t, Xf), dtype=float)
            gamma = penalty_value(face, material, config, dofmap.p)
            T = stress(material, G) @ np.asarray(face.normal)
            contrib = np.einsum("q,qk,qik->i", jw, g, gamma * V - config.S * T)
        elif problem.neumann is not None:
            h = np.asarray(problem.neumann(t, Xf), dtype=float)
            contrib = np.einsum("q,qk,qik->i", jw, h, V)
        else:
            continue
        b[face.cell_plus] += contrib.reshape(2, -1)
    return b.ravel()


def evaluate_at(dofmap: DgDofMap, vec: np.ndarray, ref_points: np.ndarray) -> np.ndarray:
    """Field values at reference points of every cell: (n_cells, n_points, 2)."""
    sh = lagrange_shapes_2d(dofmap.p, ref_points)
    return np.einsum("cks,qs->cqk", dofmap.cell_coefficients(vec), sh.values)
