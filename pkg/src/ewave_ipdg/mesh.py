"""Structured axis-aligned quadrilateral meshes of rectangles."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

SIDES = ("left", "right", "bottom", "top")


class FaceKind(enum.Enum):
    INTERIOR = "interior"
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


@dataclass(frozen=True)
class Cell:
    index: int
    origin: tuple[float, float]
    extents: tuple[float, float]

    @property
    def diameter(self) -> float:
        return math.hypot(*self.extents)

    @property
    def measure(self) -> float:
        return self.extents[0] * self.extents[1]


@dataclass(frozen=True)
class Face:
    """One edge of the partition.

    ``normal`` points out of ``cell_plus`` (towards ``cell_minus`` for
    interior faces). ``start`` and ``measure`` describe the segment, which
    runs along the axis orthogonal to the normal.
    """

    index: int
    kind: FaceKind
    cell_plus: int
    cell_minus: int | None
    normal: tuple[float, float]
    start: tuple[float, float]
    measure: float
    h_F: float

    @property
    def is_interior(self) -> bool:
        return self.kind is FaceKind.INTERIOR

    @property
    def tangent(self) -> tuple[float, float]:
        return (abs(self.normal[1]), abs(self.normal[0]))

    def points(self, s: np.ndarray) -> np.ndarray:
        """Physical points for face parameters ``s`` in [0, 1]."""
        s = np.asarray(s, dtype=float)
        t = np.array(self.tangent)
        return np.asarray(self.start) + self.measure * s[:, None] * t


@dataclass(frozen=True)
class StructuredQuadMesh:
    nx: int
    ny: int
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    cells: tuple[Cell, ...] = field(repr=False)
    faces: tuple[Face, ...] = field(repr=False)
    cell_faces: np.ndarray = field(repr=False)  # (n_cells, 4): left, right, bottom, top

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def h(self) -> float:
        return max(c.diameter for c in self.cells)

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def interior_faces(self) -> list[Face]:
        return [f for f in self.faces if f.is_interior]

    def boundary_faces(self) -> list[Face]:
        return [f for f in self.faces if not f.is_interior]

    def cell_origins(self) -> np.ndarray:
        return np.array([c.origin for c in self.cells])

    def cell_extents(self) -> np.ndarray:
        return np.array([c.extents for c in self.cells])

    def summary(self) -> str:
        n_int = sum(f.is_interior for f in self.faces)
        n_dir = sum(f.kind is FaceKind.DIRICHLET for f in self.faces)
        n_neu = sum(f.kind is FaceKind.NEUMANN for f in self.faces)
        return (
            f"mesh {self.nx}x{self.ny} on [{self.x_min:g},{self.x_max:g}]x[{self.y_min:g},{self.y_max:g}]: "
            f"cells={self.n_cells} interior_faces={n_int} dirichlet_faces={n_dir} "
            f"neumann_faces={n_neu} h={self.h:.6g}"
        )


def build_rectangle_mesh(
    nx: int,
    ny: int,
    bounds: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0),
    boundary: dict[str, FaceKind] | FaceKind = FaceKind.DIRICHLET,
) -> StructuredQuadMesh:
    """Uniform ``nx`` x ``ny`` grid. Cells are numbered x-fastest.

    ``boundary`` is either one kind for the whole boundary or a mapping from
    side name (left/right/bottom/top) to kind.
    """
    if nx < 1 or ny < 1:
        raise ValueError(f"cell counts must be positive, got nx={nx}, ny={ny}")
    x_min, x_max, y_min, y_max = map(float, bounds)
    if not (x_max > x_min and y_max > y_min):
        raise ValueError(f"degenerate domain bounds {bounds}")
    if isinstance(boundary, FaceKind):
        boundary = {side: boundary for side in SIDES}
    for side in SIDES:
        kind = boundary.get(side, FaceKind.DIRICHLET)
        if kind is FaceKind.INTERIOR:
            raise ValueError(f"boundary side {side!r} cannot be interior")

    dx = (x_max - x_min) / nx
    dy = (y_max - y_min) / ny
    cells = tuple(
        Cell(j * nx + i, (x_min + i * dx, y_min + j * dy), (dx, dy))
        for j in range(ny)
        for i in range(nx)
    )

    faces: list[Face] = []
    cell_faces = -np.ones((nx * ny, 4), dtype=np.int64)

    def add(kind, plus, minus, normal, start, measure, h_F, plus_side, minus_side=None):
        idx = len(faces)
        faces.append(Face(idx, kind, plus, minus, normal, start, measure, h_F))
        cell_faces[plus, plus_side] = idx
        if minus is not None:
            cell_faces[minus, minus_side] = idx

    # vertical faces, x-normal
    for j in range(ny):
        for i in range(nx + 1):
            start = (x_min + i * dx, y_min + j * dy)
            if i == 0:
                add(boundary.get("left", FaceKind.DIRICHLET), j * nx, None, (-1.0, 0.0), start, dy, dx, 0)
            elif i == nx:
                add(boundary.get("right", FaceKind.DIRICHLET), j * nx + nx - 1, None, (1.0, 0.0), start, dy, dx, 1)
            else:
                c = j * nx + i - 1
                add(FaceKind.INTERIOR, c, c + 1, (1.0, 0.0), start, dy, dx, 1, 0)
    # horizontal faces, y-normal
    for j in range(ny + 1):
        for i in range(nx):
            start = (x_min + i * dx, y_min + j * dy)
            if j == 0:
                add(boundary.get("bottom", FaceKind.DIRICHLET), i, None, (0.0, -1.0), start, dx, dy, 2)
            elif j == ny:
                add(boundary.get("top", FaceKind.DIRICHLET), (ny - 1) * nx + i, None, (0.0, 1.0), start, dx, dy, 3)
            else:
                c = (j - 1) * nx + i
                add(FaceKind.INTERIOR, c, c + nx, (0.0, 1.0), start, dx, dy, 3, 2)

    cell_faces.setflags(write=False)
    return StructuredQuadMesh(nx, ny, x_min, x_max, y_min, y_max, cells, tuple(faces), cell_faces)


def build_unit_square_mesh(n: int, dirichlet_all: bool = True) -> StructuredQuadMesh:
    """Uniform n x n mesh of (0,1)^2, fully Dirichlet or fully Neumann."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    kind = FaceKind.DIRICHLET if dirichlet_all else FaceKind.NEUMANN
    return build_rectangle_mesh(n, n, boundary=kind)


def faces_of_cell(mesh: StructuredQuadMesh, cell: int | Cell) -> list[tuple[Face, str]]:
    idx = cell.index if isinstance(cell, Cell) else int(cell)
    if not 0 <= idx < mesh.n_cells:
        raise KeyError(f"unknown cell {idx}")
    return [(mesh.faces[f], side) for f, side in zip(mesh.cell_faces[idx], SIDES)]
