import math

import numpy as np
import pytest

from ewave_ipdg.mesh import FaceKind, build_rectangle_mesh, build_unit_square_mesh, faces_of_cell


@pytest.mark.parametrize("n, cells, interior, boundary", [(1, 1, 0, 4), (2, 4, 4, 8), (5, 25, 40, 20)])
def test_counts(n, cells, interior, boundary):
    mesh = build_unit_square_mesh(n)
    assert mesh.n_cells == cells
    assert len(mesh.interior_faces()) == interior == 2 * n * (n - 1)
    assert len(mesh.boundary_faces()) == boundary == 4 * n


def test_rejects_empty_mesh():
    with pytest.raises(ValueError):
        build_unit_square_mesh(0)


def test_experiment_mesh_size():
    mesh = build_unit_square_mesh(40)
    target = 1e-1 / (2 * math.sqrt(2))
    assert all(abs(c.diameter - target) < 1e-15 for c in mesh.cells)
    assert abs(mesh.h - 0.035355339) < 1e-9


@pytest.mark.parametrize("nx, ny", [(3, 2), (1, 4), (7, 7)])
def test_rectangle_invariants(nx, ny):
    mesh = build_rectangle_mesh(nx, ny, (-1.0, 2.0, 0.5, 1.25))
    assert mesh.n_cells == nx * ny
    assert len(mesh.interior_faces()) == nx * (ny - 1) + (nx - 1) * ny
    assert len(mesh.boundary_faces()) == 2 * nx + 2 * ny
    assert abs(sum(c.measure for c in mesh.cells) - mesh.area) <= 1e-12 * mesh.area
    perimeter = 2 * (3.0 + 0.75)
    assert abs(sum(f.measure for f in mesh.boundary_faces()) - perimeter) <= 1e-12 * perimeter
    for f in mesh.faces:
        assert np.linalg.norm(f.normal) == 1.0
        assert f.h_F > 0
        assert f.is_interior == (f.cell_minus is not None)
        if f.is_interior:
            assert f.cell_plus < f.cell_minus
            # normal points from plus towards minus
            cp, cm = mesh.cells[f.cell_plus], mesh.cells[f.cell_minus]
            d = np.add(cm.origin, np.multiply(cm.extents, 0.5)) - np.add(cp.origin, np.multiply(cp.extents, 0.5))
            assert np.dot(d, f.normal) > 0


def test_uniform_face_measures():
    mesh = build_unit_square_mesh(6)
    assert all(abs(f.measure - 1 / 6) < 1e-15 for f in mesh.faces)
    assert all(abs(f.h_F - 1 / 6) < 1e-15 for f in mesh.faces)


def test_boundary_kinds():
    assert {f.kind for f in build_unit_square_mesh(3).boundary_faces()} == {FaceKind.DIRICHLET}
    assert {f.kind for f in build_unit_square_mesh(3, dirichlet_all=False).boundary_faces()} == {FaceKind.NEUMANN}
    mixed = build_rectangle_mesh(2, 2, boundary={"left": FaceKind.DIRICHLET, "right": FaceKind.NEUMANN,
                                                 "bottom": FaceKind.NEUMANN, "top": FaceKind.NEUMANN})
    assert sum(f.kind is FaceKind.DIRICHLET for f in mixed.faces) == 2


def test_faces_of_cell():
    one = faces_of_cell(build_unit_square_mesh(1), 0)
    assert [s for _, s in one] == ["left", "right", "bottom", "top"]
    assert all(not f.is_interior for f, _ in one)

    mesh = build_unit_square_mesh(2)
    faces = faces_of_cell(mesh, 0)
    assert sum(f.is_interior for f, _ in faces) == 2
    assert [f.normal for f, _ in faces] == [(-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0)]

    with pytest.raises(KeyError):
        faces_of_cell(mesh, 4)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_interior_faces_shared_by_two_cells(n):
    mesh = build_unit_square_mesh(n)
    seen = {}
    for c in range(mesh.n_cells):
        for f, _ in faces_of_cell(mesh, c):
            seen.setdefault(f.index, []).append(c)
    for idx, cells in seen.items():
        face = mesh.faces[idx]
        assert len(cells) == (2 if face.is_interior else 1)
        assert sorted(cells) == sorted(c for c in (face.cell_plus, face.cell_minus) if c is not None)


def test_summary_mentions_counts():
    s = build_unit_square_mesh(4).summary()
    assert "cells=16" in s and "interior_faces=24" in s
