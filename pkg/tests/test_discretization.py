import numpy as np
import pytest

from ewave_ipdg.discretization import DgDiscretization, FemDiscretization, evaluate_cells, make_discretization
from ewave_ipdg.elasticity import manufactured_problem, manufactured_solution
from ewave_ipdg.mesh import build_unit_square_mesh


def test_factory():
    mesh = build_unit_square_mesh(2)
    assert isinstance(make_discretization("fem", mesh, 2, manufactured_problem()), FemDiscretization)
    d = make_discretization("nipg", mesh, 2, manufactured_problem(), 5.0)
    assert isinstance(d, DgDiscretization) and d.label == "NIPG" and d.penalty.gamma0 == 5.0
    with pytest.raises(KeyError):
        make_discretization("XYZ", mesh, 2, manufactured_problem())


def test_fem_ignores_penalty():
    mesh = build_unit_square_mesh(3)
    a = make_discretization("FEM", mesh, 2, manufactured_problem(), 1.0)
    b = make_discretization("FEM", mesh, 2, manufactured_problem(), 1e9)
    assert abs(a.A - b.A).max() == 0.0 and not hasattr(a, "penalty")


@pytest.mark.parametrize("scheme", ["SIPG", "FEM"])
def test_initial_state_reconstructs_exact_nodal_values(scheme):
    mesh = build_unit_square_mesh(3)
    disc = make_discretization(scheme, mesh, 2, manufactured_problem())
    u0, v0 = disc.initial()
    assert len(u0) == disc.n_dofs == disc.M.shape[0]
    ref = np.array([[0.0, 0.0], [0.5, 0.5], [1.0, 1.0]])
    X = mesh.cell_origins()[:, None, :] + ref[None] * mesh.cell_extents()[:, None, :]
    exact_u, exact_v = manufactured_solution(0.0, X)
    np.testing.assert_allclose(evaluate_cells(disc, disc.full_u(u0, 0.0), ref), exact_u, atol=1e-13)
    np.testing.assert_allclose(evaluate_cells(disc, disc.full_v(v0, 0.0), ref), exact_v, atol=1e-12)


def test_fem_spectral_variants():
    disc = make_discretization("FEM", build_unit_square_mesh(2), 2, manufactured_problem())
    M, _ = disc.spectral_matrices()
    Mr, _ = disc.spectral_matrices("reduced")
    assert M.shape == (50, 50) and Mr.shape == (18, 18)
    with pytest.raises(ValueError):
        disc.spectral_matrices("lumped")


def test_fem_velocity_needs_dirichlet_rate():
    import dataclasses

    prob = dataclasses.replace(manufactured_problem(), dirichlet_dt=None)
    disc = make_discretization("FEM", build_unit_square_mesh(2), 1, prob)
    with pytest.raises(ValueError):
        disc.full_v(np.zeros(disc.n_dofs), 0.0)
