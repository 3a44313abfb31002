"""Isotropic plane-strain elasticity and the travelling-sine manufactured solution."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

TWO_PI = 2.0 * np.pi


def lame_parameters(E: float, nu: float) -> tuple[float, float]:
    if E <= 0:
        raise ValueError(f"Young's modulus must be positive, got {E}")
    if nu == 0.5:
        raise ValueError("nu = 1/2 is the incompressible limit; lambda is unbounded")
    if not -1.0 < nu < 0.5:
        raise ValueError(f"Poisson ratio must lie in (-1, 1/2), got {nu}")
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    return lam, mu


@dataclass(frozen=True)
class IsotropicMaterial:
    E: float
    nu: float
    rho: float

    def __post_init__(self):
        lame_parameters(self.E, self.nu)
        if self.rho <= 0:
            raise ValueError(f"density must be positive, got {self.rho}")

    @property
    def lam(self) -> float:
        return lame_parameters(self.E, self.nu)[0]

    @property
    def mu(self) -> float:
        return lame_parameters(self.E, self.nu)[1]

    @property
    def p_modulus(self) -> float:
        """lambda + 2 mu, the P-wave modulus."""
        lam, mu = lame_parameters(self.E, self.nu)
        return lam + 2.0 * mu


EXPERIMENT_MATERIAL = IsotropicMaterial(E=70.0, nu=0.34, rho=2.8)


def strain(grad_u: np.ndarray) -> np.ndarray:
    grad_u = np.asarray(grad_u, dtype=float)
    return 0.5 * (grad_u + np.swapaxes(grad_u, -1, -2))


def stress(material: IsotropicMaterial, grad_u: np.ndarray) -> np.ndarray:
    """sigma = lambda tr(eps) I + 2 mu eps; works on stacks of shape (..., 2, 2)."""
    eps = strain(grad_u)
    tr = eps[..., 0, 0] + eps[..., 1, 1]
    sig = 2.0 * material.mu * eps
    sig[..., 0, 0] += material.lam * tr
    sig[..., 1, 1] += material.lam * tr
    return sig


def traction(material: IsotropicMaterial, grad_u: np.ndarray, normal) -> np.ndarray:
    n = np.asarray(normal, dtype=float)
    if abs(np.linalg.norm(n) - 1.0) > 1e-10:
        raise ValueError(f"normal must have unit length, got |n| = {np.linalg.norm(n)}")
    return stress(material, grad_u) @ n


def manufactured_solution(t: float, x) -> tuple[np.ndarray, np.ndarray]:
    """u = (sin 2pi(t+x1), sin 2pi(t+x2)) and its time derivative v."""
    x = np.asarray(x, dtype=float)
    arg = TWO_PI * (t + x)
    return np.sin(arg), TWO_PI * np.cos(arg)


def manufactured_acceleration(t: float, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return -(TWO_PI**2) * np.sin(TWO_PI * (t + x))


def manufactured_forcing(material: IsotropicMaterial, t: float, x) -> np.ndarray:
    # u_i depends on x_i only, so div sigma(u)_i = (lambda + 2 mu) d^2 u_i / dx_i^2
    x = np.asarray(x, dtype=float)
    coef = TWO_PI**2 * (material.p_modulus - material.rho)
    return coef * np.sin(TWO_PI * (t + x))


Field = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ProblemData:
    """Data of the displacement-velocity system.

    Every callable maps ``(t, x)`` with ``x`` of shape (..., 2) to an array
    of shape (..., 2). ``dirichlet_dt`` / ``dirichlet_dtt`` are only needed by
    the continuous discretization, which lifts the boundary data.
    """

    material: IsotropicMaterial
    forcing: Field
    dirichlet: Field
    initial_u: Callable[[np.ndarray], np.ndarray]
    initial_v: Callable[[np.ndarray], np.ndarray]
    neumann: Field | None = None
    dirichlet_dt: Field | None = None
    dirichlet_dtt: Field | None = None
    exact_u: Field | None = None
    exact_v: Field | None = None


def _zero(t, x):
    return np.zeros(np.shape(x))


def homogeneous_problem(material: IsotropicMaterial, u0=None, v0=None) -> ProblemData:
    zero_ic = lambda x: np.zeros(np.shape(x))  # noqa: E731
    return ProblemData(
        material,
        forcing=_zero,
        dirichlet=_zero,
        initial_u=u0 or zero_ic,
        initial_v=v0 or zero_ic,
        neumann=_zero,
        dirichlet_dt=_zero,
        dirichlet_dtt=_zero,
    )


def manufactured_problem(material: IsotropicMaterial = EXPERIMENT_MATERIAL) -> ProblemData:
    return ProblemData(
        material,
        forcing=lambda t, x: manufactured_forcing(material, t, x),
        dirichlet=lambda t, x: manufactured_solution(t, x)[0],
        initial_u=lambda x: manufactured_solution(0.0, x)[0],
        initial_v=lambda x: manufactured_solution(0.0, x)[1],
        neumann=None,
        dirichlet_dt=lambda t, x: manufactured_solution(t, x)[1],
        dirichlet_dtt=manufactured_acceleration,
        exact_u=lambda t, x: manufactured_solution(t, x)[0],
        exact_v=lambda t, x: manufactured_solution(t, x)[1],
    )
