"""cG(r) time coefficients and the cG(1) slab systems, solvers and time loop."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fe_basis import gauss_legendre, gauss_lobatto, lagrange_1d

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimeCoefficients:
    """alpha[k, i] and beta[k, i] for test function k and trial function i.

    beta is stored for a unit interval; multiply by tau_n when used.
    """

    r: int
    alpha: np.ndarray  # (r, r+1)
    beta: np.ndarray  # (r, r+1)
    trial_nodes: np.ndarray
    test_nodes: np.ndarray

    def beta_scaled(self, tau: float) -> np.ndarray:
        return tau * self.beta


def time_coefficients(r: int) -> TimeCoefficients:
    """Trial: Lagrange on r+1 Gauss-Lobatto points. Test: Lagrange on r Gauss points.

    Products are integrated with the (r+1)-point Gauss-Lobatto rule, which is
    exact for both the alpha (degree 2r-2) and beta (degree 2r-1) integrands.
    """
    if r < 1:
        raise ValueError(f"temporal degree must be >= 1, got {r}")
    quad = gauss_lobatto(r + 1)
    trial_nodes = quad.points
    test_nodes = gauss_legendre(r).points
    xi, dxi = lagrange_1d(trial_nodes, quad.points)  # (mu, iota)
    if r == 1:
        zeta = np.ones((len(quad.points), 1))
    else:
        zeta, _ = lagrange_1d(test_nodes, quad.points)  # (mu, kappa)
    w = quad.weights
    alpha = np.einsum("m,mi,mk->ki", w, dxi, zeta)
    beta = np.einsum("m,mi,mk->ki", w, xi, zeta)
    return TimeCoefficients(r, alpha, beta, trial_nodes, test_nodes)


class SolverError(RuntimeError):
    pass


METHODS = ("cg", "gmres", "dense", "direct")


@dataclass(frozen=True)
class SolverConfig:
    """``direct`` factorizes the sparse matrix once and reuses it for all slabs."""

    method: str = "cg"
    rel_tolerance: float = 1e-10
    max_iterations: int = 100_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown solver {self.method!r}; choose from {METHODS}")
        if not 0.0 < self.rel_tolerance < 1.0:
            raise ValueError(f"rel_tolerance must be in (0, 1), got {self.rel_tolerance}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class SolveInfo:
    iterations: int
    residual: float


@dataclass
class TimeSlabSystem:
    M: sp.spmatrix
    A: sp.spmatrix
    tau: float
    b0: np.ndarray | None = None
    b1: np.ndarray | None = None

    def __post_init__(self):
        if not self.tau >= 0.0:
            raise ValueError(f"interval length must be non-negative, got {self.tau}")
        if self.M.shape != self.A.shape or self.M.shape[0] != self.M.shape[1]:
            raise ValueError(f"mass {self.M.shape} and stiffness {self.A.shape} must be equal and square")
        n = self.M.shape[0]
        if self.b0 is None:
            self.b0 = np.zeros(n)
        if self.b1 is None:
            self.b1 = np.zeros(n)
        if len(self.b0) != n or len(self.b1) != n:
            raise ValueError("right-hand side length does not match the operators")

    @property
    def n(self) -> int:
        return self.M.shape[0]


def build_block_matrix(sys: TimeSlabSystem) -> sp.csr_matrix:
    """L = [[-tau/2 M, M], [M, tau/2 A]] acting on (v1, u1)."""
    h = 0.5 * sys.tau
    return sp.bmat([[-h * sys.M, sys.M], [sys.M, h * sys.A]], format="csr")


def block_rhs(sys: TimeSlabSystem, u0: np.ndarray, v0: np.ndarray) -> np.ndarray:
    h = 0.5 * sys.tau
    top = h * (sys.M @ v0) + sys.M @ u0
    bottom = sys.M @ v0 - h * (sys.A @ u0) + h * (sys.b0 + sys.b1)
    return np.concatenate([top, bottom])


def condensed_matrix(M, A, tau: float) -> sp.csr_matrix:
    return (M + (0.25 * tau * tau) * A).tocsr()


def build_condensed(sys: TimeSlabSystem, u0: np.ndarray, v0: np.ndarray) -> tuple[sp.csr_matrix, np.ndarray]:
    """K = M + tau^2/4 A and its right-hand side for u1."""
    q = 0.25 * sys.tau * sys.tau
    K = condensed_matrix(sys.M, sys.A, sys.tau)
    rhs = q * (sys.b0 + sys.b1) + sys.M @ u0 - q * (sys.A @ u0) + sys.tau * (sys.M @ v0)
    return K, rhs


def postprocess_velocity(u1: np.ndarray, u0: np.ndarray, v0: np.ndarray, tau: float) -> np.ndarray:
    if tau == 0:
        raise ValueError("velocity postprocess needs tau > 0")
    return (2.0 / tau) * (u1 - u0) - v0


def _is_symmetric(K) -> bool:
    d = K - K.T
    scale = abs(K).max() if K.nnz else 1.0
    return d.nnz == 0 or abs(d).max() <= 1e-12 * scale


def _equilibrate(K):
    """Row then column scale factors making every row and column max-norm 1."""
    Ks = sp.csr_matrix(K)
    r = 1.0 / abs(Ks).max(axis=1).toarray().ravel()
    c = 1.0 / abs(sp.diags(r) @ Ks).max(axis=0).toarray().ravel()
    return r, c


class LinearSolver:
    """Solves with a fixed matrix; caches factorizations across calls.

    The direct methods equilibrate rows and columns before factorizing, which
    matters for the block system whose mass and stiffness blocks differ by
    many orders of magnitude.
    """

    def __init__(self, config: SolverConfig):
        self.config = config
        self._matrix = None  # kept alive so identity checks cannot alias a freed matrix
        self._factor = None

    def solve(self, K, rhs: np.ndarray, x0: np.ndarray | None = None) -> tuple[np.ndarray, SolveInfo]:
        cfg = self.config
        bnorm = np.linalg.norm(rhs)
        if bnorm == 0.0:
            return np.zeros_like(rhs), SolveInfo(0, 0.0)
        if cfg.method in ("dense", "direct"):
            if self._matrix is not K:
                r, c = _equilibrate(K)
                Ks = sp.diags(r) @ sp.csr_matrix(K) @ sp.diags(c)
                if cfg.method == "dense":
                    lu = sla.lu_factor(Ks.toarray())
                else:
                    lu = spla.splu(sp.csc_matrix(Ks))
                self._factor = (lu, r, c)
                self._matrix = K
            lu, r, c = self._factor

            def apply(b):
                return c * (sla.lu_solve(lu, r * b) if cfg.method == "dense" else lu.solve(r * b))

            x = apply(rhs)
            x += apply(rhs - K @ x)  # one step of iterative refinement
            return x, SolveInfo(1, np.linalg.norm(K @ x - rhs) / bnorm)

        count = [0]

        def cb(*_):
            count[0] += 1

        if cfg.method == "cg":
            if not _is_symmetric(K):
                raise SolverError("conjugate gradients need a symmetric matrix; use gmres for NIPG/IIPG")
            x, flag = spla.cg(K, rhs, x0=x0, rtol=cfg.rel_tolerance, atol=0.0, maxiter=cfg.max_iterations, callback=cb)
        else:
            x, flag = spla.gmres(
                K, rhs, x0=x0, rtol=cfg.rel_tolerance, atol=0.0, restart=200,
                maxiter=cfg.max_iterations, callback=cb, callback_type="pr_norm",
            )
        res = np.linalg.norm(K @ x - rhs) / bnorm
        if flag != 0:
            raise SolverError(
                f"{cfg.method} did not converge in {cfg.max_iterations} iterations (relative residual {res:.3e})"
            )
        return x, SolveInfo(count[0], res)


def step(
    sys: TimeSlabSystem,
    u0: np.ndarray,
    v0: np.ndarray,
    solver: SolverConfig | LinearSolver = SolverConfig(),
    *,
    path: str = "condensed",
    matrix=None,
) -> tuple[np.ndarray, np.ndarray, SolveInfo]:
    """One slab. ``path="condensed"`` solves K u1 = b and postprocesses v1;
    ``path="block"`` solves the coupled (v1, u1) system directly.
    """
    ls = solver if isinstance(solver, LinearSolver) else LinearSolver(solver)
    if path == "condensed":
        K, rhs = build_condensed(sys, u0, v0)
        u1, info = ls.solve(matrix if matrix is not None else K, rhs, x0=u0 + sys.tau * v0)
        return u1, postprocess_velocity(u1, u0, v0, sys.tau), info
    if path == "block":
        if ls.config.method == "cg":
            raise SolverError("the block system is indefinite; use gmres, dense or direct")
        L = matrix if matrix is not None else build_block_matrix(sys)
        x, info = ls.solve(L, block_rhs(sys, u0, v0), x0=np.concatenate([v0, u0]))
        return x[sys.n:], x[:sys.n], info
    raise ValueError(f"unknown path {path!r}")


@dataclass
class Trajectory:
    times: np.ndarray
    u: np.ndarray  # (N+1, ndof)
    v: np.ndarray
    telemetry: list[SolveInfo] = field(default_factory=list)


def run(
    times,
    u0: np.ndarray,
    v0: np.ndarray,
    M,
    A,
    rhs: Callable[[float], np.ndarray],
    solver: SolverConfig = SolverConfig(),
    *,
    path: str = "condensed",
) -> Trajectory:
    """March over the grid; ``rhs(t)`` is the spatial load assembly at time t."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be strictly increasing with at least two points")
    ls = LinearSolver(solver)
    us, vs, tele = [np.asarray(u0, float)], [np.asarray(v0, float)], []
    b_prev = rhs(times[0])
    cache_tau, mat = None, None
    for k in range(1, len(times)):
        tau = times[k] - times[k - 1]
        b_next = rhs(times[k])
        sys_k = TimeSlabSystem(M, A, tau, b_prev, b_next)
        if cache_tau is None or not np.isclose(tau, cache_tau, rtol=1e-13, atol=0.0):
            mat = condensed_matrix(M, A, tau) if path == "condensed" else build_block_matrix(sys_k)
            cache_tau = tau
        try:
            u1, v1, info = step(sys_k, us[-1], vs[-1], ls, path=path, matrix=mat)
        except SolverError as exc:
            raise SolverError(f"interval {k} ({times[k - 1]:.6g}, {times[k]:.6g}): {exc}") from exc
        us.append(u1)
        vs.append(v1)
        tele.append(info)
        b_prev = b_next
    return Trajectory(times, np.array(us), np.array(vs), tele)


def discrete_energy(M, A, u: np.ndarray, v: np.ndarray) -> float:
    return 0.5 * float(v @ (M @ v) + u @ (A @ u))
