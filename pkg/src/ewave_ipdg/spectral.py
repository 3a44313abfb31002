"""Condition numbers, spectra, min-max normalization and gap-based clustering."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

DENSE_LIMIT = 5000
DEFAULT_GAP = 0.02


class SpectralError(ValueError):
    pass


class IndefiniteMatrixError(SpectralError):
    pass


def _dense(K) -> np.ndarray:
    return K.toarray() if sp.issparse(K) else np.asarray(K, dtype=float)


def check_symmetric(K, rtol: float = 1e-10) -> None:
    d = K - K.T
    if sp.issparse(d):
        dmax = abs(d).max() if d.nnz else 0.0
        scale = abs(K).max() if K.nnz else 1.0
    else:
        dmax = np.abs(d).max()
        scale = np.abs(K).max() or 1.0
    if dmax > rtol * scale:
        raise SpectralError(f"matrix is not symmetric: max |K - K^T| = {dmax:.3e} (scale {scale:.3e})")


@dataclass
class LanczosResult:
    value: float
    iterations: int
    converged: bool


def lanczos_extremal(
    matvec,
    n: int,
    which: str = "largest",
    tol: float = 1e-8,
    max_iter: int | None = None,
    seed: int = 0,
) -> LanczosResult:
    """Extremal eigenvalue of a symmetric operator by Lanczos with full reorthogonalization.

    Stops when the residual estimate |beta_k s_k| of the wanted Ritz pair drops
    below ``tol * |theta|``.
    """
    if which not in ("largest", "smallest"):
        raise ValueError(f"which must be 'largest' or 'smallest', got {which!r}")
    max_iter = min(n, max_iter or 1000)
    rng = np.random.default_rng(seed)
    Q = np.zeros((n, max_iter + 1))
    q = rng.standard_normal(n)
    Q[:, 0] = q / np.linalg.norm(q)
    alphas, betas = [], []
    theta = np.nan
    for k in range(max_iter):
        w = matvec(Q[:, k])
        alpha = Q[:, k] @ w
        w = w - alpha * Q[:, k] - (betas[-1] * Q[:, k - 1] if k > 0 else 0.0)
        # two passes of classical Gram-Schmidt against all previous vectors
        for _ in range(2):
            w -= Q[:, : k + 1] @ (Q[:, : k + 1].T @ w)
        beta = np.linalg.norm(w)
        alphas.append(alpha)
        T = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
        evals, evecs = np.linalg.eigh(T)
        idx = -1 if which == "largest" else 0
        theta = evals[idx]
        resid = abs(beta * evecs[-1, idx])
        if resid <= tol * abs(theta) or beta <= 1e-14 * max(abs(evals).max(), 1e-300):
            return LanczosResult(float(theta), k + 1, True)
        betas.append(beta)
        Q[:, k + 1] = w / beta
    return LanczosResult(float(theta), max_iter, False)


@dataclass
class ConditionEstimate:
    kappa: float
    lam_min: float
    lam_max: float
    method: str
    iterations: int = 0


def estimate_condition_spd(K, method: str = "auto", tol: float = 1e-8) -> ConditionEstimate:
    check_symmetric(K)
    n = K.shape[0]
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "lanczos"
    if method == "dense":
        if n > DENSE_LIMIT:
            raise SpectralError(f"dense eigensolve limited to {DENSE_LIMIT} unknowns, got {n}")
        ev = np.linalg.eigvalsh(_dense(K))
        lo, hi, its = ev[0], ev[-1], 0
    elif method == "lanczos":
        Ks = sp.csr_matrix(K)
        top = lanczos_extremal(Ks.dot, n, "largest", tol=tol)
        # smallest eigenvalue: Lanczos on K^{-1} (shift-invert about zero)
        lu = spla.splu(sp.csc_matrix(Ks))
        inv = lanczos_extremal(lu.solve, n, "largest", tol=tol)
        if not (top.converged and inv.converged):
            log.warning("Lanczos did not reach tolerance %g (iterations %d/%d)", tol, top.iterations, inv.iterations)
        hi, its = top.value, top.iterations + inv.iterations
        lo = 1.0 / inv.value if inv.value > 0 else -np.inf
    else:
        raise ValueError(f"unknown method {method!r}")
    if not lo > 0:
        raise IndefiniteMatrixError(f"matrix is not positive definite (lambda_min = {lo:.3e})")
    return ConditionEstimate(hi / lo, lo, hi, method, its)


def condition_number_spd(K, method: str = "auto") -> float:
    return estimate_condition_spd(K, method).kappa


def condition_number_general(L) -> float:
    """2-norm condition number sigma_max / sigma_min."""
    n = L.shape[0]
    if n > DENSE_LIMIT:
        raise SpectralError(f"dense SVD limited to {DENSE_LIMIT} unknowns, got {n}")
    s = np.linalg.svd(_dense(L), compute_uv=False)
    if s[-1] < 1e-14 * s[0]:
        raise SpectralError(f"matrix is numerically singular (sigma_min / sigma_max = {s[-1] / s[0]:.3e})")
    return float(s[0] / s[-1])


def full_spectrum(K) -> np.ndarray:
    n = K.shape[0]
    if n > DENSE_LIMIT:
        raise SpectralError(
            f"full spectrum needs a dense eigensolve, limited to {DENSE_LIMIT} unknowns (got {n}); reduce n"
        )
    check_symmetric(K)
    return np.linalg.eigvalsh(_dense(K))


def normalize_spectrum(eigenvalues, *, return_flag: bool = False):
    """Affine map of [lambda_min, lambda_max] onto [0, 1].

    A spectrum of one repeated value maps to all zeros; ``return_flag`` then
    reports ``True`` as the second element.
    """
    ev = np.sort(np.asarray(eigenvalues, dtype=float))
    span = ev[-1] - ev[0]
    degenerate = not span > 0
    out = np.zeros_like(ev) if degenerate else (ev - ev[0]) / span
    if not degenerate:
        out[0], out[-1] = 0.0, 1.0
    return (out, degenerate) if return_flag else out


def detect_clusters(normalized, gap: float = DEFAULT_GAP) -> list[tuple[float, float]]:
    x = np.sort(np.asarray(normalized, dtype=float))
    if not 0.0 < gap < 1.0:
        raise ValueError(f"gap must lie in (0, 1), got {gap}")
    if len(x) == 0:
        return []
    breaks = np.flatnonzero(np.diff(x) > gap)
    starts = np.r_[0, breaks + 1]
    ends = np.r_[breaks, len(x) - 1]
    return [(float(x[s]), float(x[e])) for s, e in zip(starts, ends)]


def cluster_labels(normalized, clusters) -> np.ndarray:
    x = np.asarray(normalized, dtype=float)
    labels = np.full(len(x), -1)
    for i, (lo, hi) in enumerate(clusters):
        labels[(x >= lo) & (x <= hi)] = i
    return labels


def cluster_compactness(clusters) -> float:
    return float(sum(hi - lo for lo, hi in clusters))


@dataclass
class SpectrumReport:
    label: str
    tau: float
    gamma0: float | None
    S: int | None
    p: int
    n: int
    eigenvalues: np.ndarray
    normalized: np.ndarray = field(repr=False)
    clusters: list[tuple[float, float]]
    condition_number: float

    @property
    def compactness(self) -> float:
        return cluster_compactness(self.clusters)


def spectrum_report(K, *, label: str, tau: float, p: int, n: int, gamma0=None, S=None, gap=DEFAULT_GAP) -> SpectrumReport:
    ev = full_spectrum(K)
    if not ev[0] > 0:
        raise IndefiniteMatrixError(f"{label}: lambda_min = {ev[0]:.3e} is not positive")
    normed = normalize_spectrum(ev)
    return SpectrumReport(label, tau, gamma0, S, p, n, ev, normed, detect_clusters(normed, gap), ev[-1] / ev[0])
