"""Quadrature on [0,1] / [0,1]^2 and tensor-product Lagrange shape functions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (n,) on [0,1] or (n, 2) on [0,1]^2
    weights: np.ndarray
    exactness: int  # max total polynomial degree per axis integrated exactly

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return 1 if self.points.ndim == 1 else self.points.shape[1]

    def integrate(self, f) -> float:
        vals = np.asarray(f(self.points) if self.dim == 1 else f(self.points[:, 0], self.points[:, 1]))
        return float(np.dot(self.weights, vals))


def gauss_legendre(n: int) -> QuadratureRule:
    if n < 1:
        raise ValueError(f"Gauss-Legendre needs n >= 1, got {n}")
    x, w = legendre.leggauss(n)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w, 2 * n - 1)


def gauss_lobatto(n: int) -> QuadratureRule:
    """n-point Gauss-Lobatto rule on [0,1]; includes both endpoints."""
    if n < 2:
        raise ValueError(f"Gauss-Lobatto needs n >= 2, got {n}")
    # interior nodes are the roots of P'_{n-1}
    coef = np.zeros(n)
    coef[-1] = 1.0
    interior = legendre.legroots(legendre.legder(coef)) if n > 2 else np.array([])
    x = np.concatenate(([-1.0], np.sort(interior.real), [1.0]))
    # one Newton pass on P'_{n-1} to polish the interior roots
    if n > 2:
        d1 = legendre.legder(coef)
        d2 = legendre.legder(coef, 2)
        xi = x[1:-1]
        x[1:-1] = xi - legendre.legval(xi, d1) / legendre.legval(xi, d2)
    w = 2.0 / (n * (n - 1) * legendre.legval(x, coef) ** 2)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w, 2 * n - 3)


def tensor_rule(rule: QuadratureRule) -> QuadratureRule:
    """Tensor product of a 1D rule with itself; x varies fastest."""
    xs, ys = np.meshgrid(rule.points, rule.points)
    wx, wy = np.meshgrid(rule.weights, rule.weights)
    pts = np.column_stack([xs.ravel(), ys.ravel()])
    return QuadratureRule(pts, (wx * wy).ravel(), rule.exactness)


def lagrange_1d(nodes: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of the Lagrange polynomials on ``nodes`` at ``x``.

    Returns two arrays of shape (len(x), len(nodes)).
    """
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = len(nodes)
    vals = np.ones((len(x), m))
    ders = np.zeros((len(x), m))
    for i in range(m):
        others = [k for k in range(m) if k != i]
        denom = np.prod([nodes[i] - nodes[k] for k in others])
        for k in others:
            vals[:, i] *= x - nodes[k]
        for k in others:
            term = np.ones(len(x))
            for l in others:
                if l != k:
                    term *= x - nodes[l]
            ders[:, i] += term
        vals[:, i] /= denom
        ders[:, i] /= denom
    return vals, ders


def equidistant_nodes(p: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, p + 1)


@dataclass(frozen=True)
class ShapeSet:
    """Scalar Q_p shape functions tabulated at reference points.

    Shape ``i + (p+1)*j`` is the product of the 1D polynomials for nodes
    ``i`` in x and ``j`` in y. ``gradients`` are reference gradients.
    """

    degree: int
    nodes: np.ndarray  # ((p+1)^2, 2)
    points: np.ndarray  # (nq, 2)
    values: np.ndarray  # (nq, nshape)
    gradients: np.ndarray  # (nq, nshape, 2)

    @property
    def n_shapes(self) -> int:
        return self.values.shape[1]


def lagrange_shapes_2d(p: int, rule_or_points) -> ShapeSet:
    if p < 1:
        raise ValueError(f"polynomial degree must be >= 1, got {p}")
    pts = rule_or_points.points if isinstance(rule_or_points, QuadratureRule) else rule_or_points
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n1 = equidistant_nodes(p)
    vx, dx = lagrange_1d(n1, pts[:, 0])
    vy, dy = lagrange_1d(n1, pts[:, 1])
    # shape index = i + (p+1) * j
    values = np.einsum("qj,qi->qji", vy, vx).reshape(len(pts), -1)
    gx = np.einsum("qj,qi->qji", vy, dx).reshape(len(pts), -1)
    gy = np.einsum("qj,qi->qji", dy, vx).reshape(len(pts), -1)
    xs, ys = np.meshgrid(n1, n1)
    nodes = np.column_stack([xs.ravel(), ys.ravel()])
    return ShapeSet(p, nodes, pts, values, np.stack([gx, gy], axis=-1))


def map_gradient_to_physical(cell, ref_grad: np.ndarray) -> np.ndarray:
    """Chain rule for the axis-aligned affine map x = origin + extents * xi."""
    extents = np.asarray(cell.extents if hasattr(cell, "extents") else cell, dtype=float)
    if np.any(extents <= 0.0):
        raise ValueError(f"degenerate cell extents {extents}")
    return np.asarray(ref_grad, dtype=float) / extents
