"""Finite-difference weights and radial derivative helpers."""

from __future__ import annotations

from typing import Callable

import numpy as np

EPS = np.finfo(float).eps


def fornberg_weights(x0: float, nodes, order: int) -> np.ndarray:
    """Weights w with sum_j w_j f(nodes_j) ~ f^(order)(x0) on arbitrary nodes.

    Fornberg's recursion; exact for polynomials of degree len(nodes) - 1.
    """
    x = np.asarray(nodes, dtype=float)
    n = x.size
    if order >= n:
        raise ValueError("need more nodes than the derivative order")
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


# five-point central stencils on a uniform grid, offsets -2..2
D1_5 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
D2_5 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
OFFSETS_5 = np.arange(-2, 3, dtype=float)


def radial_derivatives(f: Callable, r: float, h: float) -> tuple[float, float, float]:
    """(f, f', f'') at r from five-point central stencils with step h."""
    vals = np.array([f(r + k * h) for k in OFFSETS_5], dtype=float)
    return float(vals[2]), float(D1_5 @ vals / h), float(D2_5 @ vals / h ** 2)


def radial_laplacian_fd(f: Callable, r: float, n: int, h: float | None = None) -> float:
    """Delta f = f'' + (n-1) f'/r for a radial profile, by five-point stencils."""
    if h is None:
        h = EPS ** 0.25 * r
    _, d1, d2 = radial_derivatives(f, r, h)
    return d2 + (n - 1) * d1 / r
