"""Shared quadrature helpers: panel Gauss-Legendre and double-exponential grids."""

from __future__ import annotations

import numpy as np

__all__ = ["panel_nodes", "panel_integrate", "de_nodes"]


def panel_nodes(a: float, b: float, n_panels: int, n_nodes: int = 16):
    """Gauss-Legendre nodes/weights compounded over equal panels of [a, b]."""
    gl_x, gl_w = np.polynomial.legendre.leggauss(n_nodes)
    edges = np.linspace(a, b, n_panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * gl_x[None, :]).ravel()
    weights = (half[:, None] * gl_w[None, :]).ravel()
    return nodes, weights


def panel_integrate(f, a: float, b: float, n_panels: int, n_nodes: int = 16) -> float:
    """Integrate a vectorized callable over [a, b] with compounded GL panels."""
    nodes, weights = panel_nodes(a, b, n_panels, n_nodes)
    return float(np.sum(weights * f(nodes)))


def de_nodes(n: int, t_max: float = 4.2):
    """Double-exponential (tanh-sinh) nodes/weights on (-1, 1).

    Handles integrable algebraic endpoint singularities; n nodes on the
    uniform t-grid [-t_max, t_max].
    """
    t = np.linspace(-t_max, t_max, n)
    h = t[1] - t[0]
    u = 0.5 * np.pi * np.sinh(t)
    x = np.tanh(u)
    w = h * 0.5 * np.pi * np.cosh(t) / np.cosh(u) ** 2
    keep = 1.0 - np.abs(x) > 1e-17  # drop nodes indistinguishable from the ends
    return x[keep], w[keep]
