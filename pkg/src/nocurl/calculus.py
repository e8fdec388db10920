"""Exterior calculus on the complete graph and the gradient (curl-free) projection.

Vertex functions are 1-D arrays, edge functions are :class:`EdgeFlow`, and
triangle functions are :class:`TriangleFlow`.  Indices are 0-based.
"""
from __future__ import annotations

import itertools

import numpy as np

from .core import EdgeFlow, TriangleFlow, as_square


def _potential(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ValueError("potential must be a non-empty 1-D array")
    if not np.all(np.isfinite(p)):
        raise ValueError("potential has non-finite entries")
    return p


def grad(p) -> EdgeFlow:
    """``(grad p)(i, j) = p[j] - p[i]``."""
    p = _potential(p)
    return EdgeFlow(p[None, :] - p[:, None])


def divergence(y: EdgeFlow) -> np.ndarray:
    """Row sums of the flow; the adjoint of ``grad`` is its negation."""
    return y.matrix.sum(axis=1)


def grad_adjoint(y: EdgeFlow) -> np.ndarray:
    return -divergence(y)


def curl_at(y: EdgeFlow, i: int, j: int, k: int) -> float:
    if len({i, j, k}) < 3:
        raise ValueError(f"curl needs three distinct vertices, got ({i}, {j}, {k})")
    m = y.matrix
    return float(m[i, j] + m[j, k] + m[k, i])


def curl(y: EdgeFlow) -> np.ndarray:
    """Dense ``curl y`` as a dim x dim x dim array (small graphs only)."""
    m = y.matrix
    return m[:, :, None] + m[None, :, :] + m.T[:, None, :]


def curl_max(y: EdgeFlow) -> float:
    """Largest ``|curl y|`` over unordered triples, evaluated slice by slice."""
    m = y.matrix
    d = m.shape[0]
    best = 0.0
    for i in range(d - 2):
        # triples (i, j, k) with i < j < k
        block = m[i, i + 1:, None] + m[i + 1:, i + 1:] + m[i + 1:, i][None, :]
        block = np.triu(block, 1)
        if block.size:
            best = max(best, float(np.max(np.abs(block))))
    return best


def curl_adjoint(theta: TriangleFlow) -> EdgeFlow:
    """``(curl* theta)(i, j) = sum_k theta(i, j, k)``."""
    return EdgeFlow(theta.values.sum(axis=2))


def laplacian0_apply(p) -> np.ndarray:
    p = _potential(p)
    return p.size * p - p.sum()


def helmholtzian_apply(y: EdgeFlow) -> EdgeFlow:
    """``grad grad* y + curl* curl y``."""
    gg = grad(grad_adjoint(y))
    cc = curl(y).sum(axis=2)
    return gg + EdgeFlow(cc)


def hodge_potential(y: EdgeFlow) -> np.ndarray:
    """Potential of the L2 projection of ``y`` onto gradient flows, pinned to 0 at the last vertex.

    Solves ``laplacian0(phi) = -div(y)`` on the first ``d - 1`` vertices with
    ``phi[-1] = 0``.  The pinned Laplacian there is ``d*I - J`` with inverse
    ``(I + J) / d``, which gives the closed form below.
    """
    d = y.dim
    if d < 2:
        raise ValueError("projection needs at least two vertices")
    v = divergence(y)[:-1]
    phi = np.zeros(d)
    phi[:-1] = -(v + v.sum()) / d
    return phi


def hodge_project(y: EdgeFlow) -> EdgeFlow:
    return grad(hodge_potential(y))


def connectivity(a) -> np.ndarray:
    """Reachability by paths of length >= 1 (Warshall); nodes on a cycle get a 1 on the diagonal."""
    reach = as_square(a) != 0
    for k in range(reach.shape[0]):
        reach |= reach[:, k:k + 1] & reach[k:k + 1, :]
    return reach.astype(float)


def triples(d: int):
    return itertools.combinations(range(d), 3)
