"""The DAG parameterization ``A = W o relu(grad p)`` and the maps back from a graph.

``gamma`` sends any skew ``W`` and potential ``p`` to a DAG.  For a given
(possibly cyclic) graph, ``topo_potential`` recovers an ordering potential
from its connectivity matrix and ``closed_form_w`` the matching weights.
"""
from __future__ import annotations

import numpy as np

from .calculus import connectivity, grad, hodge_potential
from .core import DagParams, DimensionError, EdgeFlow, as_square


class NotADagError(ValueError):
    def __init__(self, cycle: list[int]):
        super().__init__(f"graph has a cycle through vertices {cycle}")
        self.cycle = cycle


def n_upper(d: int) -> int:
    return d * (d - 1) // 2


def pack(w) -> np.ndarray:
    """Strict upper triangle of a skew matrix, row-major."""
    w = np.asarray(w.matrix if isinstance(w, EdgeFlow) else w, dtype=float)
    return w[np.triu_indices(w.shape[0], 1)]


def unpack(upper, d: int) -> EdgeFlow:
    upper = np.asarray(upper, dtype=float)
    if upper.shape != (n_upper(d),):
        raise DimensionError(f"expected {n_upper(d)} entries for d={d}, got {upper.shape}")
    m = np.zeros((d, d))
    m[np.triu_indices(d, 1)] = upper
    return EdgeFlow(m)


def dim_from_upper(k: int) -> int:
    d = int(round((1 + np.sqrt(1 + 8 * k)) / 2))
    if n_upper(d) != k:
        raise DimensionError(f"{k} is not a triangular count")
    return d


def relu_flow(y: EdgeFlow) -> np.ndarray:
    m = y.matrix
    return np.where(m > 0, m, 0.0)


def gamma(params: DagParams) -> np.ndarray:
    return params.w.matrix * relu_flow(grad(params.p))


def gamma_raw(w: np.ndarray, p: np.ndarray) -> np.ndarray:
    """``gamma`` on a plain skew matrix, for optimizer inner loops."""
    g = p[None, :] - p[:, None]
    return w * np.where(g > 0, g, 0.0)


def topo_potential(a) -> np.ndarray:
    """Ordering potential from the skew part of the connectivity matrix of ``a``."""
    c = connectivity(a)
    return hodge_potential(EdgeFlow.from_matrix(c))


def closed_form_w(a, p) -> EdgeFlow:
    """Skew weights with ``gamma(W, p) == a`` on the edges that ``p`` orders.

    Pairs joined in both directions (2-cycles) and pairs with equal
    potential get weight 0, which drops those edges.
    """
    a = as_square(a)
    p = np.asarray(p, dtype=float)
    if p.shape != (a.shape[0],):
        raise DimensionError("potential length does not match matrix")
    fwd = a != 0
    bwd = a.T != 0
    dp = p[None, :] - p[:, None]
    ok = dp != 0
    safe = np.where(ok, dp, 1.0)
    w = np.zeros_like(a)
    only_fwd = fwd & ~bwd & ok
    only_bwd = ~fwd & bwd & ok
    w[only_fwd] = (a / safe)[only_fwd]
    w[only_bwd] = (a.T / safe)[only_bwd]
    return EdgeFlow(w)


def topological_sort(a) -> list[int]:
    """Kahn's algorithm on the nonzero pattern; raises :class:`NotADagError` with a cycle."""
    adj = as_square(a) != 0
    d = adj.shape[0]
    indeg = adj.sum(axis=0).astype(int)
    ready = [v for v in range(d) if indeg[v] == 0]
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for u in np.flatnonzero(adj[v]):
            indeg[u] -= 1
            if indeg[u] == 0:
                ready.append(int(u))
    if len(order) < d:
        raise NotADagError(_find_cycle(adj, set(range(d)) - set(order)))
    return order


def _find_cycle(adj: np.ndarray, remaining: set[int]) -> list[int]:
    # every leftover vertex has a leftover predecessor; walk back until a repeat
    v = min(remaining)
    seen: dict[int, int] = {}
    path = []
    while v not in seen:
        seen[v] = len(path)
        path.append(v)
        v = next(int(u) for u in np.flatnonzero(adj[:, v]) if int(u) in remaining)
    cycle = path[seen[v]:]
    return cycle[::-1]


def is_dag(a) -> bool:
    try:
        topological_sort(a)
    except NotADagError:
        return False
    return True


def threshold(a, eps: float) -> np.ndarray:
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    a = as_square(a)
    return np.where(np.abs(a) < eps, 0.0, a)


def incremental_threshold(a, start: float = 0.3, step: float = 0.05, h_tol: float = 1e-8):
    """Raise the threshold from ``start`` by ``step`` until the result is acyclic.

    Acyclicity needs both ``h_poly < h_tol`` and an exact topological order:
    on long cycles of small weights the polynomial measure can underflow the
    tolerance.  Returns ``(dag, eps)``; if the threshold passes the largest
    magnitude plus one step the empty graph is returned.
    """
    if start < 0 or step <= 0:
        raise ValueError("need start >= 0 and step > 0")
    from .objectives import h_poly

    a = as_square(a)
    limit = np.max(np.abs(a), initial=0.0) + step
    k = 0
    while True:
        eps = round(start + k * step, 12)
        out = threshold(a, eps)
        if h_poly(out) < h_tol and is_dag(out):
            return out, eps
        if eps > limit:
            return np.zeros_like(a), eps
        k += 1
