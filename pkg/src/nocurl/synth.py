"""Random ground-truth DAGs and linear-SEM samples."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dagspace import NotADagError, topological_sort
from .objectives import Dataset
from .rng import Rng

GENERATOR_VERSION = "1"
NOISE_KINDS = ("gaussian", "gumbel", "none")


@dataclass(frozen=True)
class GraphSpec:
    d: int
    scheme: str = "er"
    k: float = 3
    seed: int = 0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("need d >= 2")
        if self.k < 1:
            raise ValueError("need k >= 1")
        if self.scheme == "er":
            if self.k * self.d > self.d * (self.d - 1) / 2:
                raise ValueError(f"ER{self.k} needs k <= (d-1)/2 = {(self.d - 1) / 2} for d={self.d}")
        elif self.scheme == "sf":
            if self.k >= self.d or int(self.k) != self.k:
                raise ValueError(f"SF needs an integer k < d, got k={self.k}, d={self.d}")
        else:
            raise ValueError(f"unknown graph scheme {self.scheme!r}")


def gen_er(spec: GraphSpec, rng: Rng | None = None) -> np.ndarray:
    """Erdos-Renyi DAG with ``k*d`` expected edges, oriented along a random permutation."""
    rng = rng or Rng(spec.seed)
    d = spec.d
    perm = rng.permutation(d)
    prob = min(1.0, 2.0 * spec.k / (d - 1))
    iu, ju = np.triu_indices(d, 1)
    keep = rng.uniform(0.0, 1.0, iu.size) < prob
    b = np.zeros((d, d))
    b[perm[iu[keep]], perm[ju[keep]]] = 1.0
    return b


def gen_sf(spec: GraphSpec, rng: Rng | None = None) -> np.ndarray:
    """Scale-free DAG by preferential attachment.

    ``k`` seed nodes start fully connected; every later node attaches to
    ``k`` distinct existing nodes drawn with probability proportional to
    degree.  Edges point from the new node to the nodes it attaches to, so
    hubs collect in-edges; vertex labels are then randomly permuted.
    """
    rng = rng or Rng(spec.seed)
    d, k = spec.d, int(spec.k)
    b = np.zeros((d, d))
    deg = np.zeros(d)
    for i in range(k):
        for j in range(i):
            b[i, j] = 1.0
    deg[:k] = k - 1
    for v in range(k, d):
        targets = _weighted_sample(deg[:v], k, rng)
        b[v, targets] = 1.0
        deg[targets] += 1
        deg[v] = k
    perm = rng.permutation(d)
    out = np.zeros((d, d))
    out[np.ix_(perm, perm)] = b
    return out


def _weighted_sample(weights: np.ndarray, k: int, rng: Rng) -> np.ndarray:
    w = weights.astype(float).copy()
    if w.sum() <= 0:
        w[:] = 1.0
    chosen = []
    for u in rng.uniform(0.0, 1.0, k):
        if w.sum() <= 0:
            w = np.where(np.isin(np.arange(w.size), chosen), 0.0, 1.0)
        cdf = np.cumsum(w)
        i = min(int(np.searchsorted(cdf, u * cdf[-1], side="right")), w.size - 1)
        while w[i] == 0:
            i -= 1
        chosen.append(i)
        w[i] = 0.0
    return np.array(chosen, dtype=int)


def gen_graph(spec: GraphSpec, rng: Rng | None = None) -> np.ndarray:
    return gen_er(spec, rng) if spec.scheme == "er" else gen_sf(spec, rng)


def assign_weights(b, rng: Rng) -> np.ndarray:
    """Edge weights uniform on ``[-2, -0.5] U [0.5, 2]``."""
    b = np.asarray(b, dtype=float)
    topological_sort(b)
    rows, cols = np.nonzero(b)
    m = rows.size
    sign = np.where(rng.uniform(0.0, 1.0, m) < 0.5, -1.0, 1.0)
    mag = rng.uniform(0.5, 2.0, m)
    a = np.zeros_like(b)
    a[rows, cols] = sign * mag
    return a


def _noise(kind: str, n: int, d: int, rng: Rng) -> np.ndarray:
    if kind == "gaussian":
        return rng.gaussian(0.0, 1.0, n * d).reshape(n, d)
    if kind == "gumbel":
        return rng.gumbel(0.0, 1.0, n * d).reshape(n, d)
    if kind == "none":
        return np.zeros((n, d))
    raise ValueError(f"unknown noise kind {kind!r}; expected one of {NOISE_KINDS}")


def sample_linear_sem(a0, n: int, noise: str, rng: Rng) -> Dataset:
    """``n`` samples of ``X_j = sum_i a0[i, j] X_i + Z_j`` in topological order.

    ``noise="none"`` sets ``Z = 0``, so every sample is zero.
    """
    a0 = np.asarray(a0, dtype=float)
    order = topological_sort(a0)
    d = a0.shape[0]
    z = _noise(noise, n, d, rng)
    x = np.zeros((n, d))
    for j in order:
        x[:, j] = x @ a0[:, j] + z[:, j]
    return Dataset(x)


def sample_exact_sem(a0, n: int, rng: Rng) -> Dataset:
    """Linear-SEM data whose noise has exactly zero mean and identity covariance.

    The Gaussian noise matrix is orthonormalized so ``Z^T Z = n I``; the
    sample second moments then equal the population ones and least squares
    restricted to the true ordering returns the true weights to rounding
    error.  Test hook for recovery checks free of sampling noise.
    """
    a0 = np.asarray(a0, dtype=float)
    order = topological_sort(a0)
    d = a0.shape[0]
    if n <= d:
        raise ValueError("need n > d")
    g = rng.gaussian(0.0, 1.0, n * d).reshape(n, d)
    g -= g.mean(axis=0)
    q, _ = np.linalg.qr(g)
    z = np.sqrt(n) * q
    x = np.zeros((n, d))
    for j in order:
        x[:, j] = x @ a0[:, j] + z[:, j]
    return Dataset(x)


def simulate(spec: GraphSpec, n: int, noise: str) -> tuple[np.ndarray, Dataset]:
    """Ground-truth weighted DAG and a dataset, all drawn from ``Rng(spec.seed)``."""
    if noise not in NOISE_KINDS:
        raise ValueError(f"unknown noise kind {noise!r}; expected one of {NOISE_KINDS}")
    rng = Rng(spec.seed)
    b = gen_graph(spec, rng)
    a0 = assign_weights(b, rng)
    return a0, sample_linear_sem(a0, n, noise, rng)


__all__ = [
    "GraphSpec", "gen_er", "gen_sf", "gen_graph", "assign_weights", "sample_linear_sem",
    "sample_exact_sem", "simulate", "NotADagError", "GENERATOR_VERSION", "NOISE_KINDS",
]
