"""Least-squares SEM loss, acyclicity penalties and the objectives handed to the optimizer.

Data is stored samples-by-variables (``n x d``).  The loss
``(1/2n) ||X - X A||_F^2`` regresses every column on the columns that point
into it, which is the usual ``||X - A^T X||`` with ``X`` transposed.

Objectives take a flat parameter vector and return an :class:`ObjectiveEval`
so they plug straight into :func:`nocurl.lbfgs.minimize`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import DimensionError, as_matrix, matrix_power
from .dagspace import n_upper


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray

    def __post_init__(self):
        x = as_matrix(self.x, "data")
        if x.shape[0] < 1 or x.shape[1] < 2:
            raise DimensionError(f"need n >= 1 samples and d >= 2 variables, got {x.shape}")
        x = np.array(x, dtype=float)
        x.flags.writeable = False
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class ObjectiveEval:
    value: float
    gradient: np.ndarray


def _check(a, data: Dataset) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape != (data.d, data.d):
        raise DimensionError(f"adjacency shape {a.shape} does not match d={data.d}")
    return a


def least_squares_loss(a, data: Dataset) -> float:
    """``(1/2n) ||X - X A||_F^2``, summed exactly rounded so sample order cannot matter."""
    a = _check(a, data)
    r = data.x - data.x @ a
    return 0.5 / data.n * math.fsum((r * r).ravel())


def least_squares_grad(a, data: Dataset) -> np.ndarray:
    a = _check(a, data)
    r = data.x - data.x @ a
    return -(data.x.T @ r) / data.n


def _ls(a: np.ndarray, data: Dataset) -> tuple[float, np.ndarray]:
    x = data.x
    r = x - x @ a
    return 0.5 / data.n * float(np.sum(r * r)), -(x.T @ r) / data.n


def h_poly(a) -> float:
    """``tr[(I + A o A / d)^d] - d``."""
    a = np.asarray(a, dtype=float)
    d = a.shape[0]
    if d == 0:
        return 0.0
    m = np.eye(d) + a * a / d
    return float(np.trace(matrix_power(m, d))) - d


def h_poly_grad(a) -> np.ndarray:
    return _h_poly_both(np.asarray(a, dtype=float))[1]


def _h_poly_both(a: np.ndarray) -> tuple[float, np.ndarray]:
    d = a.shape[0]
    m = np.eye(d) + a * a / d
    e = matrix_power(m, d - 1)
    h = float(np.sum(e.T * m)) - d
    return h, e.T * (2.0 * a)


def h_expm(a) -> float:
    """``tr[exp(A o A)] - d``."""
    a = np.asarray(a, dtype=float)
    return float(np.trace(expm(a * a))) - a.shape[0]


def h_expm_grad(a) -> np.ndarray:
    return _h_expm_both(np.asarray(a, dtype=float))[1]


def _h_expm_both(a: np.ndarray) -> tuple[float, np.ndarray]:
    e = expm(a * a)
    return float(np.trace(e)) - a.shape[0], e.T * (2.0 * a)


H_FUNCS = {"poly": _h_poly_both, "expm": _h_expm_both}


def acyclicity(a, kind: str = "poly") -> tuple[float, np.ndarray]:
    """Value and gradient of the chosen acyclicity measure."""
    try:
        fn = H_FUNCS[kind]
    except KeyError:
        raise ValueError(f"unknown acyclicity measure {kind!r}") from None
    return fn(np.asarray(a, dtype=float))


def step1_objective(a_flat, data: Dataset, lam: float, h_kind: str = "poly") -> ObjectiveEval:
    """``F(A) + lam * h(A)`` over all ``d*d`` entries of ``A`` (diagonal included)."""
    if not lam > 0:
        raise ValueError(f"penalty coefficient must be positive, got {lam}")
    d = data.d
    a = np.asarray(a_flat, dtype=float).reshape(d, d)
    f, g = _ls(a, data)
    h, gh = acyclicity(a, h_kind)
    return ObjectiveEval(f + lam * h, (g + lam * gh).ravel())


def augmented_lagrangian(a_flat, data: Dataset, rho: float, alpha: float, h_kind: str = "poly") -> ObjectiveEval:
    """``F(A) + rho/2 h(A)^2 + alpha h(A)``."""
    d = data.d
    a = np.asarray(a_flat, dtype=float).reshape(d, d)
    f, g = _ls(a, data)
    h, gh = acyclicity(a, h_kind)
    value = f + 0.5 * rho * h * h + alpha * h
    return ObjectiveEval(value, (g + (rho * h + alpha) * gh).ravel())


def _upper_to_skew(upper: np.ndarray, d: int) -> np.ndarray:
    w = np.zeros((d, d))
    iu = np.triu_indices(d, 1)
    w[iu] = upper
    return w - w.T


def w_objective(w_upper, p_fixed, data: Dataset) -> ObjectiveEval:
    """``F(W o relu(grad p))`` over the strict upper triangle of a skew ``W``."""
    d = data.d
    w_upper = np.asarray(w_upper, dtype=float)
    if w_upper.shape != (n_upper(d),):
        raise DimensionError(f"expected {n_upper(d)} weight parameters, got {w_upper.shape}")
    p = np.asarray(p_fixed, dtype=float)
    if p.shape != (d,):
        raise DimensionError("potential length does not match data")
    g_p = p[None, :] - p[:, None]
    r = np.where(g_p > 0, g_p, 0.0)
    w = _upper_to_skew(w_upper, d)
    f, g = _ls(w * r, data)
    gw = g * r
    iu = np.triu_indices(d, 1)
    return ObjectiveEval(f, gw[iu] - gw.T[iu])


def joint_objective(params, data: Dataset) -> ObjectiveEval:
    """``F(W o relu(grad p))`` over ``[W upper triangle, p]`` jointly.

    The relu subgradient at exactly zero is taken as zero.
    """
    d = data.d
    params = np.asarray(params, dtype=float)
    k = n_upper(d)
    if params.shape != (k + d,):
        raise DimensionError(f"expected {k + d} parameters, got {params.shape}")
    w = _upper_to_skew(params[:k], d)
    p = params[k:]
    g_p = p[None, :] - p[:, None]
    active = g_p > 0
    r = np.where(active, g_p, 0.0)
    f, g = _ls(w * r, data)
    gw = g * r
    iu = np.triu_indices(d, 1)
    m = np.where(active, g * w, 0.0)
    grad_p = m.sum(axis=0) - m.sum(axis=1)
    return ObjectiveEval(f, np.concatenate([gw[iu] - gw.T[iu], grad_p]))


def split_joint(params, d: int) -> tuple[np.ndarray, np.ndarray]:
    k = n_upper(d)
    return params[:k], params[k:]

