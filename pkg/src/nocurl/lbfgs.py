"""Limited-memory BFGS with a strong-Wolfe line search.

The line search is the bracketing/zoom scheme of Nocedal & Wright
(Algorithms 3.5 and 3.6) with safeguarded cubic interpolation, falling back
to bisection when the interpolant leaves the bracket.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .objectives import ObjectiveEval

Objective = Callable[[np.ndarray], ObjectiveEval]


@dataclass(frozen=True)
class OptimOptions:
    memory: int = 10
    ftol: float = 1e-8
    gtol: float = 1e-8
    max_iters: int = 500
    c1: float = 1e-4
    c2: float = 0.9
    max_ls: int = 40

    def __post_init__(self):
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError("need 0 < c1 < c2 < 1")
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if self.max_iters < 0 or self.max_ls < 1:
            raise ValueError("iteration limits must be positive")


@dataclass
class OptimReport:
    x_final: np.ndarray
    f_final: float
    iterations: int
    converged_by: str
    function_evals: int
    x0: np.ndarray = field(repr=False)
    message: str = ""

    def summary(self) -> dict:
        return {
            "f_final": self.f_final,
            "iterations": self.iterations,
            "converged_by": self.converged_by,
            "function_evals": self.function_evals,
            "message": self.message,
        }


class _Counter:
    def __init__(self, fun: Objective):
        self.fun = fun
        self.calls = 0

    def __call__(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        self.calls += 1
        ev = self.fun(x)
        return float(ev.value), np.asarray(ev.gradient, dtype=float)


def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimizer of the cubic matching values and slopes at ``a`` and ``b``, or None."""
    if a == b:
        return None
    d1 = ga + gb - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc < 0:
        return None
    d2 = math.copysign(math.sqrt(disc), b - a)
    denom = gb - ga + 2.0 * d2
    if denom == 0:
        return None
    t = b - (b - a) * (gb + d2 - d1) / denom
    return t if math.isfinite(t) else None


def _line_search(fun, x, f0, g0, d, step, opts: OptimOptions):
    """Strong-Wolfe step along ``d``; returns ``(t, f, g)`` or None on failure."""
    dg0 = float(g0 @ d)
    evals = 0
    t_prev, f_prev, dg_prev = 0.0, f0, dg0
    best = None
    t = step
    t_max = 1e10 * max(step, 1.0)
    while evals < opts.max_ls:
        f, g = fun(x + t * d)
        evals += 1
        if not math.isfinite(f) or not np.all(np.isfinite(g)):
            # overshoot into overflow: shrink toward the last good point
            t = t_prev + 0.1 * (t - t_prev)
            continue
        dg = float(g @ d)
        if f <= f0 + opts.c1 * t * dg0 and (best is None or f < best[1]):
            best = (t, f, g)
        if f > f0 + opts.c1 * t * dg0 or (evals > 1 and f >= f_prev):
            return _zoom(fun, x, f0, dg0, d, t_prev, f_prev, dg_prev, t, f, dg, opts, opts.max_ls - evals, best)
        if abs(dg) <= -opts.c2 * dg0:
            return t, f, g
        if dg >= 0:
            return _zoom(fun, x, f0, dg0, d, t, f, dg, t_prev, f_prev, dg_prev, opts, opts.max_ls - evals, best)
        t_new = _cubic_min(t_prev, f_prev, dg_prev, t, f, dg)
        lo, hi = t + 1.1 * (t - t_prev), min(t + 10.0 * (t - t_prev), t_max)
        if t_new is None or not lo <= t_new <= hi:
            t_new = hi
        t_prev, f_prev, dg_prev = t, f, dg
        t = t_new
    return best


def _zoom(fun, x, f0, dg0, d, lo, f_lo, dg_lo, hi, f_hi, dg_hi, opts, budget, best):
    for _ in range(max(budget, 0)):
        t = _cubic_min(lo, f_lo, dg_lo, hi, f_hi, dg_hi)
        left, right = min(lo, hi), max(lo, hi)
        margin = 0.1 * (right - left)
        if t is None or not left + margin <= t <= right - margin:
            t = 0.5 * (lo + hi)
        if right - left < 1e-16 * max(1.0, right):
            break
        f, g = fun(x + t * d)
        if not math.isfinite(f):
            hi, f_hi, dg_hi = t, math.inf, 0.0
            continue
        dg = float(g @ d)
        if f <= f0 + opts.c1 * t * dg0 and (best is None or f < best[1]):
            best = (t, f, g)
        if f > f0 + opts.c1 * t * dg0 or f >= f_lo:
            hi, f_hi, dg_hi = t, f, dg
        else:
            if abs(dg) <= -opts.c2 * dg0:
                return t, f, g
            if dg * (hi - lo) >= 0:
                hi, f_hi, dg_hi = lo, f_lo, dg_lo
            lo, f_lo, dg_lo = t, f, dg
    return best


def minimize(objective: Objective, x0, opts: OptimOptions | None = None) -> OptimReport:
    """Minimize a smooth function given as ``x -> ObjectiveEval``.

    Stops when the relative decrease ``|f_prev - f| / max(|f_prev|, |f|, 1)``
    drops below ``ftol``, when ``max|g| < gtol``, or after ``max_iters``
    iterations.  A failed line search ends the run at the best point so far
    with ``converged_by="max_iters"`` and an explanatory ``message``.
    """
    opts = opts or OptimOptions()
    fun = _Counter(objective)
    x0 = np.array(x0, dtype=float)
    x = x0.copy()
    f, g = fun(x)
    if not math.isfinite(f) or not np.all(np.isfinite(g)):
        raise ValueError("objective is not finite at the starting point")

    pairs: deque[tuple[np.ndarray, np.ndarray, float]] = deque(maxlen=opts.memory)
    it = 0
    converged_by, message = "max_iters", ""
    if np.max(np.abs(g), initial=0.0) < opts.gtol:
        return OptimReport(x, f, 0, "gtol", fun.calls, x0)

    while it < opts.max_iters:
        d = _two_loop(g, pairs)
        dg = float(g @ d)
        if not dg < 0:
            pairs.clear()
            d = -g
            dg = float(g @ d)
        step = 1.0 if pairs else min(1.0, 1.0 / max(np.linalg.norm(g), 1e-300))
        found = _line_search(fun, x, f, g, d, step, opts)
        if found is None and pairs:
            pairs.clear()
            d = -g
            found = _line_search(fun, x, f, g, d, min(1.0, 1.0 / np.linalg.norm(g)), opts)
        if found is None:
            message = "line search failed"
            break
        t, f_new, g_new = found
        it += 1
        s = t * d
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))
        x = x + s
        f_prev, f, g = f, f_new, g_new
        if np.max(np.abs(g), initial=0.0) < opts.gtol:
            converged_by = "gtol"
            break
        if abs(f_prev - f) / max(abs(f_prev), abs(f), 1.0) < opts.ftol:
            converged_by = "ftol"
            break
    return OptimReport(x, f, it, converged_by, fun.calls, x0, message)


def _two_loop(g: np.ndarray, pairs) -> np.ndarray:
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q
