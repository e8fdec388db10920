"""DAG-NoCurl and its ablation variants, plus an augmented-Lagrangian baseline.

Variant names::

    nocurl1, nocurl2        penalized solve(s), project, refit W, threshold
    nocurl{1,2}_s           penalized solve(s), raise threshold until acyclic
    nocurl{1,2}_minus       penalized solve(s), project, closed-form W (no refit)
    nocurl{1,2}_plus        nocurl pipeline, then a joint (W, p) solve
    rand_init               joint (W, p) solve from a uniform(0, 1) start
    rand_p                  W solve for a uniform(0, 1) potential, then joint solve

The suffix 1 uses a single penalty coefficient (default 100), suffix 2 a
pair solved in sequence with a warm start (default 10 then 1000).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import partial
from typing import NamedTuple

import numpy as np

from .core import EdgeFlow
from .dagspace import closed_form_w, gamma_raw, incremental_threshold, is_dag, n_upper, pack, threshold, topo_potential
from .lbfgs import OptimOptions, OptimReport, minimize
from .objectives import Dataset, acyclicity, augmented_lagrangian, h_poly, joint_objective, split_joint, step1_objective, w_objective
from .rng import Rng

VARIANTS = (
    "nocurl1", "nocurl2",
    "nocurl1_s", "nocurl2_s",
    "nocurl1_minus", "nocurl2_minus",
    "nocurl1_plus", "nocurl2_plus",
    "rand_init", "rand_p",
)
DEFAULT_LAMBDAS = {1: (100.0,), 2: (10.0, 1000.0)}
THRESHOLD_STEP = 0.05


class InternalError(RuntimeError):
    pass


def _base(variant: str) -> int | None:
    if variant.startswith("nocurl1"):
        return 1
    if variant.startswith("nocurl2"):
        return 2
    return None


@dataclass(frozen=True)
class NoCurlConfig:
    variant: str = "nocurl2"
    lambdas: tuple[float, ...] | None = None
    threshold_eps: float = 0.3
    h_kind: str = "poly"
    optim: OptimOptions = field(default_factory=OptimOptions)
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.h_kind not in ("poly", "expm"):
            raise ValueError(f"unknown acyclicity measure {self.h_kind!r}")
        if self.threshold_eps < 0:
            raise ValueError("threshold must be nonnegative")
        lams = self.lambdas
        if lams is None:
            base = _base(self.variant)
            lams = DEFAULT_LAMBDAS[base] if base else ()
        lams = tuple(float(v) for v in lams)
        if _base(self.variant) and not lams:
            raise ValueError("at least one penalty coefficient is required")
        if any(not v > 0 for v in lams):
            raise ValueError("penalty coefficients must be positive")
        if any(b <= a for a, b in zip(lams, lams[1:])):
            raise ValueError("penalty coefficients must be strictly increasing")
        object.__setattr__(self, "lambdas", lams)


@dataclass
class LearnResult:
    a_hat: np.ndarray
    a_pre: np.ndarray | None
    p_tilde: np.ndarray | None
    w_tilde: EdgeFlow | None
    final_h: float
    wall_time: float
    optim_reports: list[OptimReport]
    variant: str
    final_threshold: float
    lambdas: tuple[float, ...] = ()
    diagnostics: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "variant": self.variant,
            "lambdas": list(self.lambdas),
            "final_h": self.final_h,
            "wall_time": self.wall_time,
            "threshold": self.final_threshold,
            "optimizer": [r.summary() for r in self.optim_reports],
            "iterations": [r.iterations for r in self.optim_reports],
            "diagnostics": self.diagnostics,
        }


class Step1Result(NamedTuple):
    a_pre: np.ndarray
    a_raw: np.ndarray
    reports: list[OptimReport]


def step1(data: Dataset, lambdas, h_kind: str = "poly", eps: float = 0.3,
          optim: OptimOptions | None = None) -> Step1Result:
    """Solve ``F(A) + lam h(A)`` once per coefficient, warm-starting each from the last."""
    d = data.d
    x = np.zeros(d * d)
    reports = []
    for lam in lambdas:
        rep = minimize(partial(step1_objective, data=data, lam=lam, h_kind=h_kind), x, optim)
        reports.append(rep)
        x = rep.x_final
    raw = x.reshape(d, d)
    return Step1Result(threshold(raw, eps), raw, reports)


def step2(a_pre, data: Dataset, optim: OptimOptions | None = None):
    """Project ``a_pre`` to an ordering potential, then refit the weights for that order.

    Returns ``(p, W, gamma(W, p), report)``; ``W`` starts from the
    closed-form lift of ``a_pre``.
    """
    p = topo_potential(a_pre)
    w0 = pack(closed_form_w(a_pre, p))
    rep = minimize(partial(w_objective, p_fixed=p, data=data), w0, optim)
    w = EdgeFlow(_upper(rep.x_final, data.d))
    return p, w, gamma_raw(w.matrix, p), rep


def _upper(vec: np.ndarray, d: int) -> np.ndarray:
    m = np.zeros((d, d))
    m[np.triu_indices(d, 1)] = vec
    return m


def _joint(data: Dataset, w: EdgeFlow, p: np.ndarray, optim) -> tuple[EdgeFlow, np.ndarray, OptimReport]:
    x0 = np.concatenate([pack(w), p])
    rep = minimize(partial(joint_objective, data=data), x0, optim)
    wu, p_new = split_joint(rep.x_final, data.d)
    return EdgeFlow(_upper(wu, data.d)), p_new.copy(), rep


def nocurl_run(data: Dataset, config: NoCurlConfig | None = None) -> LearnResult:
    config = config or NoCurlConfig()
    v = config.variant
    eps = config.threshold_eps
    opt = config.optim
    d = data.d
    reports: list[OptimReport] = []
    diagnostics: dict = {}
    a_pre = p = w = None
    final_eps = eps
    start = time.perf_counter()

    if _base(v):
        s1 = step1(data, config.lambdas, config.h_kind, eps, opt)
        reports += s1.reports
        a_pre = s1.a_pre
        diagnostics["h_step1_raw"] = h_poly(s1.a_raw)
        if v.endswith("_s"):
            a_hat, final_eps = incremental_threshold(s1.a_raw, eps, THRESHOLD_STEP)
        else:
            if v.endswith("_minus"):
                p = topo_potential(a_pre)
                w = closed_form_w(a_pre, p)
            else:
                p, w, _, rep = step2(a_pre, data, opt)
                reports.append(rep)
                if v.endswith("_plus"):
                    w, p, rep = _joint(data, w, p, opt)
                    reports.append(rep)
            a_hat = threshold(gamma_raw(w.matrix, p), eps)
    else:
        rng = Rng(config.seed)
        if v == "rand_init":
            w = EdgeFlow(_upper(rng.uniform(0.0, 1.0, n_upper(d)), d))
            p = rng.uniform(0.0, 1.0, d)
        else:
            p = rng.uniform(0.0, 1.0, d)
            rep = minimize(partial(w_objective, p_fixed=p, data=data), np.zeros(n_upper(d)), opt)
            reports.append(rep)
            w = EdgeFlow(_upper(rep.x_final, d))
        w, p, rep = _joint(data, w, p, opt)
        reports.append(rep)
        a_hat = threshold(gamma_raw(w.matrix, p), eps)

    wall = time.perf_counter() - start
    if not is_dag(a_hat):
        raise InternalError(f"variant {v} produced a cyclic graph")
    return LearnResult(
        a_hat=a_hat, a_pre=a_pre, p_tilde=p, w_tilde=w, final_h=h_poly(a_hat), wall_time=wall,
        optim_reports=reports, variant=v, final_threshold=final_eps, lambdas=config.lambdas,
        diagnostics=diagnostics,
    )


@dataclass(frozen=True)
class BaselineSchedule:
    rho_init: float = 1.0
    rho_factor: float = 10.0
    rho_max: float = 1e16
    progress: float = 0.25
    h_tol: float = 1e-8
    max_outer: int = 100


def notears_baseline(data: Dataset, h_kind: str = "poly", eps: float = 0.3,
                     optim: OptimOptions | None = None,
                     schedule: BaselineSchedule | None = None) -> LearnResult:
    """Augmented-Lagrangian solve of ``min F(A)`` subject to ``h(A) = 0``, then threshold.

    Each subproblem restarts from the last accepted iterate; ``rho`` grows
    tenfold until ``h`` falls to a quarter of its previous value, then the
    multiplier takes a dual step.  If the thresholded graph still has a
    cycle the threshold is raised in steps of 0.05 (recorded in
    ``diagnostics``).
    """
    sch = schedule or BaselineSchedule()
    d = data.d
    a = np.zeros(d * d)
    rho, alpha, h = sch.rho_init, 0.0, np.inf
    reports: list[OptimReport] = []
    trace = []
    start = time.perf_counter()
    for _ in range(sch.max_outer):
        while True:
            rep = minimize(partial(augmented_lagrangian, data=data, rho=rho, alpha=alpha, h_kind=h_kind), a, optim)
            reports.append(rep)
            h_new = acyclicity(rep.x_final.reshape(d, d), h_kind)[0]
            trace.append({"rho": rho, "alpha": alpha, "h": h_new})
            if h_new > sch.progress * h and rho < sch.rho_max:
                rho *= sch.rho_factor
            else:
                break
        a, h = rep.x_final, h_new
        alpha += rho * h
        if h <= sch.h_tol or rho >= sch.rho_max:
            break
    raw = a.reshape(d, d)
    a_hat = threshold(raw, eps)
    final_eps = eps
    diagnostics = {"trajectory": trace, "h_raw": h, "schedule": vars(sch).copy()}
    if not is_dag(a_hat):
        a_hat, final_eps = incremental_threshold(raw, eps + THRESHOLD_STEP, THRESHOLD_STEP)
        diagnostics["threshold_raised"] = True
    wall = time.perf_counter() - start
    return LearnResult(
        a_hat=a_hat, a_pre=raw, p_tilde=None, w_tilde=None, final_h=h_poly(a_hat), wall_time=wall,
        optim_reports=reports, variant="notears", final_threshold=final_eps, diagnostics=diagnostics,
    )


def learn(data: Dataset, variant: str, lambdas=None, eps: float = 0.3, h_kind: str = "poly",
          seed: int = 0, optim: OptimOptions | None = None) -> LearnResult:
    """Dispatch by name; ``"notears"`` selects the baseline."""
    optim = optim or OptimOptions()
    if variant == "notears":
        return notears_baseline(data, h_kind, eps, optim)
    cfg = NoCurlConfig(variant=variant, lambdas=lambdas, threshold_eps=eps, h_kind=h_kind, optim=optim, seed=seed)
    return nocurl_run(data, cfg)


ALL_METHODS = VARIANTS + ("notears",)
