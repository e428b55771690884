"""Decay-integral conditions on the subordinated kernel, with nu = 2 sigma.

Four integrals of the heat kernel and its gradients against
e^(-1/(4s)) s^(-1-sigma) (two of them with the extra weight 1 + 1/s)
must be dominated by t^q / (d^2 + t^2)^((n+nu)/2) with q depending on the
derivative order.  Each check evaluates the integral on a (d, t) grid and
fits the best constant; a finite fit over the sampled range is the
numerical verdict.

The s-integral has two asymptotic regimes and is split at s = 1: on
(0, 1] the substitution v = 1/(4s) produces a Gamma-type integrand that
tames both the flat exponential and the s^(-1-sigma) growth, while
[1, inf) goes to the adaptive integrator directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import QuadratureError
from .heat_kernel import BoundFit, HeatKernelEvaluator
from .numerics import adaptive_integrate, gamma_fn
from .reports import EstimateReport

CONDITION_NAMES = ("kernel", "grad", "grad_weighted", "mixed")

_SPEC = {
    # name: (profile kind, has 1+1/s weight, rhs t-power offset from nu)
    "kernel": ("p", True, 0),
    "grad": ("grad", False, -1),
    "grad_weighted": ("grad", True, -1),
    "mixed": ("mixed", False, -2),
}


@dataclass(frozen=True)
class ConditionFit:
    name: str
    sigma: float
    nu: float
    fitted_c_const: float
    argmax_d: float
    argmax_t: float
    n_samples: int
    values: np.ndarray = field(repr=False)      # LHS on the (d, t) grid
    dgrid: np.ndarray = field(repr=False)
    tgrid: np.ndarray = field(repr=False)

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.fitted_c_const))


def condition_integral(evaluator: HeatKernelEvaluator, sigma: float, name: str,
                       d: float, t: float, rel_tol: float = 1e-8) -> float:
    """One decay integral at a single (d, t) point."""
    kind, weighted, _ = _SPEC[name]
    t2 = t * t

    def weight(s):
        return 1.0 + 1.0 / s if weighted else np.ones_like(s)

    def lower(v):       # s in (0, 1] via v = 1/(4s)
        s = 1.0 / (4.0 * v)
        ker = np.abs(evaluator.profile_vs_tau(d, t2 * s, kind))
        return 4.0 ** sigma * ker * weight(s) * np.exp(-v) * v ** (sigma - 1.0)

    def upper(s):
        ker = np.abs(evaluator.profile_vs_tau(d, t2 * s, kind))
        return ker * weight(s) * np.exp(-1.0 / (4.0 * s)) * s ** (-1.0 - sigma)

    try:
        v_lo, _ = adaptive_integrate(lower, 0.25, math.inf, rel_tol=rel_tol)
        v_hi, _ = adaptive_integrate(upper, 1.0, math.inf, rel_tol=rel_tol)
    except QuadratureError as exc:
        raise QuadratureError(
            f"{name} integral did not converge at d={d:.6g}, t={t:.6g}: {exc}",
            value=exc.value, err_est=exc.err_est) from exc
    return v_lo + v_hi


def check_condition(evaluator: HeatKernelEvaluator, sigma: float, name: str,
                    dgrid, tgrid, rel_tol: float = 1e-8) -> ConditionFit:
    """Fit the best constant of one condition over a (d, t) grid."""
    if name not in _SPEC:
        raise ValueError(f"unknown condition {name!r}")
    nu = 2.0 * sigma
    n = evaluator.manifold.dim
    _, _, t_off = _SPEC[name]
    dgrid = np.asarray(dgrid, dtype=float)
    tgrid = np.asarray(tgrid, dtype=float)
    vals = np.empty((len(dgrid), len(tgrid)))
    for i, d in enumerate(dgrid):
        for k, t in enumerate(tgrid):
            vals[i, k] = condition_integral(evaluator, sigma, name,
                                            float(d), float(t), rel_tol)
    lam = dgrid[:, None] ** 2 + tgrid[None, :] ** 2
    ratio = vals * lam ** (0.5 * (n + nu)) / tgrid[None, :] ** (nu + t_off)
    imax = int(np.argmax(ratio))
    i, k = np.unravel_index(imax, ratio.shape)
    return ConditionFit(name=name, sigma=sigma, nu=nu,
                        fitted_c_const=float(ratio[i, k]),
                        argmax_d=float(dgrid[i]), argmax_t=float(tgrid[k]),
                        n_samples=vals.size, values=vals,
                        dgrid=dgrid, tgrid=tgrid)


def check_kernel_decay(evaluator, sigma, dgrid, tgrid, rel_tol=1e-8):
    return check_condition(evaluator, sigma, "kernel", dgrid, tgrid, rel_tol)


def check_gradient_decay(evaluator, sigma, dgrid, tgrid, rel_tol=1e-8):
    return check_condition(evaluator, sigma, "grad", dgrid, tgrid, rel_tol)


def check_gradient_decay_weighted(evaluator, sigma, dgrid, tgrid, rel_tol=1e-8):
    return check_condition(evaluator, sigma, "grad_weighted", dgrid, tgrid, rel_tol)


def check_mixed_gradient_decay(evaluator, sigma, dgrid, tgrid, rel_tol=1e-8):
    return check_condition(evaluator, sigma, "mixed", dgrid, tgrid, rel_tol)


@dataclass(frozen=True)
class AdmissibilityReport:
    sigma: float
    nu: float
    conditions: dict            # name -> ConditionFit

    @property
    def passed(self) -> bool:
        return all(c.finite for c in self.conditions.values())


def admissibility_report(evaluator: HeatKernelEvaluator, sigma: float,
                         dgrid, tgrid, rel_tol: float = 1e-8,
                         names=CONDITION_NAMES) -> AdmissibilityReport:
    conds = {name: check_condition(evaluator, sigma, name, dgrid, tgrid, rel_tol)
             for name in names}
    return AdmissibilityReport(sigma=sigma, nu=2.0 * sigma, conditions=conds)


def default_dt_grid(evaluator: HeatKernelEvaluator, n_d: int = 24, n_t: int = 24,
                    t_max: float | None = None):
    """Log-spaced (d, t) grid with d/t spanning about four decades."""
    m = evaluator.manifold
    d_hi = m.diameter if m.is_compact else 0.25 * m.diameter
    tm = t_max if t_max is not None else (1.0 if m.is_compact else d_hi)
    dgrid = np.concatenate([[0.0], np.geomspace(d_hi * 1e-2, d_hi, n_d - 1)])
    tgrid = np.geomspace(tm * 1e-2, tm, n_t)
    return dgrid, tgrid


def predicted_condition_bound(name: str, fit: BoundFit, sigma: float, n: int,
                              d, t):
    """Upper bound for a condition implied by a fitted Gaussian kernel bound.

    Follows the change of variables tau -> (d^2 + t^2) s: the Gaussian
    bound C tau^(-p) exp(-c d^2/tau) turns each condition integral into
    Gamma values at rate c' = min(c, 1/4).
    """
    _, weighted, _ = _SPEC[name]
    d = np.asarray(d, dtype=float)
    t = np.asarray(t, dtype=float)
    lam = d * d + t * t
    cp = min(fit.c, 0.25)
    a0 = fit.power + sigma
    lead = fit.fitted_c_const * t ** (2.0 * sigma) * lam ** (-a0)
    bound = lead * gamma_fn(a0) / cp ** a0
    if weighted:
        bound = bound + lead * (t * t / lam) * gamma_fn(a0 + 1.0) / cp ** (a0 + 1.0)
    return bound


def lemma_chain_report(evaluator: HeatKernelEvaluator, sigma: float,
                       fits: dict, dgrid, tgrid, rel_slack: float = 1e-6,
                       names=("kernel", "grad", "grad_weighted")) -> EstimateReport:
    """Check that Gaussian-bound fits dominate the computed condition integrals.

    fits maps the profile kind ("kernel", "gradient", "mixed_gradient") to a
    BoundFit.  Valid on the window models, where a single Gaussian bound
    holds at all times; compact models flatten at large time and leave the
    chain's hypothesis range.
    """
    if evaluator.manifold.is_compact:
        raise ValueError("the bound chain needs a window model")
    n = evaluator.manifold.dim
    fit_of = {"kernel": fits["kernel"], "grad": fits["gradient"],
              "grad_weighted": fits["gradient"], "mixed": fits.get("mixed_gradient")}
    worst = 0.0
    where = (float("nan"), float("nan"), "")
    for name in names:
        cond = check_condition(evaluator, sigma, name, dgrid, tgrid)
        pred = predicted_condition_bound(name, fit_of[name], sigma, n,
                                         cond.dgrid[:, None], cond.tgrid[None, :])
        with np.errstate(invalid="ignore", divide="ignore"):
            excess = np.where(pred > 0, cond.values / pred, 0.0)
        k = int(np.argmax(excess))
        i, j = np.unravel_index(k, excess.shape)
        if excess[i, j] > worst:
            worst = float(excess[i, j])
            where = (float(cond.dgrid[i]), float(cond.tgrid[j]), name)
    return EstimateReport(
        name="gaussian-bound-chain", lhs=worst, rhs=1.0,
        fitted_constant=worst, tolerance=1.0 + rel_slack,
        passed=bool(worst <= 1.0 + rel_slack),
        provenance={"argmax_d": where[0], "argmax_t": where[1],
                    "condition": where[2], "sigma": sigma})


__all__ = [
    "CONDITION_NAMES", "ConditionFit", "condition_integral", "check_condition",
    "check_kernel_decay", "check_gradient_decay", "check_gradient_decay_weighted",
    "check_mixed_gradient_decay", "AdmissibilityReport", "admissibility_report",
    "default_dt_grid", "predicted_condition_bound", "lemma_chain_report",
]
