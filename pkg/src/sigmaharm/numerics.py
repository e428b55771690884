"""Quadrature rules and special-function helpers shared by every module.

All raw floating-point integration policy is concentrated here:
generalized Gauss-Laguerre rules for integrals against s^alpha e^(-s),
mapped Gauss-Legendre rules for finite panels, and an adaptive
Gauss-Kronrod integrator for tail integrals on (a, b] with b possibly
infinite.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gamma as gamma_fn
from scipy.special import kv as bessel_kv

from .errors import QuadratureError

MAX_LAGUERRE_ORDER = 256


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights of a fixed quadrature rule.

    For ``gauss_gen_laguerre`` the weights absorb the measure
    s^alpha e^(-s), so sum(w_i f(x_i)) approximates
    integral_0^inf s^alpha e^(-s) f(s) ds.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    order: int
    alpha: float | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.shape != (self.order,) or weights.shape != (self.order,):
            raise ValueError("nodes/weights length must equal order")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


def gen_laguerre_rule(alpha: float, order: int) -> QuadratureRule:
    """Generalized Gauss-Laguerre rule for the weight s^alpha e^(-s).

    Nodes are eigenvalues of the symmetric tridiagonal Jacobi matrix of
    the recurrence (diagonal 2k+alpha+1, off-diagonal sqrt(k(k+alpha))).
    Weights use w_i = 1 / sum_k ptilde_k(x_i)^2 over the orthonormal
    polynomials, evaluated with per-node rescaling so far-out nodes get
    positive weights instead of the underflowed eigenvector components.
    """
    if alpha <= -1.0:
        raise ValueError("alpha must exceed -1 (integrable weight)")
    if not 1 <= order <= MAX_LAGUERRE_ORDER:
        raise ValueError(f"order must lie in [1, {MAX_LAGUERRE_ORDER}]")
    k = np.arange(order, dtype=float)
    diag = 2.0 * k + alpha + 1.0
    off = np.sqrt(k[1:] * (k[1:] + alpha))
    if order == 1:
        return QuadratureRule(nodes=diag.copy(), weights=np.array([gamma_fn(alpha + 1.0)]),
                              kind="gauss_gen_laguerre", order=order, alpha=alpha)
    nodes = eigh_tridiagonal(diag, off, eigvals_only=True)
    log_w = _log_laguerre_weights(alpha, order, nodes, diag, off)
    # far-tail weights can sit below double range; round them up to the
    # smallest positive denormal rather than letting exp underflow to zero
    weights = np.exp(np.maximum(log_w, -740.0))
    return QuadratureRule(nodes=nodes, weights=weights,
                          kind="gauss_gen_laguerre", order=order, alpha=alpha)


def _log_laguerre_weights(alpha, order, nodes, diag, off):
    """log w_i via the orthonormal recurrence, rescaled per step."""
    mu0 = gamma_fn(alpha + 1.0)
    p_prev = np.zeros_like(nodes)
    p_cur = np.full_like(nodes, 1.0 / math.sqrt(mu0))
    ssum = p_cur ** 2
    log_scale = np.zeros_like(nodes)
    for j in range(order - 1):
        p_next = ((nodes - diag[j]) * p_cur - (off[j - 1] * p_prev if j else 0.0)) / off[j]
        p_prev, p_cur = p_cur, p_next
        ssum = ssum + p_cur ** 2
        big = np.abs(p_cur) > 1e100
        if np.any(big):
            f = np.where(big, np.abs(p_cur), 1.0)
            p_prev, p_cur, ssum = p_prev / f, p_cur / f, ssum / f**2
            log_scale = log_scale + np.log(f)
    return -(np.log(ssum) + 2.0 * log_scale)


def gauss_legendre_nodes(order: int, a: float, b: float):
    """Gauss-Legendre nodes/weights mapped to the interval (a, b)."""
    if order < 1:
        raise ValueError("order must be positive")
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def gauss_legendre_rule(order: int, a: float = -1.0, b: float = 1.0) -> QuadratureRule:
    x, w = gauss_legendre_nodes(order, a, b)
    return QuadratureRule(nodes=x, weights=w, kind="gauss_legendre", order=order)


def dyadic_panels(t_min: float, t_max: float):
    """Edges of dyadic panels [t_max/2^(k+1), t_max/2^k] covering (t_min, t_max]."""
    if not (0 < t_min < t_max):
        raise ValueError("need 0 < t_min < t_max")
    edges = [t_max]
    while edges[-1] > t_min:
        edges.append(edges[-1] * 0.5)
    return np.array(edges[::-1])


# 15-point Kronrod extension of 7-point Gauss (QUADPACK constants).
_XGK = np.array([
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0,
])
_WGK = np.array([
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278,
])
_WG = np.array([
    0.1294849661688697, 0.2797053914892767,
    0.3818300505051189, 0.4179591836734694,
])

_K15_X = np.concatenate([-_XGK[:-1], _XGK[::-1]])          # 15 ascending
_K15_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_G7_W = np.zeros(15)
_G7_W[1:-1:2] = np.concatenate([_WG[:-1], _WG[::-1]])       # gauss nodes sit at odd slots


def _panel_estimates(fv: np.ndarray, half: float):
    k15 = half * float(np.dot(_K15_W, fv))
    g7 = half * float(np.dot(_G7_W, fv))
    return k15, abs(k15 - g7)


def adaptive_integrate(f, a: float, b: float, rel_tol: float = 1e-10,
                       abs_floor: float = 1e-14, max_panels: int = 1 << 16):
    """Adaptive Gauss-Kronrod integration of f over (a, b), b may be inf.

    The worst panel (by local error estimate) is bisected until the
    summed error estimate drops below max(rel_tol*|value|, abs_floor).
    An infinite upper limit is mapped to (0, 1) by s = a + u/(1-u),
    which keeps refinement effective near both ends.

    Returns (value, err_est). Raises QuadratureError instead of
    returning a silent value when the panel budget is exhausted.

    f should accept a numpy array of abscissae; scalar-only callables
    are wrapped automatically.
    """
    if rel_tol < 1e-12:
        raise ValueError("rel_tol below 1e-12 is not supported")
    if not np.isfinite(a):
        raise ValueError("lower limit must be finite")
    if math.isinf(b):
        # head in natural coordinates (an endpoint singularity at a stays
        # refinable), tail through s = a + 1 + (1-v)/v whose far end lands
        # at v = 0 where the floating-point grid is dense
        split = a + 1.0

        def tail(v, _g=f, _s=split):
            v = np.asarray(v, dtype=float)
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                return _g(_s + (1.0 - v) / v) / (v * v)

        v1, e1 = adaptive_integrate(f, a, split, rel_tol, abs_floor, max_panels // 2)
        v2, e2 = adaptive_integrate(tail, 0.0, 1.0, rel_tol, abs_floor, max_panels // 2)
        return v1 + v2, e1 + e2
    if not b > a:
        raise ValueError("need b > a")

    def eval_panel(lo, hi):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        xs = mid + half * _K15_X
        try:
            fv = np.asarray(f(xs), dtype=float)
            if fv.shape != xs.shape:
                raise TypeError
        except (TypeError, ValueError):
            fv = np.array([float(f(x)) for x in xs])
        if not np.all(np.isfinite(fv)):
            raise QuadratureError(f"integrand not finite on panel [{lo}, {hi}]")
        return _panel_estimates(fv, half)

    val, err = eval_panel(a, b)
    # heap of (-err, tiebreak, lo, hi, val, err)
    counter = 0
    heap = [(-err, counter, a, b, val, err)]
    total_val, total_err = val, err
    n_panels = 1
    while total_err > max(rel_tol * abs(total_val), abs_floor):
        if n_panels >= max_panels:
            raise QuadratureError(
                f"no convergence after {max_panels} panels "
                f"(value~{total_val:.6g}, err~{total_err:.3g})",
                value=total_val, err_est=total_err)
        _, _, lo, hi, pval, perr = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:        # panel at floating-point resolution
            heapq.heappush(heap, (0.0, counter + 1, lo, hi, pval, 0.0))
            counter += 1
            total_err -= perr
            continue
        v1, e1 = eval_panel(lo, mid)
        v2, e2 = eval_panel(mid, hi)
        total_val += v1 + v2 - pval
        total_err += e1 + e2 - perr
        counter += 2
        heapq.heappush(heap, (-e1, counter - 1, lo, mid, v1, e1))
        heapq.heappush(heap, (-e2, counter, mid, hi, v2, e2))
        n_panels += 1
    return total_val, total_err


# -- special-function helpers ------------------------------------------------
#
# The modified-Bessel profile below is the independent oracle for
# eigenfunction extensions; production code paths must not call it.

def subordination_profile(sigma: float, r):
    """phi_sigma(r) = 2^(1-sigma)/Gamma(sigma) * r^sigma * K_sigma(r).

    Normalized so phi_sigma(0) = 1; at sigma = 1/2 this is exp(-r).
    Test oracle only.
    """
    r = np.asarray(r, dtype=float)
    out = np.ones_like(r)
    pos = r > 0
    out[pos] = (2.0 ** (1.0 - sigma) / gamma_fn(sigma)
                * r[pos] ** sigma * bessel_kv(sigma, r[pos]))
    return out if out.ndim else float(out)


def subordination_profile_deriv(sigma: float, r):
    """d/dr of phi_sigma, using d/dr[r^s K_s(r)] = -r^s K_(s-1)(r). Test oracle only."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    pos = r > 0
    out[pos] = -(2.0 ** (1.0 - sigma) / gamma_fn(sigma)
                 * r[pos] ** sigma * bessel_kv(sigma - 1.0, r[pos]))
    return out if out.ndim else float(out)


__all__ = [
    "QuadratureRule", "gen_laguerre_rule", "gauss_legendre_nodes",
    "gauss_legendre_rule", "dyadic_panels", "adaptive_integrate",
    "gamma_fn", "bessel_kv", "subordination_profile",
    "subordination_profile_deriv", "MAX_LAGUERRE_ORDER",
]
