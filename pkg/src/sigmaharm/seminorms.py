"""BMO and Carleson seminorms, square-function energies and pairings.

The sup over balls is discretized by a BallFamily (grid centers times
dyadic radii).  Ball means and tent integrals are normalized by the
member measure sum(w_x, d(x, center) < r), which cancels the grid bias
of small balls against the same discretization used for the integrals.

Global t-integrals over (0, infinity) use dyadic panels with a fixed
Gauss-Legendre rule per panel: the panels refine geometrically toward
t = 0 (where integrands behave like t^(4 sigma - 1)) and stop at a
t_max of several diameters, with geometric tail and closure estimates
reported alongside the value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .extension import ExtensionConfig, ExtensionField, extend
from .manifold import BallFamily, SampleGrid
from .numerics import gauss_legendre_nodes
from .reports import EstimateReport

_CENTER_CHUNK = 512


@dataclass(frozen=True)
class SeminormReport:
    bmo: float
    carleson: float
    ratio: float | None
    bmo_argmax: tuple           # (center tuple, radius)
    carleson_argmax: tuple
    excluded_balls: int
    excluded_tents: int
    provenance: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ProductField:
    """Scalar values sampled on grid x t-nodes with quadrature weights."""
    grid: SampleGrid
    t_nodes: np.ndarray
    t_weights: np.ndarray
    values: np.ndarray          # (len(t_nodes), grid.size)

    def integrate_t_weighted(self, other=None) -> float:
        """integral of t * |self| * |other| over the product domain."""
        v = np.abs(self.values)
        if other is not None:
            v = v * np.abs(other.values)
        per_t = v @ self.grid.weights
        return float(np.dot(self.t_weights * self.t_nodes, per_t))

    def t_energy(self) -> float:
        """integral of t * |self|^2 over the product domain."""
        per_t = (self.values ** 2) @ self.grid.weights
        return float(np.dot(self.t_weights * self.t_nodes, per_t))

    def cone_measure_constant(self) -> float:
        """max over used t of the discrete ball measure over t^n."""
        grid = self.grid
        m = grid.manifold
        d0 = np.squeeze(m.pairwise_distance(grid.points[:1], grid.points), axis=0)
        best = 0.0
        for t in self.t_nodes:
            mu = float(np.sum(grid.weights[d0 < t]))
            best = max(best, mu / t ** m.dim)
        return best


def _center_chunks(n):
    for lo in range(0, n, _CENTER_CHUNK):
        yield lo, min(lo + _CENTER_CHUNK, n)


def bmo_report(grid: SampleGrid, u, family: BallFamily):
    """Discrete sup-over-balls of the mean L1 oscillation, with arg-max."""
    u = np.asarray(u, dtype=float)
    w = grid.weights
    m = grid.manifold
    best, best_ball = 0.0, (tuple(family.centers[0]), float("nan"))
    excluded = 0
    for lo, hi in _center_chunks(family.centers.shape[0]):
        d = m.pairwise_distance(family.centers[lo:hi], grid.points)
        for r in family.radii:
            mask = d < r
            counts = mask.sum(axis=1)
            meas = mask @ w
            wu = mask @ (w * u)
            ok = counts >= 2
            excluded += int(np.sum(~ok))
            if not np.any(ok):
                continue
            means = np.where(ok, wu / np.where(meas > 0, meas, 1.0), 0.0)
            # oscillation per center: sum w |u - mean| over members
            osc = np.abs(u[None, :] - means[:, None]) * w[None, :]
            vals = np.where(ok, (osc * mask).sum(axis=1) / np.where(meas > 0, meas, 1.0), 0.0)
            k = int(np.argmax(vals))
            if vals[k] > best:
                best = float(vals[k])
                best_ball = (tuple(family.centers[lo + k]), float(r))
    return best, best_ball, excluded


def bmo_seminorm(grid: SampleGrid, u, family: BallFamily) -> float:
    if len(family) == 0:
        raise ValueError("empty ball family")
    return bmo_report(grid, u, family)[0]


def tent_t_rule(radius: float, order: int):
    """Gauss-Legendre t-nodes on (0, r); the integrand vanishes linearly at 0."""
    return gauss_legendre_nodes(order, 0.0, radius)


def carleson_report(cfg: ExtensionConfig, u, family: BallFamily, t_order: int = 12):
    """sqrt of the discrete sup over balls of |B|^-1 int_T(B) t |grad U|^2."""
    grid = cfg.grid
    m = grid.manifold
    w = grid.weights
    best, best_ball = 0.0, (tuple(family.centers[0]), float("nan"))
    excluded = 0
    for r in family.radii:
        ts, tw = tent_t_rule(float(r), t_order)
        f = extend(cfg, u, t_levels=ts)
        g = f.full_grad_sq() * ts[:, None]          # t |grad_(x,t) U|^2
        gw = g * w[None, :]
        for lo, hi in _center_chunks(family.centers.shape[0]):
            d = m.pairwise_distance(family.centers[lo:hi], grid.points)
            meas = (d < r) @ w
            ok = meas > 0
            excluded += int(np.sum(~ok))
            acc = np.zeros(hi - lo)
            for it, t in enumerate(ts):
                acc += tw[it] * ((d < (r - t)) @ gw[it])
            vals = np.where(ok, acc / np.where(ok, meas, 1.0), 0.0)
            k = int(np.argmax(vals))
            if vals[k] > best:
                best = float(vals[k])
                best_ball = (tuple(family.centers[lo + k]), float(r))
    return math.sqrt(max(best, 0.0)), best_ball, excluded


def carleson_seminorm(cfg: ExtensionConfig, u, family: BallFamily,
                      t_order: int = 12) -> float:
    if len(family) == 0:
        raise ValueError("empty ball family")
    return carleson_report(cfg, u, family, t_order)[0]


def seminorm_report(cfg: ExtensionConfig, u, family: BallFamily,
                    t_order: int = 12) -> SeminormReport:
    bmo, bmo_arg, excl_b = bmo_report(cfg.grid, u, family)
    car, car_arg, excl_t = carleson_report(cfg, u, family, t_order)
    ratio = car / bmo if bmo > 0 else None
    return SeminormReport(
        bmo=bmo, carleson=car, ratio=ratio, bmo_argmax=bmo_arg,
        carleson_argmax=car_arg, excluded_balls=excl_b, excluded_tents=excl_t,
        provenance={"grid_h": cfg.grid.spacing, "sigma": cfg.sigma,
                    "family": family.provenance, "t_order": t_order})


# -- global t-quadrature ------------------------------------------------------

def global_t_rule(t_max: float, n_panels: int = 36, panel_order: int = 12):
    """Dyadic panels [t_max 2^-(k+1), t_max 2^-k] with a GL rule on each."""
    ts, ws = [], []
    hi = t_max
    for _ in range(n_panels):
        lo = 0.5 * hi
        x, w = gauss_legendre_nodes(panel_order, lo, hi)
        ts.append(x)
        ws.append(w)
        hi = lo
    ts = np.concatenate(ts[::-1])
    ws = np.concatenate(ws[::-1])
    return ts, ws, hi            # hi = lowest covered edge


def _require_mean_zero_on_compact(cfg, u, what):
    m = cfg.grid.manifold
    u = np.asarray(u, dtype=float)
    if m.is_compact:
        mean = cfg.grid.mean(u)
        if abs(mean) > 1e-10 * (np.max(np.abs(u)) + 1e-300):
            raise ValueError(f"{what} on a compact model needs mean-zero data "
                             f"(mean={mean:.3g})")
    return u


@dataclass(frozen=True)
class SquareEnergy:
    e_t: float                  # int t |dtU|^2
    e_x: float                  # int t |grad_x U|^2
    norm_sq: float              # ||u||_L2^2
    tail_est: float
    closure_est: float
    t_max: float

    @property
    def ratio_t(self) -> float:
        return self.e_t / self.norm_sq

    @property
    def ratio_x(self) -> float:
        return self.e_x / self.norm_sq

    @property
    def ratio_total(self) -> float:
        return (self.e_t + self.e_x) / self.norm_sq


def square_energy(cfg: ExtensionConfig, u, t_max: float | None = None,
                  n_panels: int = 36, panel_order: int = 12) -> SquareEnergy:
    """Square-function energies over the half space, with tail estimates."""
    u = _require_mean_zero_on_compact(cfg, u, "square energy")
    m = cfg.grid.manifold
    tm = t_max if t_max is not None else 10.0 * m.diameter
    ts, tw, t_edge = global_t_rule(tm, n_panels, panel_order)
    f = extend(cfg, u, t_levels=ts)
    w = cfg.grid.weights
    dens_t = (f.dtU ** 2) @ w
    dens_x = f.grad_sq() @ w
    e_t = float(np.dot(tw * ts, dens_t))
    e_x = float(np.dot(tw * ts, dens_x))
    # geometric tail from the last two panel aggregates
    dens = ts * (dens_t + dens_x)
    n_last = panel_order
    g2 = float(np.sum((tw * dens)[-n_last:]))
    g1 = float(np.sum((tw * dens)[-2 * n_last:-n_last]))
    tail = g2 * g2 / (g1 - g2) if g1 > g2 > 0 else g2
    closure = float(dens[0]) * t_edge / max(4.0 * cfg.sigma, 1e-2)
    norm_sq = float(np.dot(w, u * u))
    return SquareEnergy(e_t=e_t, e_x=e_x, norm_sq=norm_sq,
                        tail_est=abs(tail), closure_est=abs(closure), t_max=tm)


def cone_functional(cfg: ExtensionConfig, u, t_max: float | None = None,
                    n_panels: int = 24, panel_order: int = 6,
                    t_floor: float | None = None):
    """A(x) = sqrt(int over the cone d(x,y)<t of |grad U|^2 t^(1-n) dy dt).

    Cone slices narrower than the grid spacing are unresolved, so the
    t-range starts at t_floor (twice the spacing by default).  The grid
    mean is harmless here (it extends to a constant, which the gradient
    kills), so unlike the global energies no mean-zero check applies.
    Returns (A values, ProductField of |grad U| on the t-rule used).
    """
    u = np.asarray(u, dtype=float)
    grid = cfg.grid
    m = grid.manifold
    tm = t_max if t_max is not None else 10.0 * m.diameter
    floor = t_floor if t_floor is not None else 2.0 * grid.spacing
    ts, tw, _ = global_t_rule(tm, n_panels, panel_order)
    keep = ts >= floor
    ts, tw = ts[keep], tw[keep]
    f = extend(cfg, u, t_levels=ts)
    mag = np.sqrt(f.full_grad_sq())
    pf = ProductField(grid=grid, t_nodes=ts, t_weights=tw, values=mag)
    return cone_values(pf), pf


def cone_values(pf: ProductField) -> np.ndarray:
    """Cone aggregation of a product field: sqrt(sum w |F|^2 / t^(n-1))."""
    grid = pf.grid
    m = grid.manifold
    n = m.dim
    w = grid.weights
    gsq = (pf.values ** 2) * w[None, :]
    acc = np.zeros(grid.size)
    for lo, hi in _center_chunks(grid.size):
        d = m.pairwise_distance(grid.points[lo:hi], grid.points)
        part = np.zeros(hi - lo)
        for it, t in enumerate(pf.t_nodes):
            part += pf.t_weights[it] * t ** (1 - n) * ((d < t) @ gsq[it])
        acc[lo:hi] = part
    return np.sqrt(np.maximum(acc, 0.0))


def carleson_sup_field(pf: ProductField, family: BallFamily) -> float:
    """sup over balls of |B|^-1 int_T(B) t |F|^2 for an arbitrary field."""
    grid = pf.grid
    m = grid.manifold
    w = grid.weights
    gw = (pf.values ** 2) * (w * 1.0)[None, :]
    best = 0.0
    for r in family.radii:
        live = pf.t_nodes < r
        if not np.any(live):
            continue
        for lo, hi in _center_chunks(family.centers.shape[0]):
            d = m.pairwise_distance(family.centers[lo:hi], grid.points)
            meas = (d < r) @ w
            acc = np.zeros(hi - lo)
            for it in np.nonzero(live)[0]:
                t = pf.t_nodes[it]
                acc += pf.t_weights[it] * t * ((d < (r - t)) @ gw[it])
            vals = np.where(meas > 0, acc / np.where(meas > 0, meas, 1.0), 0.0)
            best = max(best, float(vals.max()))
    return best


def pairing_check(cfg: ExtensionConfig, u, phi, t_max: float | None = None,
                  n_panels: int = 36, panel_order: int = 12,
                  rel_tol: float = 1e-4) -> EstimateReport:
    """Integration-by-parts identity relating int u phi to the t-energies.

    lhs = int_M u phi; rhs = (1/sigma) [int t dtU dtPhi + int t <gradU, gradPhi>].
    The identity (not just an inequality) is asserted at rel_tol.
    """
    u = _require_mean_zero_on_compact(cfg, u, "pairing")
    phi = _require_mean_zero_on_compact(cfg, phi, "pairing")
    m = cfg.grid.manifold
    tm = t_max if t_max is not None else 10.0 * m.diameter
    ts, tw, _ = global_t_rule(tm, n_panels, panel_order)
    fu = extend(cfg, u, t_levels=ts)
    fp = extend(cfg, phi, t_levels=ts)
    w = cfg.grid.weights
    cross = (fu.dtU * fp.dtU + np.sum(fu.gradU * fp.gradU, axis=-1)) @ w
    rhs = float(np.dot(tw * ts, cross)) / cfg.sigma
    lhs = float(np.dot(w, u * phi))
    scale = max(abs(lhs), abs(rhs),
                1e-12 * math.sqrt(float(np.dot(w, u * u)) * float(np.dot(w, phi * phi)))
                + 1e-300)
    gap = abs(lhs - rhs) / scale
    return EstimateReport(
        name="extension-pairing-identity", lhs=lhs, rhs=rhs,
        fitted_constant=gap, tolerance=rel_tol, passed=bool(gap < rel_tol),
        provenance={"sigma": cfg.sigma, "t_max": tm, "n_panels": n_panels,
                    "panel_order": panel_order, "grid_h": cfg.grid.spacing})


def field_magnitude(f: ExtensionField, t_weights) -> ProductField:
    """|grad_(x,t) U| of an extension sampled on its own t levels."""
    return ProductField(grid=f.config.grid, t_nodes=f.t_levels,
                        t_weights=np.asarray(t_weights, dtype=float),
                        values=np.sqrt(f.full_grad_sq()))


def carleson_holder(F: ProductField, G: ProductField, family: BallFamily,
                    stability: float = 0.5) -> EstimateReport:
    """Tent-space Hoelder inequality: int t|F||G| against cone(F) x Carleson(G).

    lhs = int t |F| |G|; rhs = ||A_F||_L1 * sqrt(sup_B |B|^-1 int_T(B) t|G|^2).
    A zero rhs with nonzero lhs contradicts the inequality and fails hard.
    """
    if F.grid is not G.grid or F.t_nodes.shape != G.t_nodes.shape:
        raise ValueError("F and G must share the product grid")
    lhs = F.integrate_t_weighted(G)
    a_f = cone_values(F)
    a_l1 = float(np.dot(F.grid.weights, a_f))
    g_sup = carleson_sup_field(G, family)
    rhs = a_l1 * math.sqrt(g_sup)
    if rhs == 0.0 and lhs > 1e-14:
        return EstimateReport(name="tent-holder", lhs=lhs, rhs=rhs,
                              fitted_constant=float("inf"), tolerance=stability,
                              passed=False, provenance={"reason": "zero rhs, nonzero lhs"})
    fitted = lhs / rhs if rhs > 0 else 0.0
    return EstimateReport(name="tent-holder", lhs=lhs, rhs=rhs,
                          fitted_constant=fitted, tolerance=stability,
                          passed=bool(np.isfinite(fitted)),
                          provenance={"family": family.provenance})


__all__ = [
    "SeminormReport", "ProductField", "bmo_seminorm", "bmo_report",
    "carleson_seminorm", "carleson_report", "seminorm_report", "tent_t_rule",
    "global_t_rule", "SquareEnergy", "square_energy", "cone_functional",
    "cone_values", "carleson_sup_field", "pairing_check", "field_magnitude",
    "carleson_holder",
]
