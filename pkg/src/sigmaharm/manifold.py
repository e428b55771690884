"""Model geometries: distance, volume, sampling grids, balls and tents.

Five homogeneous models are built in: a circle of given circumference, a
flat 2-torus, line and plane windows for the non-compact cases, and the
round 2-sphere.  Points are plain coordinate arrays:

    circle        angle in [0, L)                shape (..., 1)
    torus2        angles (a1, a2)                shape (..., 2)
    euclid_line   x in [-W, W]                   shape (..., 1)
    euclid_plane  (x1, x2) in [-W, W]^2          shape (..., 2)
    sphere2       ambient unit vector * radius   shape (..., 3)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import gauss_legendre_nodes


def _circle_diff(a, b, period):
    d = np.abs(a - b) % period
    return np.minimum(d, period - d)


@dataclass(frozen=True)
class ManifoldModel:
    kind: str
    dim: int
    params: tuple
    is_compact: bool
    diameter: float
    total_volume: float | None          # None for window models
    ahlfors_consts: tuple               # (c_low, c_high) for r <= diameter

    # -- geometry ------------------------------------------------------------

    def check_points(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[-1] != self._coord_dim():
            raise ValueError(f"{self.kind} points need {self._coord_dim()} coordinates")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite point coordinates")
        if self.kind in ("euclid_line", "euclid_plane"):
            w = self.params[0]
            if np.any(np.abs(x) > w * (1 + 1e-12)):
                raise ValueError("point outside the window")
        elif self.kind == "sphere2":
            rho = self.params[0]
            if np.any(np.abs(np.linalg.norm(x, axis=-1) - rho) > 1e-9 * rho):
                raise ValueError("point not on the sphere")
        return x

    def _coord_dim(self):
        return {"circle": 1, "torus2": 2, "euclid_line": 1,
                "euclid_plane": 2, "sphere2": 3}[self.kind]

    def distance(self, x, y):
        """Geodesic distance; validates both points."""
        x, y = self.check_points(x), self.check_points(y)
        return np.squeeze(self._dist(x, y))

    def _dist(self, x, y):
        if self.kind == "circle":
            return _circle_diff(x[..., 0], y[..., 0], self.params[0])
        if self.kind == "torus2":
            d1 = _circle_diff(x[..., 0], y[..., 0], self.params[0])
            d2 = _circle_diff(x[..., 1], y[..., 1], self.params[1])
            return np.hypot(d1, d2)
        if self.kind in ("euclid_line", "euclid_plane"):
            return np.linalg.norm(x - y, axis=-1)
        rho = self.params[0]
        cosang = np.clip(np.sum(x * y, axis=-1) / rho**2, -1.0, 1.0)
        return rho * np.arccos(cosang)

    def pairwise_distance(self, xs, ys):
        """Distance matrix between point sets, shape (len(xs), len(ys))."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        return self._dist(xs[:, None, :], ys[None, :, :])

    def ball_volume(self, radius: float) -> float:
        """Measure of a geodesic ball; exact closed forms (homogeneous models)."""
        if radius <= 0:
            raise ValueError("radius must be positive")
        r = float(radius)
        if self.kind == "circle":
            return min(2.0 * r, self.params[0])
        if self.kind == "euclid_line":
            return 2.0 * r
        if self.kind == "euclid_plane":
            return np.pi * r * r
        if self.kind == "torus2":
            l1, l2 = self.params
            area = np.pi * r * r
            for l in (l1, l2):                       # clip wrapped overhang per axis
                a = 0.5 * l
                if r > a:
                    area -= 2.0 * (r * r * np.arccos(a / r) - a * np.sqrt(r * r - a * a))
            return min(area, l1 * l2)
        rho = self.params[0]
        if r >= np.pi * rho:
            return 4.0 * np.pi * rho**2
        return 2.0 * np.pi * rho**2 * (1.0 - np.cos(r / rho))

    # -- sampling ------------------------------------------------------------

    def sample_grid(self, resolution) -> "SampleGrid":
        """Quadrature grid for integrals over the model.

        resolution: point count (circle/line) or per-axis counts
        (torus/plane/sphere).  Periodic models use equispaced nodes,
        windows use midpoint cells, the sphere uses Gauss-Legendre in
        cos(theta) tensored with equispaced longitudes.
        """
        if self.kind == "circle":
            n = int(resolution)
            l = self.params[0]
            pts = (np.arange(n) * l / n)[:, None]
            return SampleGrid(self, pts, np.full(n, l / n), l / n, (n,))
        if self.kind == "torus2":
            n1, n2 = self._pair(resolution)
            l1, l2 = self.params
            a1 = np.arange(n1) * l1 / n1
            a2 = np.arange(n2) * l2 / n2
            pts = np.stack(np.meshgrid(a1, a2, indexing="ij"), axis=-1).reshape(-1, 2)
            w = np.full(n1 * n2, (l1 / n1) * (l2 / n2))
            return SampleGrid(self, pts, w, max(l1 / n1, l2 / n2), (n1, n2))
        if self.kind == "euclid_line":
            n = int(resolution)
            w = self.params[0]
            h = 2.0 * w / n
            pts = (-w + (np.arange(n) + 0.5) * h)[:, None]
            return SampleGrid(self, pts, np.full(n, h), h, (n,))
        if self.kind == "euclid_plane":
            n1, n2 = self._pair(resolution)
            w = self.params[0]
            h1, h2 = 2.0 * w / n1, 2.0 * w / n2
            x1 = -w + (np.arange(n1) + 0.5) * h1
            x2 = -w + (np.arange(n2) + 0.5) * h2
            pts = np.stack(np.meshgrid(x1, x2, indexing="ij"), axis=-1).reshape(-1, 2)
            return SampleGrid(self, pts, np.full(n1 * n2, h1 * h2), max(h1, h2), (n1, n2))
        n_th, n_ph = self._pair(resolution)
        rho = self.params[0]
        mu, wmu = gauss_legendre_nodes(n_th, -1.0, 1.0)
        phi = np.arange(n_ph) * 2.0 * np.pi / n_ph
        sin_th = np.sqrt(1.0 - mu**2)
        x = np.outer(sin_th, np.cos(phi))
        y = np.outer(sin_th, np.sin(phi))
        z = np.repeat(mu[:, None], n_ph, axis=1)
        pts = rho * np.stack([x, y, z], axis=-1).reshape(-1, 3)
        w = np.repeat(wmu[:, None], n_ph, axis=1).reshape(-1) * rho**2 * 2.0 * np.pi / n_ph
        spacing = rho * max(np.pi / n_th, 2.0 * np.pi / n_ph)
        return SampleGrid(self, pts, w, spacing, (n_th, n_ph))

    @staticmethod
    def _pair(resolution):
        if np.isscalar(resolution):
            return int(resolution), int(resolution)
        n1, n2 = resolution
        return int(n1), int(n2)

    def describe(self) -> str:
        pars = ",".join(f"{p:.12g}" for p in self.params)
        return f"{self.kind}({pars})"


def circle(circumference: float) -> ManifoldModel:
    l = float(circumference)
    if l <= 0:
        raise ValueError("circumference must be positive")
    return ManifoldModel("circle", 1, (l,), True, l / 2.0, l, (2.0, 2.0))


def torus2(l1: float, l2: float) -> ManifoldModel:
    l1, l2 = float(l1), float(l2)
    if min(l1, l2) <= 0:
        raise ValueError("side lengths must be positive")
    diam = 0.5 * np.hypot(l1, l2)
    # ball area is pi r^2 up to the first wrap; past it the area still
    # exceeds that of the inscribed square portion, giving the crude lower constant
    return ManifoldModel("torus2", 2, (l1, l2), True, diam,
                         l1 * l2, (l1 * l2 / diam**2, np.pi))


def euclid_line(half_width: float) -> ManifoldModel:
    w = float(half_width)
    if w <= 0:
        raise ValueError("half_width must be positive")
    return ManifoldModel("euclid_line", 1, (w,), False, 2.0 * w, None, (2.0, 2.0))


def euclid_plane(half_width: float) -> ManifoldModel:
    w = float(half_width)
    if w <= 0:
        raise ValueError("half_width must be positive")
    return ManifoldModel("euclid_plane", 2, (w,), False, 2.0 * np.sqrt(2.0) * w,
                         None, (np.pi, np.pi))


def sphere2(radius: float = 1.0) -> ManifoldModel:
    rho = float(radius)
    if rho <= 0:
        raise ValueError("radius must be positive")
    # 2 pi rho^2 (1 - cos(r/rho)): between (4/pi^2) r^2 and (pi/...) r^2 on [0, pi rho]
    return ManifoldModel("sphere2", 2, (rho,), True, np.pi * rho,
                         4.0 * np.pi * rho**2, (4.0 / np.pi, np.pi))


@dataclass(frozen=True)
class SampleGrid:
    manifold: ManifoldModel
    points: np.ndarray          # (N, coord_dim)
    weights: np.ndarray         # (N,)
    spacing: float
    shape: tuple                # logical grid shape, used by spectral transforms

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def mean(self, values) -> float:
        return self.integrate(values) / float(np.sum(self.weights))


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True)
class BallFamily:
    """Grid centers crossed with dyadic radii; the discrete sup-over-balls."""
    manifold: ManifoldModel
    centers: np.ndarray         # (K, coord_dim)
    radii: np.ndarray           # ascending
    stride: int
    provenance: str

    def __len__(self):
        return self.centers.shape[0] * self.radii.shape[0]

    def __iter__(self):
        for r in self.radii:
            for c in self.centers:
                yield Ball(center=c, radius=float(r))


def enumerate_balls(grid: SampleGrid, r_min: float, r_max: float,
                    stride: int = 1) -> BallFamily:
    """All (strided) grid centers x dyadic radii r_min * 2^k within [r_min, r_max].

    The stride applies per grid axis.  Requires r_min >= 2h so each ball
    holds at least a couple of grid points, and r_max <= diameter.
    """
    m = grid.manifold
    if r_min > r_max:
        radii = np.array([])
    else:
        if r_min < 2.0 * grid.spacing * (1 - 1e-12):
            raise ValueError("r_min must be at least twice the grid spacing")
        if r_max > m.diameter * (1 + 1e-12):
            raise ValueError("r_max must not exceed the diameter")
        ks = np.arange(int(np.floor(np.log2(r_max / r_min) + 1e-12)) + 1)
        radii = r_min * 2.0 ** ks
    if stride < 1:
        raise ValueError("stride must be >= 1")
    idx = np.arange(grid.size).reshape(grid.shape)
    for ax in range(idx.ndim):
        idx = np.take(idx, np.arange(0, idx.shape[ax], stride), axis=ax)
    centers = grid.points[idx.reshape(-1)]
    prov = f"centers=grid[::{stride}] radii=dyadic[{r_min:.6g},{r_max:.6g}]"
    return BallFamily(m, centers, radii, stride, prov)


@dataclass(frozen=True)
class Tent:
    """Truncated cone over a ball: cells (x, t) with d(x, center) < radius - t."""
    base: Ball
    t_nodes: np.ndarray
    t_weights: np.ndarray
    members: tuple              # per t-node: index array into the grid
    grid: SampleGrid = field(repr=False)

    @property
    def is_empty(self) -> bool:
        return all(len(m) == 0 for m in self.members)

    def cell_count(self) -> int:
        return sum(len(m) for m in self.members)

    def measure(self) -> float:
        w = self.grid.weights
        return float(sum(tw * np.sum(w[m]) for tw, m in zip(self.t_weights, self.members)))

    def cells(self):
        """Iterate ((point, t), weight) over all tent cells."""
        for t, tw, m in zip(self.t_nodes, self.t_weights, self.members):
            for i in m:
                yield (self.grid.points[i], float(t)), float(tw * self.grid.weights[i])


def build_tent(grid: SampleGrid, ball: Ball, t_nodes) -> Tent:
    """Materialize the tent over a ball at the given (t, weight) nodes.

    Cell membership is strict: d(x, center) < radius - t.  An empty tent
    (ball holds no grid point) is returned as such, never silently dropped;
    callers decide whether to count or reject it.
    """
    t_nodes = [(float(t), float(w)) for t, w in t_nodes]
    if any(t >= ball.radius for t, _ in t_nodes):
        raise ValueError("all tent t-nodes must satisfy t < radius")
    d = np.squeeze(grid.manifold.pairwise_distance(ball.center[None, :], grid.points), axis=0)
    members = tuple(np.nonzero(d < ball.radius - t)[0] for t, _ in t_nodes)
    ts = np.array([t for t, _ in t_nodes])
    ws = np.array([w for _, w in t_nodes])
    return Tent(base=ball, t_nodes=ts, t_weights=ws, members=members, grid=grid)


__all__ = [
    "ManifoldModel", "SampleGrid", "Ball", "BallFamily", "Tent",
    "circle", "torus2", "euclid_line", "euclid_plane", "sphere2",
    "enumerate_balls", "build_tent",
]
