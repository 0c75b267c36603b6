"""Scaling entropy, entropy and local dimension, projections and the projection statistics.

Two ball-mass engines back the entropy estimates. One-dimensional clouds
are sorted once and every ball mass is a difference of prefix sums, so all N
centres are used. Clouds in two or more dimensions go through a uniform grid
at cell size r, using a prefix subsample of centres. Both report a
delete-block jackknife over 16 blocks (sample index mod 16).
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from . import rotations
from .cloud import GridIndex, PointCloud, ResolutionWarning

log = logging.getLogger(__name__)

N_BLOCKS = 16


class ScaleError(ValueError):
    """The requested radii are outside what the cloud can resolve."""


# ---------------------------------------------------------------------------
# projections


@dataclass(frozen=True, eq=False)
class ProjectionSpec:
    d: int
    k: int
    frame: np.ndarray

    def __post_init__(self):
        f = np.atleast_2d(np.asarray(self.frame, dtype=float))
        object.__setattr__(self, "frame", f)
        if f.shape != (self.k, self.d):
            raise ValueError(f"frame must have shape ({self.k}, {self.d}), got {f.shape}")
        if np.abs(f @ f.T - np.eye(self.k)).max() > 1e-12:
            raise ValueError("frame rows are not orthonormal")

    @classmethod
    def line(cls, angle: float) -> "ProjectionSpec":
        """Orthogonal projection of the plane onto the direction at ``angle``."""
        return cls(2, 1, [[math.cos(angle), math.sin(angle)]])

    @classmethod
    def identity(cls, d: int) -> "ProjectionSpec":
        return cls(d, d, np.eye(d))

    @classmethod
    def coordinate(cls, d: int, axes) -> "ProjectionSpec":
        return cls(d, len(axes), np.eye(d)[list(axes)])

    @classmethod
    def from_rotation(cls, O: np.ndarray, k: int) -> "ProjectionSpec":
        """The first k rows of a rotation matrix."""
        O = np.asarray(O, dtype=float)
        return cls(O.shape[0], k, O[:k])


def project(cloud: PointCloud, spec: ProjectionSpec, O=None) -> PointCloud:
    """``pi O`` applied to every point; weights, words and position errors carry over."""
    if cloud.d != spec.d:
        raise ValueError(f"cloud lives in R^{cloud.d}, projection expects R^{spec.d}")
    A = spec.frame
    if O is not None:
        A = A @ rotations.as_matrix(O, spec.d)
    pts = cloud.points @ A.T
    return PointCloud(pts, cloud.weights, cloud.words, cloud.pos_error)


# ---------------------------------------------------------------------------
# ball masses and scaling entropy


def ball_mass(cloud: PointCloud, x, r: float) -> float:
    return cloud.ball_mass(x, r)


class _Sorted1D:
    """A one-dimensional cloud sorted once, for repeated entropy queries."""

    def __init__(self, x: np.ndarray, w: np.ndarray | None = None):
        x = np.asarray(x, dtype=float).ravel()
        n = len(x)
        order = np.argsort(x, kind="stable")
        self.x = x[order]
        self.w = np.full(n, 1.0 / n) if w is None else np.asarray(w, dtype=float)[order]
        self.W = np.concatenate([[0.0], np.cumsum(self.w)])
        self.blk = (order % N_BLOCKS).astype(np.int64)
        # per-block prefix masses along the sorted order; counts when weights are equal
        self._unit = 1.0 / n if w is None else None
        table = np.zeros((N_BLOCKS, n + 1), dtype=np.int32 if w is None else float)
        for b in range(N_BLOCKS):
            sel = self.blk == b
            np.cumsum(sel if w is None else np.where(sel, self.w, 0.0), out=table[b, 1:])
        self._table = table.ravel()
        self._row = self.blk * (n + 1)

    def entropy(self, r: float, jackknife: bool = True):
        x, w = self.x, self.w
        lo = np.searchsorted(x, x - r, side="left")
        hi = np.searchsorted(x, x + r, side="right")
        m = np.maximum(self.W[hi] - self.W[lo], w)
        logm = np.log(m)
        S = float(w @ logm)
        if not jackknife:
            return -S, None
        blk = self.blk
        Wb = np.bincount(blk, w, N_BLOCKS)
        Sb = np.bincount(blk, w * logm, N_BLOCKS)
        G = np.concatenate([[0.0], np.cumsum(w / m)])
        Tb = np.bincount(blk, w * (G[hi] - G[lo]), N_BLOCKS)
        # mass of each centre's own block inside its ball
        own = (self._table[self._row + hi] - self._table[self._row + lo]).astype(float)
        if self._unit is not None:
            own *= self._unit
        Ub = np.bincount(blk, w * own / m, N_BLOCKS)
        # first-order expansion of log(m - m_b) around log m
        reps = -(S - Sb - (Tb - Ub)) / (1.0 - Wb) + np.log(1.0 - Wb)
        return -S, reps


def _grid_entropy(points, weights, r, n_centers, target, jackknife=True):
    n = len(points)
    n_c = min(n, n_centers)
    n_s = n_c
    for _ in range(3):
        idx = GridIndex(points[:n_s], r)
        Ws = float(weights[:n_s].sum())
        blk_s = np.arange(n_s) % N_BLOCKS
        mass = np.zeros((n_c, N_BLOCKS))
        for q, p in idx.pairs(points[:n_c], r):
            mass += np.bincount(q * N_BLOCKS + blk_s[p], weights[p], n_c * N_BLOCKS).reshape(n_c, N_BLOCKS)
        mean_count = float(mass.sum(axis=1).mean() / Ws * n_s)
        if mean_count >= target or n_s == n:
            break
        n_s = int(min(n, math.ceil(n_s * 1.25 * target / max(mean_count, 1.0))))
    wc = weights[:n_c]
    Wc = float(wc.sum())
    m = mass.sum(axis=1)
    H = float(-(wc @ np.log(m / Ws)) / Wc)
    if not jackknife:
        return H, None
    blk_c = np.arange(n_c) % N_BLOCKS
    WSb = np.bincount(blk_s, weights[:n_s], N_BLOCKS)
    reps = np.empty(N_BLOCKS)
    for b in range(N_BLOCKS):
        keep = blk_c != b
        mb = (m[keep] - mass[keep, b]) / (Ws - WSb[b])
        reps[b] = float(-(wc[keep] @ np.log(mb)) / wc[keep].sum())
    return H, reps


def _jackknife_se(reps) -> float:
    if reps is None:
        return float("nan")
    B = len(reps)
    return float(math.sqrt((B - 1) / B * np.sum((reps - reps.mean()) ** 2)))


@dataclass
class EntropyPoint:
    r: float
    H: float
    se: float
    replicates: np.ndarray | None = field(default=None, repr=False)


class EntropyEngine:
    """Entropy queries on one cloud, sharing the sort (1-d) across radii."""

    def __init__(self, cloud: PointCloud, n_centers: int = 20000, target: int = 400):
        self.cloud = cloud
        self.n_centers = n_centers
        self.target = target
        self._sorted = None
        if cloud.d == 1:
            w = None if np.all(cloud.weights == cloud.weights[0]) else cloud.weights
            self._sorted = _Sorted1D(cloud.points[:, 0], w)

    def __call__(self, r: float, jackknife: bool = True) -> EntropyPoint:
        if r <= 0:
            raise ValueError("r must be positive")
        if r < self.cloud.resolution:
            warnings.warn(f"r={r:.3g} is below the resolution {self.cloud.resolution:.3g}", ResolutionWarning)
        if self._sorted is not None:
            H, reps = self._sorted.entropy(r, jackknife)
        else:
            H, reps = _grid_entropy(self.cloud.points, self.cloud.weights, r, self.n_centers, self.target, jackknife)
        return EntropyPoint(float(r), max(H, 0.0), _jackknife_se(reps), reps)


def scaling_entropy(cloud: PointCloud, r: float, jackknife: bool = True, **kw) -> EntropyPoint:
    """``H_r = -sum_k w_k log(mass of the closed r-ball around x_k)``."""
    return EntropyEngine(cloud, **kw)(r, jackknife)


# ---------------------------------------------------------------------------
# entropy dimension


@dataclass
class EntropyCurve:
    r: np.ndarray
    H: np.ndarray
    se: np.ndarray
    r_min: float
    r_max: float
    slope: float
    intercept: float
    ci_halfwidth: float
    window: np.ndarray

    def rows(self):
        return [(float(a), float(b), float(c)) for a, b, c in zip(self.r, self.H, self.se)]


def geometric_grid(r_min: float, r_max: float, count: int) -> np.ndarray:
    if not 0 < r_min < r_max:
        raise ScaleError(f"need 0 < r_min < r_max, got {r_min}, {r_max}")
    if count < 2:
        raise ValueError("count must be >= 2")
    return np.geomspace(r_min, r_max, count)


def _mean_count(cloud: PointCloud, r: float, engine: EntropyEngine | None) -> float:
    if cloud.d == 1 and engine is not None and engine._sorted is not None:
        s = engine._sorted
        lo = np.searchsorted(s.x, s.x - r, side="left")
        hi = np.searchsorted(s.x, s.x + r, side="right")
        return float(np.mean(hi - lo))
    # neighbours from a prefix subsample, scaled up to the full cloud
    n_s = min(cloud.n, 20000)
    k = min(n_s, 500)
    idx = GridIndex(cloud.points[:n_s], r)
    counts = np.zeros(k)
    for q, _ in idx.pairs(cloud.points[:k], r):
        counts += np.bincount(q, minlength=k)
    return 1.0 + float(counts.mean() - 1.0) * (cloud.n - 1) / max(n_s - 1, 1)


def default_window(cloud: PointCloud, count: int = 12, min_count: float = 30.0,
                   engine: EntropyEngine | None = None) -> np.ndarray:
    """Geometric radii from ``max(8 max pos_error, r(mean count >= min_count))`` to ``diam/8``."""
    r_max = cloud.diameter() / 8.0
    if r_max <= 0:
        raise ScaleError("cloud has zero diameter")
    # the grid engine needs (r_max / r)**d cells to fit in an int64 key
    lo, hi = r_max * (1e-9 if cloud.d == 1 else 10.0 ** (-12.0 / cloud.d)), r_max
    if _mean_count(cloud, hi, engine) < min_count:
        raise ScaleError("too few points: even r_max holds fewer than the minimum neighbour count")
    for _ in range(40):
        mid = math.sqrt(lo * hi)
        if _mean_count(cloud, mid, engine) >= min_count:
            hi = mid
        else:
            lo = mid
        if hi / lo < 1.05:
            break
    r_min = max(hi, 8.0 * float(cloud.pos_error.max()))
    if r_min >= r_max:
        raise ScaleError(f"resolution floor {r_min:.3g} is above r_max {r_max:.3g}; sample deeper or more points")
    return geometric_grid(r_min, r_max, count)


def _fit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0]), float(coef[1])


def entropy_dimension(cloud: PointCloud, r_grid=None, engine: EntropyEngine | None = None,
                      count: int = 12) -> tuple[float, EntropyCurve]:
    """Slope of ``H_r`` against ``-log r`` over the finest half of the radius grid.

    The full curve is returned alongside, since a single slope hides any
    curvature.
    """
    engine = engine or EntropyEngine(cloud)
    r = np.sort(np.asarray(default_window(cloud, count, engine=engine) if r_grid is None else r_grid, dtype=float))
    if len(r) < 4:
        raise ScaleError("need at least 4 radii")
    if r[0] < cloud.resolution:
        raise ScaleError(f"smallest radius {r[0]:.3g} is below the resolution {cloud.resolution:.3g}; "
                         f"the smallest usable radius is {cloud.resolution:.3g}")
    pts = [engine(float(v)) for v in r]
    H = np.array([p.H for p in pts])
    se = np.array([p.se for p in pts])
    half = max(4, -(-len(r) // 2))
    win = np.arange(min(half, len(r)))
    xs = -np.log(r[win])
    slope, icpt = _fit(xs, H[win])
    ci = float("nan")
    if all(p.replicates is not None for p in pts):
        R = np.array([pts[k].replicates for k in win])  # (scales, blocks)
        rep_slopes = np.array([_fit(xs, R[:, b])[0] for b in range(R.shape[1])])
        ci = 1.96 * _jackknife_se(rep_slopes)
    curve = EntropyCurve(r, H, se, float(r[0]), float(r[-1]), slope, icpt, ci, win)
    return slope, curve


def local_dimension(cloud: PointCloud, x, r_grid=None) -> float:
    """Slope of ``log mu(B(x, r))`` against ``log r``."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    r = np.sort(np.asarray(default_window(cloud) if r_grid is None else r_grid, dtype=float))
    if len(r) < 4:
        raise ScaleError("need at least 4 radii")
    if r[0] < cloud.resolution:
        raise ScaleError(f"smallest radius {r[0]:.3g} is below the resolution {cloud.resolution:.3g}")
    dist = np.sqrt(((cloud.points - x) ** 2).sum(axis=1))
    order = np.argsort(dist)
    cw = np.cumsum(cloud.weights[order])
    mass = cw[np.searchsorted(dist[order], r, side="right") - 1]
    if np.any(np.searchsorted(dist[order], r, side="right") == 0):
        raise ScaleError("some ball around x holds no points; x is off the support")
    return _fit(np.log(r), np.log(mass))[0]


# ---------------------------------------------------------------------------
# e_q, E_q and the projection sweep


class QTooSmall(ValueError):
    """The normalizer -log C1^2 + q log(1/rho) is not positive."""


def _eq_radius(C1: float, rho: float, q: int) -> tuple[float, float]:
    if C1 < 1:
        raise ValueError("C1 must be >= 1")
    norm = -2.0 * math.log(C1) + q * math.log(1.0 / rho)
    if norm <= 0:
        raise QTooSmall(f"normalizer {norm:.3g} <= 0 at q={q}; increase q")
    return C1 * C1 * rho**q, norm


def e_q(spec: ProjectionSpec, O, cloud: PointCloud, C1: float, rho: float, q: int) -> float:
    """``H_{C1^2 rho^q}(pi O nu) / (-log C1^2 + q log(1/rho))``."""
    r, norm = _eq_radius(C1, rho, q)
    proj = project(cloud, spec, O)
    return scaling_entropy(proj, r, jackknife=False).H / norm


def _eq_one(points, spec_frame, O, d, radii, norms):
    A = spec_frame @ rotations.as_matrix(O, d)
    proj = points @ A.T
    eng = EntropyEngine(PointCloud.uniform(proj))
    return [eng(r, jackknife=False).H / nm for r, nm in zip(radii, norms)]


def E_q_table(spec: ProjectionSpec, cloud: PointCloud, qs, C1: float, rho: float,
              n_rotations: int = 32, seed: int = 0, threads: int = 1):
    """Monte Carlo ``E_q`` over Haar rotations for several q, reusing one cloud.

    Returns ``(means, stderrs, values)`` with ``values`` of shape
    ``(n_rotations, len(qs))``. The cloud must have uniform weights.
    """
    if n_rotations < 8:
        raise ValueError("n_rotations must be >= 8")
    qs = list(qs)
    rn = [_eq_radius(C1, rho, q) for q in qs]
    radii, norms = [a for a, _ in rn], [b for _, b in rn]
    if spec.d == 2:
        Os = rotations.haar_angles(n_rotations, seed, "eq-rotations")
    else:
        Os = rotations.haar(spec.d, n_rotations, seed, "eq-rotations")
    vals = Parallel(n_jobs=threads)(
        delayed(_eq_one)(cloud.points, spec.frame, O, spec.d, radii, norms) for O in Os
    )
    vals = np.array(vals)
    return vals.mean(axis=0), vals.std(axis=0, ddof=1) / math.sqrt(n_rotations), vals


def E_q(spec: ProjectionSpec, cloud: PointCloud, q: int, C1: float, rho: float,
        n_rotations: int = 32, seed: int = 0, threads: int = 1) -> tuple[float, float]:
    mean, se, _ = E_q_table(spec, cloud, [q], C1, rho, n_rotations, seed, threads)
    return float(mean[0]), float(se[0])


@dataclass
class SweepResult:
    directions: np.ndarray
    estimates: np.ndarray
    ci_halfwidth: np.ndarray
    r_min: float
    r_max: float
    n_samples: int
    beta_ref: float | None

    @property
    def minimum(self) -> float:
        return float(self.estimates.min())

    @property
    def argmin(self):
        return self.directions[int(np.argmin(self.estimates))]


def _sweep_one(points, frame, r_grid):
    proj = PointCloud.uniform(points @ frame.T)
    est, curve = entropy_dimension(proj, r_grid)
    return est, curve.ci_halfwidth


def projection_sweep(cloud: PointCloud, directions, r_grid, beta_ref: float | None = None,
                     k: int = 1, seed: int = 0, threads: int = 1) -> SweepResult:
    """Entropy dimension of ``pi cloud`` for every direction in the grid.

    For planar clouds projected to lines, ``directions`` is an array of angles
    or a count of equally spaced angles in ``[0, pi)``. Otherwise it is a count
    of seeded Haar rotations whose first k rows give the frames.
    """
    if cloud.d == 2 and k == 1:
        dirs = np.arange(directions) * (math.pi / directions) if np.ndim(directions) == 0 else np.asarray(directions, float)
        frames = [ProjectionSpec.line(a).frame for a in dirs]
    else:
        Os = rotations.haar(cloud.d, int(directions), seed, "sweep-frames")
        dirs = np.arange(int(directions))
        frames = [O[:k] for O in Os]
    r_grid = np.sort(np.asarray(r_grid, dtype=float))
    if r_grid[0] < cloud.resolution:
        raise ScaleError(f"smallest radius {r_grid[0]:.3g} is below the resolution {cloud.resolution:.3g}")
    if np.any(cloud.weights != cloud.weights[0]):
        raise ValueError("projection_sweep expects a uniformly weighted cloud")
    out = Parallel(n_jobs=threads)(delayed(_sweep_one)(cloud.points, f, r_grid) for f in frames)
    est = np.array([e for e, _ in out])
    ci = np.array([c for _, c in out])
    return SweepResult(dirs, est, ci, float(r_grid[0]), float(r_grid[-1]), cloud.n, beta_ref)


def pin_distance_dimension(cloud: PointCloud, a, r_grid=None, eps: float | None = None):
    """Entropy dimension of the distances ``|x - a|``, ignoring points within eps of the pin.

    Returns ``(estimate, curve)``; the curve is None when the distance cloud
    is a single atom.
    """
    a = np.asarray(a, dtype=float).reshape(1, -1)
    dist = np.sqrt(((cloud.points - a) ** 2).sum(axis=1))
    eps = 0.01 * cloud.diameter() if eps is None else eps
    keep = dist >= eps
    lost = float(cloud.weights[~keep].sum())
    if lost > 0.1:
        warnings.warn(f"pin exclusion removes {lost:.1%} of the mass", RuntimeWarning)
    if not keep.any():
        raise ValueError("every point lies within eps of the pin")
    w = cloud.weights[keep]
    dc = PointCloud(dist[keep], w / w.sum(), None, cloud.pos_error[keep])
    spread = float(dc.points.max() - dc.points.min())
    if spread <= 1e-12 * max(1.0, float(dc.points.max())):
        return 0.0, None
    return entropy_dimension(dc, r_grid)
