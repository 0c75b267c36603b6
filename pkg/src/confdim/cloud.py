"""Weighted point clouds standing in for pushed-forward measures, and a fixed-radius grid index."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


class ResolutionWarning(UserWarning):
    """A query radius is below the sampling resolution of the cloud."""


class GridIndex:
    """Uniform grid with cell size ``cell``; radius-``r`` queries scan the 3^d neighbouring cells.

    Queries with ``r <= cell`` are exact.
    """

    def __init__(self, points: np.ndarray, cell: float):
        if cell <= 0:
            raise ValueError("cell size must be positive")
        self.points = np.ascontiguousarray(points, dtype=float)
        self.cell = float(cell)
        n, d = self.points.shape
        self.d = d
        ij = np.floor(self.points / self.cell).astype(np.int64)
        self._lo = ij.min(axis=0) - 1
        span = ij.max(axis=0) - self._lo + 2
        self._strides = np.cumprod(np.concatenate([[1], span[:-1]])).astype(np.int64)
        if float(np.prod(span.astype(float))) > 2.0**62:
            raise ValueError("grid too fine for the cloud extent")
        keys = (ij - self._lo) @ self._strides
        self.order = np.argsort(keys, kind="stable")
        sk = keys[self.order]
        self.keys, self.starts = np.unique(sk, return_index=True)
        self.ends = np.append(self.starts[1:], n)
        offs = np.indices((3,) * d).reshape(d, -1).T - 1
        self._offsets = offs @ self._strides

    def _cell_key(self, x: np.ndarray) -> np.ndarray:
        return (np.floor(x / self.cell).astype(np.int64) - self._lo) @ self._strides

    def candidates(self, x: np.ndarray):
        """``(query_id, point_id)`` pairs for every point in the 3^d cells around each query."""
        x = np.atleast_2d(x)
        keys = self._cell_key(x)[:, None] + self._offsets[None, :]
        pos = np.searchsorted(self.keys, keys)
        pos_c = np.minimum(pos, len(self.keys) - 1)
        hit = self.keys[pos_c] == keys
        s = np.where(hit, self.starts[pos_c], 0)
        e = np.where(hit, self.ends[pos_c], 0)
        cnt = (e - s).ravel()
        qid = np.repeat(np.repeat(np.arange(len(x)), keys.shape[1]), cnt)
        base = np.repeat(s.ravel() - np.concatenate([[0], np.cumsum(cnt)[:-1]]), cnt)
        slot = np.arange(cnt.sum()) + base
        return qid, self.order[slot]

    def pairs(self, x: np.ndarray, r: float, batch: int | None = None):
        """Yield ``(query_id, point_id)`` arrays of all points within closed distance r."""
        if r > self.cell * (1 + 1e-12):
            raise ValueError("query radius exceeds the grid cell size")
        x = np.atleast_2d(x)
        if batch is None:
            # keep roughly 4e6 candidate pairs in memory at a time
            per_query = 3**self.d * len(self.points) / len(self.keys)
            batch = int(np.clip(4e6 / per_query, 1, 4096))
        for start in range(0, len(x), batch):
            xb = x[start : start + batch]
            q, p = self.candidates(xb)
            diff = self.points[p] - xb[q]
            keep = np.einsum("ij,ij->i", diff, diff) <= r * r
            yield q[keep] + start, p[keep]

    def query(self, x, r: float) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))[:1]
        (_, p), = list(self.pairs(x, r))
        return np.sort(p)


@dataclass
class PointCloud:
    points: np.ndarray
    weights: np.ndarray
    words: np.ndarray | None = None
    pos_error: np.ndarray | None = None
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        self.points = p
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(p),):
            raise ValueError("one weight per point is required")
        if len(p) and (np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12):
            raise ValueError("weights must be positive and sum to 1")
        self.weights = w
        self.pos_error = np.zeros(len(p)) if self.pos_error is None else np.asarray(self.pos_error, dtype=float)

    @classmethod
    def uniform(cls, points, pos_error=None) -> "PointCloud":
        p = np.asarray(points, dtype=float)
        return cls(p, np.full(len(p), 1.0 / len(p)), None, pos_error)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def resolution(self) -> float:
        """Radii below this are dominated by position errors."""
        return 2.0 * float(self.pos_error.max()) if self.n else 0.0

    def diameter(self) -> float:
        p = self.points
        if self.d == 1:
            return float(p.max() - p.min())
        try:
            from scipy.spatial import ConvexHull

            v = p[ConvexHull(p).vertices]
        except Exception:
            lo, hi = p.min(axis=0), p.max(axis=0)
            return float(np.linalg.norm(hi - lo))
        if len(v) > 4000:
            v = v[:: len(v) // 4000 + 1]
        diff = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((diff**2).sum(-1).max()))

    def index(self, r: float) -> GridIndex:
        key = float(r)
        if key not in self._index:
            self._index.clear()
            self._index[key] = GridIndex(self.points, r)
        return self._index[key]

    def ball_mass(self, x, r: float) -> float:
        """Total weight of points within closed distance r of x."""
        if r <= 0:
            raise ValueError("r must be positive")
        if r < self.resolution:
            import warnings

            warnings.warn(f"r={r:.3g} is below the resolution {self.resolution:.3g}", ResolutionWarning)
        x = np.asarray(x, dtype=float).reshape(1, -1)
        diff = self.points - x
        dist2 = np.einsum("ij,ij->i", diff, diff)
        return float(self.weights[dist2 <= r * r].sum())

    def subset(self, mask) -> "PointCloud":
        w = self.weights[mask]
        words = None if self.words is None else self.words[mask]
        return PointCloud(self.points[mask], w / w.sum(), words, self.pos_error[mask])

    def to_csv(self, path) -> None:
        write_cloud_csv(self, path)


def word_string(word) -> str:
    w = [int(s) for s in word]
    return "".join(map(str, w)) if all(s < 10 for s in w) else ".".join(map(str, w))


def write_cloud_csv(cloud: PointCloud, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["word"] + [f"x_{k + 1}" for k in range(cloud.d)] + ["weight", "pos_error"])
        for k in range(cloud.n):
            word = "" if cloud.words is None else word_string(cloud.words[k])
            wr.writerow([word] + [repr(float(v)) for v in cloud.points[k]]
                        + [repr(float(cloud.weights[k])), repr(float(cloud.pos_error[k]))])
