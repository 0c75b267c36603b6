"""The rotation cocycle, the skew product and empirical density diagnostics for its orbits."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from . import rotations
from .conformal import ConformalSystem, Similarity
from .symbolic import InfiniteWord

log = logging.getLogger(__name__)

ATOM_EPS = 1e-9
VERDICT_SUFFICIENT = "verified-sufficient-criterion"
VERDICT_DENSE = "consistent-with-dense"
VERDICT_ATOMS = "atoms-detected"


def rotation_cocycle(system: ConformalSystem, word, base):
    """``O_w(x)``: the rotation part of the derivative of ``f_w`` at ``x``."""
    w = tuple(word)
    if not w:
        return rotations.identity(system.d)
    x = np.asarray(base, dtype=float).reshape(1, -1)
    _, _, rot = system.chain(np.asarray(w, dtype=np.int64), x)
    return rot[0]


def cocycle(system: ConformalSystem, word: InfiniteWord, depth: int | None = None):
    """``O_{i_1}(Phi(sigma i))``, with ``Phi`` realized to ``depth`` symbols."""
    depth = depth or system.default_depth(1e-13)
    w = word.take(depth + 1)
    tail, _, _ = system.chain(w[1:], system.V.center[None, :], track=False)
    _, rot = system._step_derivative(w[:1], tail)
    return rot[0]


def skew_product(system: ConformalSystem, word: InfiniteWord, O, depth: int | None = None):
    """One step of ``(i, O) -> (sigma i, O cocycle(i))``."""
    step = cocycle(system, word, depth)
    nxt = rotations.compose(O, step, system.d)
    if system.d == 2:
        nxt = rotations.wrap(nxt)
    return word.shift(1), nxt


@dataclass
class RotationOrbit:
    entries: np.ndarray
    base: dict
    d: int

    @property
    def N(self) -> int:
        return len(self.entries)

    @property
    def angles(self) -> np.ndarray:
        if self.d != 2:
            raise ValueError("angles are only defined in the plane")
        return self.entries


def _word_descriptor(word: InfiniteWord) -> dict:
    desc = {"prefix": list(word.prefix)}
    if word.period:
        desc["period"] = list(word.period)
    else:
        desc.update(seed=word.seed, offset=word.offset)
    return desc


def orbit_sequence(system: ConformalSystem, word: InfiniteWord, N: int, depth: int | None = None,
                   closed_form: bool = False) -> RotationOrbit:
    """``O_{i|n}(Phi(sigma^n i))`` for ``n = 1..N``.

    Uses ``O_{i|n}(x_{sigma^n i}) = O_{i|n-1}(x_{sigma^{n-1} i}) O_{i_n}(x_{sigma^n i})``;
    each tail point is the depth-``depth`` image of the centre of V. With
    ``closed_form`` (constant-rotation planar similarities only) the entries are
    plain partial sums of the per-symbol angles.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    symbols = word.take(N)
    if closed_form:
        if not (isinstance(system, Similarity) and system.d == 2):
            raise ValueError("closed form needs a planar similarity system")
        ang = rotations.cumulative_angle(system.angles[symbols])
        return RotationOrbit(ang, _word_descriptor(word), 2)
    depth = depth or system.default_depth(1e-13)
    full = word.take(N + depth)
    if np.any(full[:depth] < 0):
        raise ValueError("word has negative symbols")
    # rows n-1 hold i_{n+1} .. i_{n+depth}, the realized tail of sigma^n i
    idx = np.arange(1, N + 1)[:, None] + np.arange(depth)[None, :]
    tails, _, _ = system.chain(full[idx], system.V.center[None, :], track=False)
    _, steps = system._step_derivative(symbols, tails)
    if system.d == 2:
        entries = rotations.cumulative_angle(steps)
    else:
        entries = np.empty((N, system.d, system.d))
        acc = np.eye(system.d)
        for n in range(N):
            acc = acc @ steps[n]
            if (n + 1) % 64 == 0:
                acc = rotations.reorthonormalize(acc, system.d)
            entries[n] = acc
    return RotationOrbit(entries, _word_descriptor(word), system.d)


# ---------------------------------------------------------------------------
# diagnostics


def star_discrepancy(u: np.ndarray) -> float:
    """Star discrepancy of points in [0, 1)."""
    x = np.sort(np.asarray(u, dtype=float))
    n = len(x)
    if n == 0:
        raise ValueError("empty sample")
    i = np.arange(1, n + 1)
    return float(min(1.0, max(np.max(i / n - x), np.max(x - (i - 1) / n))))


def _clusters_on_circle(angles: np.ndarray, eps: float) -> np.ndarray:
    """Sizes of eps-clusters (single linkage) of angles on the circle."""
    a = np.sort(rotations.wrap(angles))
    gaps = np.diff(a)
    cuts = np.flatnonzero(gaps > eps)
    sizes = np.diff(np.concatenate([[0], cuts + 1, [len(a)]]))
    wrap_gap = a[0] + rotations.TWO_PI - a[-1]
    if len(sizes) > 1 and wrap_gap <= eps:
        sizes = np.concatenate([[sizes[0] + sizes[-1]], sizes[1:-1]])
    return sizes


def _clusters_matrices(mats: np.ndarray, eps: float) -> np.ndarray:
    keys = np.round(mats.reshape(len(mats), -1) / eps).astype(np.int64)
    _, counts = np.unique(keys, axis=0, return_counts=True)
    return counts


@dataclass
class DensityDiagnostic:
    checkpoints: np.ndarray
    discrepancy: np.ndarray
    verdict: str
    n_clusters: int
    clusters_for_half: int
    extra: dict = field(default_factory=dict)

    @property
    def final_discrepancy(self) -> float:
        return float(self.discrepancy[-1])


def _atlas(d: int, n_ref: int = 64, n_cal: int = 20000, seed: int = 0):
    refs = rotations.haar(d, n_ref, seed, "atlas-references").reshape(n_ref, -1)
    cal = rotations.haar(d, n_cal, seed, "atlas-calibration").reshape(n_cal, -1)
    probs = np.bincount(_nearest(cal, refs), minlength=n_ref) / n_cal
    return refs, probs


def _nearest(x: np.ndarray, refs: np.ndarray) -> np.ndarray:
    d2 = (x**2).sum(1)[:, None] - 2 * x @ refs.T + (refs**2).sum(1)[None, :]
    return np.argmin(d2, axis=1)


def _checkpoints(N: int, count: int = 24) -> np.ndarray:
    c = np.unique(np.geomspace(16, N, count).astype(int)) if N >= 16 else np.array([N])
    return c[c <= N]


def density_diagnostic(orbit: RotationOrbit, eps: float = ATOM_EPS, checkpoints=None) -> DensityDiagnostic:
    """Empirical equidistribution of an orbit against Haar measure, and an atom check.

    In the plane the discrepancy is the star discrepancy of ``angle / 2 pi``;
    in higher dimension it is the total-variation distance between the
    orbit's occupation of a fixed Voronoi atlas of SO(d) and the atlas's Haar
    cell probabilities. The verdict is "atoms-detected" when half the orbit
    sits in fewer than sqrt(N) eps-clusters.
    """
    N = orbit.N
    if N < 16:
        raise ValueError("orbit must have at least 16 entries")
    cps = _checkpoints(N) if checkpoints is None else np.asarray(checkpoints, dtype=int)
    extra = {}
    if orbit.d == 2:
        u = rotations.wrap(orbit.entries) / rotations.TWO_PI
        disc = np.array([star_discrepancy(u[:n]) for n in cps])
        sizes = _clusters_on_circle(orbit.entries, eps)
    else:
        refs, probs = _atlas(orbit.d)
        cells = _nearest(orbit.entries.reshape(N, -1), refs)
        disc = []
        for n in cps:
            freq = np.bincount(cells[:n], minlength=len(refs)) / n
            disc.append(0.5 * np.abs(freq - probs).sum())
        disc = np.array(disc)
        freq = np.bincount(cells, minlength=len(refs))
        exp = probs * N
        ok = exp > 0
        extra["chi_square"] = float(((freq[ok] - exp[ok]) ** 2 / exp[ok]).sum())
        sizes = _clusters_matrices(orbit.entries, eps)
    sizes = np.sort(sizes)[::-1]
    need = int(np.searchsorted(np.cumsum(sizes), 0.5 * N) + 1)
    verdict = VERDICT_ATOMS if need < math.sqrt(N) else VERDICT_DENSE
    return DensityDiagnostic(cps, np.clip(disc, 0.0, 1.0), verdict, len(sizes), need, extra)


# ---------------------------------------------------------------------------
# the periodic-word sufficient criterion


@dataclass
class PeriodicCheck:
    word: tuple
    angle_over_pi: float
    nearest_rational: Fraction
    distance: float
    irrational: bool


def periodic_point(system: ConformalSystem, u, iters: int | None = None) -> np.ndarray:
    """``x_{uuu...}``, the fixed point of ``f_u``."""
    u = tuple(u)
    reps = iters or max(1, -(-system.default_depth(1e-15) // len(u)))
    x = system.V.center[None, :]
    word = np.asarray(u * reps, dtype=np.int64)
    y, _, _ = system.chain(word, x, track=False)
    return y[0]


def sufficient_criterion(system: ConformalSystem, max_len: int = 4, tol: float = 1e-9,
                         max_den: int = 10000) -> list:
    """Test ``O_u(x_{u u u ...})`` for irrationality on every word with ``|u| <= max_len``.

    An angle is reported irrational when no fraction with denominator up to
    ``max_den`` lies within ``tol`` of ``angle / pi``; this is evidence at
    numerical precision, not a proof. Planar systems only.
    """
    if system.d != 2:
        raise ValueError("the periodic-word criterion is implemented for d = 2 only")
    out = []
    for n in range(1, max_len + 1):
        for u in product(range(system.m), repeat=n):
            x = periodic_point(system, u)
            ang = float(np.angle(np.exp(1j * rotation_cocycle(system, u, x))))
            a = ang / math.pi
            frac = Fraction(a).limit_denominator(max_den)
            dist = abs(a - float(frac))
            out.append(PeriodicCheck(u, a, frac, dist, dist > tol))
    return out


@dataclass
class A2Report:
    verdict: str
    orbit_verdict: str
    witness: tuple | None
    discrepancy: float
    checks: list


def a2_verdict(system: ConformalSystem, N: int = 4096, max_len: int = 4) -> A2Report:
    """Three-valued evidence for density of the cocycle orbit.

    The orbit diagnostic runs on the periodic word of the first criterion
    witness (or on ``000...`` when there is none).
    """
    checks = sufficient_criterion(system, max_len) if system.d == 2 else []
    witness = next((c.word for c in checks if c.irrational), None)
    base = InfiniteWord.periodic(witness or (0,), system.m)
    diag = density_diagnostic(orbit_sequence(system, base, N))
    if witness is not None:
        verdict = VERDICT_SUFFICIENT
    else:
        verdict = diag.verdict
    return A2Report(verdict, diag.verdict, witness, diag.final_discrepancy, checks)
