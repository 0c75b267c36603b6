"""Conformal iterated function systems.

Two families are built in: similarities ``x -> r O x + t`` in any dimension
and the two inverse branches of ``z**2 + c``. Points are ``(N, d)`` float
arrays. Planar systems compute in complex arithmetic internally.

A word ``(i_1, ..., i_n)`` acts as ``f_{i_1} o ... o f_{i_n}``, so the last
symbol is applied first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import rotations, streams

REORTHO_EVERY = 64


class DomainError(ValueError):
    """A composed map left the domain U."""


class ConformalityError(ValueError):
    """A derivative is not a positive scalar times a rotation."""


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains(self, x: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
        dist = np.linalg.norm(np.atleast_2d(x) - self.center, axis=-1)
        return dist < self.radius * (1.0 + rtol)

    def sample(self, n: int, seed: int, purpose: str = "ball") -> np.ndarray:
        """Uniform points in the ball."""
        g = streams.generator(seed, purpose)
        v = g.standard_normal((n, self.d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        rad = self.radius * g.random(n) ** (1.0 / self.d)
        return self.center + v * rad[:, None]

    def boundary(self, n: int, shrink: float = 1.0) -> np.ndarray:
        """``n`` deterministic points on the sphere of radius ``shrink * radius``."""
        rad = self.radius * shrink
        if self.d == 1:
            return self.center + np.array([[-rad], [rad]])
        if self.d == 2:
            t = np.arange(n) * (2 * np.pi / n)
            return self.center + rad * np.column_stack([np.cos(t), np.sin(t)])
        # Fibonacci-like spread via a fixed seed
        g = streams.generator(12345, "sphere")
        v = g.standard_normal((n, self.d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return self.center + rad * v

    def sample_closure(self, n: int, seed: int, purpose: str = "closure") -> np.ndarray:
        """Half uniform interior points, half uniform boundary points."""
        inner = self.sample(n - n // 2, seed, purpose + "/in")
        g = streams.generator(seed, purpose + "/bd")
        v = g.standard_normal((n // 2, self.d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return np.vstack([inner, self.center + self.radius * v])


class ConformalSystem:
    """Base class: subclasses supply one-step maps and one-step derivatives.

    ``_step(sym, x)`` applies ``f_sym`` pointwise (``sym`` is an int array
    broadcast against the rows of ``x``); ``_step_derivative(sym, x)``
    returns ``(r, rot)`` with ``r`` the scalar part and ``rot`` the rotation
    part (angles when d == 2).
    """

    d: int
    m: int
    U: Ball
    kind: str = "abstract"

    def __init__(self):
        self._V = None
        self._c2 = None

    # -- subclass hooks -------------------------------------------------
    def _step(self, sym, x):
        raise NotImplementedError

    def _step_derivative(self, sym, x):
        raise NotImplementedError

    @property
    def r_star(self) -> float:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError

    # -- domains ----------------------------------------------------------
    @property
    def V(self) -> Ball:
        """A ball with ``f_a(V) inside V``, strictly between the attractor and U."""
        if self._V is None:
            self._V = self._inner_domain()
        return self._V

    def _inner_domain(self) -> Ball:
        c, R = self.U.center, self.U.radius
        lo, hi = 0.0, R
        # smallest radius whose ball is mapped into itself, by bisection
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self._maps_ball_into_itself(Ball(c, mid)):
                hi = mid
            else:
                lo = mid
        return Ball(c, 0.5 * (hi + R))

    def _maps_ball_into_itself(self, ball: Ball) -> bool:
        pts = np.vstack([ball.boundary(256), ball.center[None, :]])
        for a in range(self.m):
            img = self._step(np.full(len(pts), a), pts)
            if not ball.contains(img, rtol=-1e-9).all():
                return False
        return True

    # -- words ------------------------------------------------------------
    def chain(self, words: np.ndarray, x: np.ndarray, track: bool = True, check_domain: bool = False):
        """Apply words row-wise; returns ``(f_w(x), r_w(x), O_w(x))``.

        ``words`` is ``(N, n)`` (or ``(n,)`` broadcast over rows of ``x``).
        The scalar and rotation parts follow the chain rule, accumulated from
        the innermost map outward.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        words = np.asarray(words, dtype=np.int64)
        if words.ndim == 1:
            words = np.broadcast_to(words, (len(x), len(words)))
        if len(x) == 1 and len(words) > 1:
            x = np.broadcast_to(x, (len(words), self.d))
        n = words.shape[1]
        y = x.copy()
        r = np.ones(len(y))
        rot = rotations.identity(self.d, (len(y),))
        for step, k in enumerate(range(n - 1, -1, -1)):
            sym = words[:, k]
            if track:
                rk, ok = self._step_derivative(sym, y)
                r = r * rk
                rot = rotations.compose(ok, rot, self.d)
                if (step + 1) % REORTHO_EVERY == 0:
                    rot = rotations.reorthonormalize(rot, self.d)
            y = self._step(sym, y)
            if check_domain and not self.U.contains(y).all():
                raise DomainError(f"composition left U after {step + 1} maps")
        if track:
            rot = rotations.reorthonormalize(rot, self.d) if self.d != 2 else rotations.wrap(rot)
        return y, r, rot

    def rbar(self, words: np.ndarray, n_boundary: int = 256) -> np.ndarray:
        """``sup_{x in V} r_w(x)`` for each row of ``words``."""
        words = np.atleast_2d(np.asarray(words, dtype=np.int64))
        pts = self._extremal_points(n_boundary)
        P = len(pts)
        W = np.repeat(words, P, axis=0)
        X = np.tile(pts, (len(words), 1))
        _, r, _ = self.chain(W, X)
        return r.reshape(len(words), P).max(axis=1)

    def rlower_word(self, words: np.ndarray, n_boundary: int = 256) -> np.ndarray:
        """``inf_{x in V} r_w(x)`` for each row of ``words``."""
        words = np.atleast_2d(np.asarray(words, dtype=np.int64))
        pts = self._extremal_points(n_boundary)
        P = len(pts)
        _, r, _ = self.chain(np.repeat(words, P, axis=0), np.tile(pts, (len(words), 1)))
        return r.reshape(len(words), P).min(axis=1)

    def _extremal_points(self, n: int) -> np.ndarray:
        # |f'| of a holomorphic map without critical points takes its extremes
        # on the boundary; the center is kept for the constant case.
        return np.vstack([self.V.boundary(n), self.V.center[None, :]])

    def ratio_fn(self):
        """Word -> rbar, for refined-alphabet construction."""
        cache: dict = {}

        def fn(word):
            if not word:
                return 1.0
            if word not in cache:
                cache[word] = float(self.rbar(np.array([word]))[0])
            return cache[word]

        return fn

    @property
    def r_lower(self) -> float:
        """``inf {r_a(x) : a, x in V}``."""
        return float(self.rlower_word(np.arange(self.m)[:, None]).min())

    @property
    def rho(self) -> float:
        """``max {r_a(x) : a, x in V}``, so that ``rbar_i <= rho**|i|``."""
        return float(self.rbar(np.arange(self.m)[:, None]).max())

    def attractor_sample(self, n: int = 512, depth: int | None = None, seed: int = 0) -> np.ndarray:
        depth = depth or self.default_depth(1e-10)
        g = streams.generator(seed, "attractor")
        words = g.integers(0, self.m, size=(n, depth))
        y, _, _ = self.chain(words, self.V.center[None, :], track=False)
        return y

    def default_depth(self, tol: float = 1e-9) -> int:
        rho = min(self.rho, 0.999)
        return max(1, int(math.ceil(math.log(tol / max(self.V.diameter, 1e-300)) / math.log(rho))))

    @property
    def c2(self) -> float:
        """A fixed-seed estimate of the metric distortion constant."""
        if self._c2 is None:
            self._c2 = estimate_distortion(self, n_words=200, n_pairs=32, seed=0).C2_hat
        return self._c2


class Similarity(ConformalSystem):
    """Similarities ``f_a(x) = ratio_a * O_a x + t_a`` in R^d."""

    kind = "similarity"

    def __init__(self, ratios, rotations_, translations, d: int | None = None, U: Ball | None = None):
        super().__init__()
        t = np.atleast_2d(np.asarray(translations, dtype=float))
        self.m = len(t)
        self.d = d or t.shape[1]
        self.ratios = np.broadcast_to(np.asarray(ratios, dtype=float), (self.m,)).copy()
        if np.any(self.ratios <= 0):
            raise ValueError("similarity ratios must be positive")
        rot = np.asarray(rotations_, dtype=float)
        if self.d == 2 and rot.ndim <= 1:
            self.angles = np.broadcast_to(rot, (self.m,)).copy()
            self.matrices = rotations.as_matrix(self.angles, 2)
        else:
            self.matrices = np.broadcast_to(rot, (self.m, self.d, self.d)).copy()
            for mat in self.matrices:
                if rotations.orthogonality_residual(mat, self.d) > 1e-10:
                    raise ConformalityError("rotation part is not in SO(d)")
            self.angles = rotations.angle_of(self.matrices) if self.d == 2 else None
        self.translations = t
        self.linear = self.ratios[:, None, None] * self.matrices
        self.U = U or self._default_U()

    @classmethod
    def planar(cls, ratios, angles, translations) -> "Similarity":
        return cls(ratios, angles, translations, d=2)

    def fixed_points(self) -> np.ndarray:
        eye = np.eye(self.d)
        return np.array([np.linalg.solve(eye - A, t) for A, t in zip(self.linear, self.translations)])

    def _invariant_radius(self, c):
        if np.any(self.ratios >= 1):
            return None
        off = np.einsum("aij,j->ai", self.linear, c) + self.translations - c
        return float(np.max(np.linalg.norm(off, axis=1) / (1 - self.ratios)))

    def _default_U(self) -> Ball:
        if np.any(self.ratios >= 1):
            return Ball(np.zeros(self.d), 1.0)
        c = self.fixed_points().mean(axis=0)
        R = self._invariant_radius(c)
        R = R if R > 0 else 1.0
        return Ball(c, 1.5 * R)

    def _inner_domain(self) -> Ball:
        R = self._invariant_radius(self.U.center)
        if R is None:
            return Ball(self.U.center, 0.5 * self.U.radius)
        R = R if R > 0 else 0.5 * self.U.radius
        return Ball(self.U.center, 0.5 * (R + self.U.radius))

    def _step(self, sym, x):
        sym = np.asarray(sym)
        return np.einsum("nij,nj->ni", self.linear[sym], x) + self.translations[sym]

    def _step_derivative(self, sym, x):
        sym = np.asarray(sym)
        r = self.ratios[sym]
        if self.d == 2:
            return r, self.angles[sym]
        return r, self.matrices[sym]

    def rbar(self, words, n_boundary: int = 0):
        words = np.atleast_2d(np.asarray(words, dtype=np.int64))
        return np.exp(np.log(self.ratios)[words].sum(axis=1))

    rlower_word = rbar

    @property
    def r_star(self) -> float:
        return float(self.ratios.max())

    @property
    def c2(self) -> float:
        return 1.0

    def descriptor(self) -> dict:
        if self.d == 2:
            return {
                "kind": "similarity2d",
                "maps": [
                    {"ratio": float(r), "angle_rad": float(a), "translation": [float(v) for v in t]}
                    for r, a, t in zip(self.ratios, self.angles, self.translations)
                ],
            }
        if self.d == 1:
            return {
                "kind": "similarity1d",
                "maps": [{"ratio": float(r), "translation": float(t[0])} for r, t in zip(self.ratios, self.translations)],
            }
        return {
            "kind": "similarity",
            "d": self.d,
            "maps": [
                {"ratio": float(r), "rotation": O.tolist(), "translation": [float(v) for v in t]}
                for r, O, t in zip(self.ratios, self.matrices, self.translations)
            ],
        }


JULIA_THRESHOLD = (5.0 + 2.0 * math.sqrt(6.0)) / 4.0


class Julia(ConformalSystem):
    """Inverse branches ``f_1(z) = sqrt(z - c)`` and ``f_2(z) = -sqrt(z - c)``.

    The square root is cut along the ray from 0 through ``c``; for admissible
    c the translate ``U - c`` stays clear of that ray, so both branches are
    holomorphic on U. Symbol 0 is ``f_1`` and symbol 1 is ``f_2``.
    """

    kind = "julia"
    d = 2
    m = 2

    def __init__(self, c: complex):
        super().__init__()
        self.c = complex(c)
        self.U = Ball(np.zeros(2), math.sqrt(2.0 * abs(self.c)))
        self._half_turn = np.exp(0.5j * np.angle(-self.c)) if self.c != 0 else 1.0
        self._unturn = np.conj(self._half_turn) ** 2

    def _sqrt(self, w):
        return self._half_turn * np.sqrt(w * self._unturn)

    @staticmethod
    def _to_c(x):
        return x[:, 0] + 1j * x[:, 1]

    @staticmethod
    def _to_r(z):
        return np.column_stack([z.real, z.imag])

    def _step(self, sym, x):
        s = self._sqrt(self._to_c(x) - self.c)
        return self._to_r(np.where(np.asarray(sym) == 0, s, -s))

    def _step_derivative(self, sym, x):
        w = 0.5 / self._sqrt(self._to_c(x) - self.c)
        w = np.where(np.asarray(sym) == 0, w, -w)
        return np.abs(w), np.angle(w)

    def polynomial(self, x):
        z = self._to_c(np.atleast_2d(x))
        return self._to_r(z * z + self.c)

    @property
    def alpha(self) -> np.ndarray:
        """The fixed point ``(1 + sqrt(1 - 4c)) / 2`` of ``f_1``."""
        a = 0.5 * (1.0 + np.sqrt(1.0 - 4.0 * self.c))
        return np.array([a.real, a.imag])

    @property
    def derivative_bound(self) -> float:
        gap = abs(self.c) - math.sqrt(abs(2.0 * self.c))
        return 0.5 * gap**-0.5 if gap > 0 else math.inf

    @property
    def r_star(self) -> float:
        return self.derivative_bound

    @property
    def admissible(self) -> bool:
        return abs(self.c) > JULIA_THRESHOLD

    def descriptor(self) -> dict:
        return {"kind": "julia", "c_re": self.c.real, "c_im": self.c.imag}


# ---------------------------------------------------------------------------
# word-level operations


def _as_words(word):
    return np.asarray(tuple(word), dtype=np.int64).reshape(1, -1)


def compose_map(system: ConformalSystem, word, x) -> np.ndarray:
    """``f_{i_1}(f_{i_2}(...f_{i_n}(x)))``; the empty word is the identity."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if not system.U.contains(x).all():
        raise DomainError("starting point outside U")
    w = np.asarray(tuple(word), dtype=np.int64)
    y, _, _ = system.chain(w, x, track=False, check_domain=True)
    return y


def derivative_decomposition(system: ConformalSystem, word, x):
    """``(r_i(x), O_i(x))`` with ``f_i'(x) = r_i(x) O_i(x)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    _, r, rot = system.chain(np.asarray(tuple(word), dtype=np.int64), x)
    return r, rot


def canonical_point(system: ConformalSystem, word, x0=None, c2: float | None = None):
    """``f_i(x0)`` and the bound ``C2 * diam(V) * rbar_i`` on its distance to Phi."""
    word = tuple(word)
    if not word:
        raise ValueError("canonical_point needs a nonempty word")
    x0 = system.V.center if x0 is None else np.asarray(x0, dtype=float)
    y = compose_map(system, word, x0)[0]
    c2 = system.c2 if c2 is None else c2
    bound = c2 * system.V.diameter * float(system.rbar(_as_words(word))[0])
    return y, bound


@dataclass
class DistortionReport:
    C1_hat: float
    C2_hat: float
    samples: int
    stabilized: bool
    history: list = field(default_factory=list)


def _distortion_maxima(system: ConformalSystem, n_words: int, n_pairs: int, seed: int, max_len: int):
    g = streams.generator(seed, "distortion-words")
    V = system.V
    c1, c2_hi, c2_lo = 1.0, 1.0, 1.0
    lengths = 1 + np.arange(n_words) % max_len
    for L in np.unique(lengths):
        k = int(np.sum(lengths == L))
        words = g.integers(0, system.m, size=(k, L))
        rb = system.rbar(words)
        W = np.repeat(words, n_pairs, axis=0)
        x = V.sample_closure(len(W), seed, f"distortion-x/{L}")
        y = V.sample_closure(len(W), seed, f"distortion-y/{L}")
        fx, rx, _ = system.chain(W, x)
        fy, ry, _ = system.chain(W, y, track=True)
        ratio = rx / ry
        c1 = max(c1, float(ratio.max()), float((1 / ratio).max()))
        dist = np.linalg.norm(x - y, axis=1)
        ok = dist > 1e-12
        q = np.linalg.norm(fx - fy, axis=1)[ok] / (np.repeat(rb, n_pairs)[ok] * dist[ok])
        c2_hi = max(c2_hi, float(q.max()))
        c2_lo = min(c2_lo, float(q.min()))
    return c1, max(c2_hi, 1.0 / c2_lo)


def estimate_distortion(
    system: ConformalSystem, n_words: int = 400, n_pairs: int = 64, seed: int = 0, max_len: int = 10
) -> DistortionReport:
    """Monte Carlo maxima of ``r_i(x)/r_i(y)`` and of the metric sandwich constant.

    Samples are drawn twice, the second time with twice as many words; the
    reported values are running maxima over both rounds and ``stabilized``
    says whether the second round moved either by less than 1%.
    """
    if n_words < 1 or n_pairs < 1:
        raise ValueError("sample counts must be positive")
    if isinstance(system, Similarity):
        return DistortionReport(1.0, 1.0, n_words * n_pairs, True, [(1.0, 1.0)])
    a1, a2 = _distortion_maxima(system, n_words, n_pairs, seed, max_len)
    b1, b2 = _distortion_maxima(system, 2 * n_words, n_pairs, seed + 1, max_len)
    c1, c2 = max(a1, b1), max(a2, b2)
    stable = abs(c1 - a1) <= 0.01 * a1 and abs(c2 - a2) <= 0.01 * a2
    return DistortionReport(c1, c2, 3 * n_words * n_pairs, stable, [(a1, a2), (c1, c2)])


def metric_sandwich_violations(
    system: ConformalSystem, c2: float, n_triples: int, seed: int, max_len: int = 10
) -> tuple[int, float]:
    """Count sampled ``(i, x, y)`` that break ``C2^-1 rbar|x-y| <= |f_i x - f_i y| <= C2 rbar|x-y|``.

    Returns ``(violations, worst ratio seen)``.
    """
    g = streams.generator(seed, "sandwich-words")
    lengths = 1 + g.integers(0, max_len, size=n_triples)
    bad, worst = 0, 1.0
    for L in np.unique(lengths):
        k = int(np.sum(lengths == L))
        words = g.integers(0, system.m, size=(k, L))
        uniq, inv = np.unique(words, axis=0, return_inverse=True)
        rb = system.rbar(uniq)[inv.ravel()]
        x = system.V.sample(k, seed, f"sandwich-x/{L}")
        y = system.V.sample(k, seed, f"sandwich-y/{L}")
        fx, _, _ = system.chain(words, x, track=False)
        fy, _, _ = system.chain(words, y, track=False)
        q = np.linalg.norm(fx - fy, axis=1) / (rb * np.linalg.norm(x - y, axis=1))
        bad += int(np.sum((q > c2) | (q < 1.0 / c2)))
        worst = max(worst, float(q.max()), float((1 / q).max()))
    return bad, worst


def projection_distortion_terms(system: ConformalSystem, n: int, seed: int, k: int = 1, max_len: int = 8):
    """Sampled terms of the two-sided projection-distortion inequality.

    Returns arrays ``(lhs, main, cross)`` with ``lhs = |pi f_i x - pi f_i y|``,
    ``main = rbar_i |pi O_i(z)(x - y)|`` and
    ``cross = rbar_i (|z-x| + |z-y|) |x-y|``.
    """
    g = streams.generator(seed, "projdis")
    d = system.d
    frames = rotations.haar(d, n, seed, "projdis-frames")[:, :k, :]
    lengths = 1 + g.integers(0, max_len, size=n)
    lhs, main, cross = np.empty(n), np.empty(n), np.empty(n)
    V = system.V
    x = V.sample(n, seed, "projdis-x")
    y = V.sample(n, seed, "projdis-y")
    z = V.sample(n, seed, "projdis-z")
    for L in np.unique(lengths):
        idx = np.flatnonzero(lengths == L)
        words = g.integers(0, system.m, size=(len(idx), L))
        rb = system.rbar(words)
        fx, _, _ = system.chain(words, x[idx], track=False)
        fy, _, _ = system.chain(words, y[idx], track=False)
        _, _, rot = system.chain(words, z[idx])
        O = rotations.as_matrix(rot, d)
        P = frames[idx]
        lhs[idx] = np.linalg.norm(np.einsum("nkd,nd->nk", P, fx - fy), axis=1)
        v = np.einsum("nij,nj->ni", O, x[idx] - y[idx])
        main[idx] = rb * np.linalg.norm(np.einsum("nkd,nd->nk", P, v), axis=1)
        gap = np.linalg.norm(z[idx] - x[idx], axis=1) + np.linalg.norm(z[idx] - y[idx], axis=1)
        cross[idx] = rb * gap * np.linalg.norm(x[idx] - y[idx], axis=1)
    return lhs, main, cross


def fit_projection_constant(system: ConformalSystem, c1: float, n: int = 20000, seed: int = 0) -> float:
    """Smallest C3 making the sampled projection-distortion bounds hold."""
    lhs, main, cross = projection_distortion_terms(system, n, seed)
    need_hi = (lhs - main) / cross
    need_lo = (main / c1 - lhs) / cross
    return float(max(0.0, need_hi.max(), need_lo.max()))


# ---------------------------------------------------------------------------
# assumption checks


@dataclass
class Check:
    name: str
    passed: bool | None
    value: float | None = None
    detail: str = ""


@dataclass
class AssumptionReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if c.passed is False]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def validate_assumptions(system: ConformalSystem, n_samples: int = 4000, seed: int = 0) -> AssumptionReport:
    """Check the standing assumptions on a sample; failures are reported, not raised."""
    checks = []
    if isinstance(system, Julia):
        mod = abs(system.c)
        checks.append(Check("julia |c| threshold", mod > JULIA_THRESHOLD, mod, f"needs |c| > {JULIA_THRESHOLD:.6f}"))
        bound = system.derivative_bound
        checks.append(Check("julia derivative bound", bound < 1.0, bound, "1/2 (|c| - |2c|^(1/2))^(-1/2) < 1"))
        if not system.admissible:
            for name in ("A0 maps into U", "A0 injective", "A0 conformal", "A1 contraction"):
                checks.append(Check(name, None, None, "skipped: c not admissible"))
            return AssumptionReport(checks)

    r_star = system.r_star
    checks.append(Check("A1 certified r* < 1", r_star < 1.0, r_star))
    U = system.U
    pts = np.vstack([U.sample(n_samples, seed, "validate"), U.boundary(256, shrink=1 - 1e-9)])
    inside = True
    for a in range(system.m):
        img = system._step(np.full(len(pts), a), pts)
        inside &= bool(U.contains(img).all())
    checks.append(Check("A0 maps into U", inside))

    collisions = 0
    for a in range(system.m):
        img = system._step(np.full(len(pts), a), pts)
        tree = cKDTree(img)
        for i, j in tree.query_pairs(1e-12 * max(U.radius, 1.0)):
            if np.linalg.norm(pts[i] - pts[j]) > 1e-9 * max(U.radius, 1.0):
                collisions += 1
    checks.append(Check("A0 injective", collisions == 0, float(collisions), "sampled collision search"))

    _, rot = system._step_derivative(np.zeros(len(pts), dtype=np.int64), pts)
    checks.append(Check("A0 conformal", rotations.orthogonality_residual(rot, system.d) <= 1e-10))

    vpts = np.vstack([system.V.sample(n_samples, seed, "validate-V"), system.V.boundary(256)])
    worst = 0.0
    for a in range(system.m):
        r, _ = system._step_derivative(np.full(len(vpts), a), vpts)
        worst = max(worst, float(r.max()))
    checks.append(Check("A1 contraction", worst <= r_star * (1 + 1e-12) and worst < 1.0, worst,
                        "max sampled r_a(x) on V"))
    return AssumptionReport(checks)


def from_descriptor(desc: dict) -> ConformalSystem:
    kind = desc.get("kind")
    if kind == "julia":
        return Julia(complex(desc["c_re"], desc["c_im"]))
    if kind == "similarity2d":
        maps = desc["maps"]
        return Similarity.planar(
            [mp["ratio"] for mp in maps],
            [mp.get("angle_rad", 0.0) for mp in maps],
            [mp["translation"] for mp in maps],
        )
    if kind == "similarity1d":
        maps = desc["maps"]
        return Similarity([mp["ratio"] for mp in maps], np.ones((len(maps), 1, 1)),
                          [[mp["translation"]] for mp in maps], d=1)
    if kind == "similarity":
        maps = desc["maps"]
        d = int(desc["d"])
        return Similarity([mp["ratio"] for mp in maps], [mp.get("rotation", np.eye(d).tolist()) for mp in maps],
                          [mp["translation"] for mp in maps], d=d)
    raise ValueError(f"unknown system kind {kind!r}")
