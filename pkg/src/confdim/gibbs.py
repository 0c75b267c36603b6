"""Potentials, pressure, Gibbs cylinder weights and sampling of the pushed-forward measure.

Finite-range potentials (bernoulli, constant, depth-2 markov, and the
geometric potential of a similarity system) are handled exactly through the
``m x m`` transfer matrix ``M[a, b] = exp(phi(ab...))``: the Gibbs measure is
then the Markov measure built from the Perron eigenvectors of M. The geometric
potential of a non-linear system (Julia branches) is handled through level-n
enumeration.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from . import streams
from .cloud import PointCloud
from .conformal import ConformalSystem, Similarity
from .symbolic import Alphabet, InfiniteWord, RefinedAlphabet

log = logging.getLogger(__name__)


class DepthError(ValueError):
    """A word prefix is too short to evaluate the requested quantity."""


class BracketError(ValueError):
    """Pressure does not change sign on the search interval."""


@dataclass(frozen=True, eq=False)
class Potential:
    kind: str
    m: int
    p: tuple | None = None
    c: float | None = None
    table: np.ndarray | None = None
    s: float | None = None
    system: ConformalSystem | None = None

    # -- constructors -----------------------------------------------------
    @classmethod
    def bernoulli(cls, p) -> "Potential":
        p = tuple(float(v) for v in p)
        if any(not 0.0 < v < 1.0 for v in p) or abs(math.fsum(p) - 1.0) > 1e-12:
            raise ValueError("bernoulli weights must lie in (0, 1) and sum to 1")
        Alphabet(len(p))
        return cls("bernoulli", len(p), p=p)

    @classmethod
    def constant(cls, c: float, m: int) -> "Potential":
        Alphabet(m)
        return cls("constant", m, c=float(c))

    @classmethod
    def markov(cls, table) -> "Potential":
        t = np.asarray(table, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError("markov table must be square")
        Alphabet(t.shape[0])
        return cls("markov", t.shape[0], table=t)

    @classmethod
    def geometric(cls, s: float, system: ConformalSystem) -> "Potential":
        return cls("geometric", system.m, s=float(s), system=system)

    @classmethod
    def from_descriptor(cls, desc: dict, system: ConformalSystem | None = None) -> "Potential":
        kind = desc.get("kind")
        if kind == "bernoulli":
            return cls.bernoulli(desc["p"])
        if kind == "constant":
            m = desc.get("m") or (system.m if system is not None else None)
            if m is None:
                raise ValueError("constant potential needs m or a system")
            return cls.constant(desc["c"], m)
        if kind == "markov":
            return cls.markov(desc["table"])
        if kind == "geometric":
            if system is None:
                raise ValueError("geometric potential needs a system")
            return cls.geometric(desc["s"], system)
        raise ValueError(f"unknown potential kind {kind!r}")

    # -- structure --------------------------------------------------------
    @property
    def finite_range(self) -> bool:
        return self.kind != "geometric" or isinstance(self.system, Similarity)

    @property
    def depth(self) -> int | None:
        """Number of leading symbols phi depends on (None: infinitely many)."""
        return {"constant": 0, "bernoulli": 1, "markov": 2}.get(
            self.kind, 1 if self.finite_range else None
        )

    def log_matrix(self) -> np.ndarray:
        """``log M[a, b] = phi(a b ...)`` for finite-range potentials."""
        m = self.m
        if self.kind == "bernoulli":
            return np.repeat(np.log(self.p)[:, None], m, axis=1)
        if self.kind == "constant":
            return np.full((m, m), self.c)
        if self.kind == "markov":
            return self.table.copy()
        if self.finite_range:
            return np.repeat((self.s * np.log(self.system.ratios))[:, None], m, axis=1)
        raise ValueError("geometric potential of a non-linear system has no finite transfer matrix")

    def var(self, n: int) -> float:
        """``Var_n(phi)``: the largest oscillation of phi on a level-n cylinder."""
        if n < 0:
            raise ValueError("n must be >= 0")
        if self.finite_range:
            L = self.log_matrix()
            if n == 0:
                return float(L.max() - L.min())
            if n == 1:
                return float((L.max(axis=1) - L.min(axis=1)).max())
            return 0.0
        return self._geometric_var(n)

    def _geometric_var(self, n: int, k_points: int = 64) -> float:
        sysm = self.system
        K = sysm.attractor_sample(k_points, seed=7)
        if n == 0:
            words = np.arange(sysm.m)[:, None]
            _, r, _ = sysm.chain(np.repeat(words, len(K), 0), np.tile(K, (sysm.m, 1)))
            lr = np.log(r)
            return float(abs(self.s) * (lr.max() - lr.min()))
        words = Alphabet(sysm.m).words(n)
        W = np.repeat(words, len(K), axis=0)
        X = np.tile(K, (len(words), 1))
        tail, _, _ = sysm.chain(W[:, 1:], X, track=False)
        r, _ = sysm._step_derivative(W[:, 0], tail)
        lr = np.log(r).reshape(len(words), len(K))
        return float(abs(self.s) * (lr.max(axis=1) - lr.min(axis=1)).max())

    def hoelder(self, beta: float | None = None) -> tuple[float, float]:
        """A certificate ``(kappa, beta)`` with ``Var_n <= kappa * beta**n`` for n >= 1."""
        if self.finite_range:
            beta = 0.5 if beta is None else beta
            return self.var(1) / beta, beta
        beta = self.system.rho if beta is None else beta
        kappa = max(self.var(n) / beta**n for n in range(1, 9))
        return kappa, beta

    # -- evaluation -------------------------------------------------------
    def evaluate(self, words: np.ndarray, tail_depth: int | None = None) -> np.ndarray:
        """phi at each row of ``words`` (rows are prefixes of infinite words)."""
        w = np.atleast_2d(np.asarray(words, dtype=np.int64))
        need = self.depth if self.depth is not None else 2
        if w.shape[1] < max(need, 1):
            raise DepthError(f"potential needs {need} symbols, got {w.shape[1]}")
        if self.kind == "constant":
            return np.full(len(w), self.c)
        if self.kind == "bernoulli":
            return np.log(np.asarray(self.p))[w[:, 0]]
        if self.kind == "markov":
            return self.table[w[:, 0], w[:, 1]]
        if self.finite_range:
            return self.s * np.log(self.system.ratios[w[:, 0]])
        sysm = self.system
        x, _, _ = sysm.chain(w[:, 1:], sysm.V.center[None, :], track=False)
        r, _ = sysm._step_derivative(w[:, 0], x)
        return self.s * np.log(r)


def _prefix_array(word, length: int) -> np.ndarray:
    if isinstance(word, InfiniteWord):
        return word.take(length)
    a = np.asarray(tuple(word) if not isinstance(word, np.ndarray) else word, dtype=np.int64)
    if a.ndim == 1 and len(a) < length:
        raise DepthError(f"need {length} symbols, prefix has {len(a)}")
    return a


def birkhoff_sum(phi: Potential, word, n: int, tail_depth: int | None = None):
    """``S_n phi = sum_{k<n} phi(sigma^k i)``.

    ``word`` is an InfiniteWord, a finite prefix, or an ``(N, L)`` array of
    prefixes (one sum per row).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if phi.depth is None:
        extra = tail_depth or phi.system.default_depth(1e-12)
    else:
        extra = max(phi.depth - 1, 0)
    need = n + extra
    a = _prefix_array(word, need)
    rows = np.atleast_2d(a)
    if rows.shape[1] < need:
        raise DepthError(f"need {need} symbols, prefix has {rows.shape[1]}")
    total = np.zeros(len(rows))
    for k in range(n):
        window = rows[:, k : k + max(extra + 1, 1)]
        total += phi.evaluate(window)
    return float(total[0]) if a.ndim == 1 else total


# ---------------------------------------------------------------------------
# pressure


@dataclass
class PressureResult:
    P_hat: float
    trace: list
    increments: list
    stabilized: bool


def _level_log_sups(phi: Potential, n: int, k_points: int = 64) -> np.ndarray:
    """``max_{[j]} S_n phi`` for all j in Lambda^n (geometric, non-linear case)."""
    sysm = phi.system
    K = sysm.attractor_sample(k_points, seed=11)
    words = Alphabet(sysm.m).words(n)
    _, r, _ = sysm.chain(np.repeat(words, len(K), 0), np.tile(K, (len(words), 1)))
    lr = np.log(r).reshape(len(words), len(K))
    return phi.s * (lr.max(axis=1) if phi.s >= 0 else lr.min(axis=1))


def pressure(phi: Potential, n_max: int | None = None) -> PressureResult:
    """Level-n pressures ``(1/n) log sum_j exp(max_[j] S_n phi)`` and an extrapolated limit.

    The extrapolation uses increments ``log Z_n - log Z_{n-1}``, which converge
    geometrically where ``(1/n) log Z_n`` converges only like 1/n.
    """
    if n_max is None:
        n_max = 64 if phi.finite_range else 12
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    logZ = []
    if phi.finite_range:
        L = phi.log_matrix()
        tail = L.max(axis=1)
        v = np.zeros(phi.m)
        for n in range(1, n_max + 1):
            if n > 1:
                v = logsumexp(v[:, None] + L, axis=0)
            logZ.append(float(logsumexp(v + tail)))
    else:
        n_max = min(n_max, 16)
        for n in range(1, n_max + 1):
            logZ.append(float(logsumexp(_level_log_sups(phi, n))))
    trace = [z / (k + 1) for k, z in enumerate(logZ)]
    inc = [logZ[0]] + [b - a for a, b in zip(logZ, logZ[1:])]
    stable = abs(inc[-1] - inc[-2]) <= 1e-9 * max(1.0, abs(inc[-1]))
    if not stable:
        log.warning("pressure increments not stabilized at n_max=%d (last change %.3g)",
                    n_max, abs(inc[-1] - inc[-2]))
    return PressureResult(inc[-1], trace, inc, stable)


def pressure_exact(phi: Potential) -> float:
    """``log`` of the Perron eigenvalue of the transfer matrix."""
    return float(np.log(np.max(np.abs(np.linalg.eigvals(np.exp(phi.log_matrix()))))))


class _GeometricPressure:
    """Cached level-n data so pressure(s) is cheap inside a root solve."""

    def __init__(self, system: ConformalSystem, n: int, k_points: int = 64):
        K = system.attractor_sample(k_points, seed=11)
        self.levels = []
        for k in (n - 1, n):
            words = Alphabet(system.m).words(k)
            _, r, _ = system.chain(np.repeat(words, len(K), 0), np.tile(K, (len(words), 1)))
            lr = np.log(r).reshape(len(words), len(K))
            self.levels.append((lr.max(axis=1), lr.min(axis=1)))

    def __call__(self, s: float) -> float:
        z = [logsumexp(s * (hi if s >= 0 else lo)) for hi, lo in self.levels]
        return float(z[1] - z[0])


def bowen_root(system: ConformalSystem, tol: float = 1e-10, n_level: int = 14, max_iter: int = 200) -> float:
    """The zero of ``s -> P(s log r)`` on ``[0, d]``."""
    if isinstance(system, Similarity):
        lr = np.log(system.ratios)

        def P(s):
            return float(logsumexp(s * lr))
    else:
        P = _GeometricPressure(system, n_level)
    lo, hi = 0.0, float(system.d)
    if not (P(lo) > 0 > P(hi)):
        raise BracketError(f"pressure has no sign change on [0, {system.d}]: P(0)={P(lo)}, P(d)={P(hi)}")
    s = brentq(P, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=max_iter)
    if abs(P(s)) > tol:
        raise BracketError(f"root solve ended with |P| = {abs(P(s))} > {tol}")
    return float(s)


# ---------------------------------------------------------------------------
# Gibbs measures


class MarkovGibbs:
    """The Gibbs measure of a finite-range potential, realized as a Markov measure.

    With ``M = exp(log_matrix)``, Perron eigenvalue ``lam`` and left/right
    eigenvectors ``l``, ``r`` (``l . r = 1``)::

        mu([w_1 ... w_n]) = l[w_1] M[w_1,w_2] ... M[w_{n-1},w_n] r[w_n] / lam**(n-1)
    """

    def __init__(self, phi: Potential):
        self.phi = phi
        self.m = phi.m
        self.logM = phi.log_matrix()
        M = np.exp(self.logM - self.logM.max())
        vals, right = np.linalg.eig(M)
        k = int(np.argmax(vals.real))
        lam = float(vals[k].real)
        r = np.abs(right[:, k].real)
        vals_l, left = np.linalg.eig(M.T)
        l = np.abs(left[:, int(np.argmax(vals_l.real))].real)
        l = l / (l @ r)
        self.log_lam = math.log(lam) + float(self.logM.max())
        self.log_l = np.log(l)
        self.log_r = np.log(r)
        self.stationary = l * r
        self.transition = np.exp(self.logM - self.log_lam + self.log_r[None, :] - self.log_r[:, None])
        self.transition /= self.transition.sum(axis=1, keepdims=True)

    @property
    def pressure(self) -> float:
        return self.log_lam

    def log_measure(self, words) -> np.ndarray:
        """``log mu([w])`` for a list of words (any lengths) or an ``(N, n)`` array."""
        if isinstance(words, np.ndarray) and words.ndim == 2:
            w = words
            if w.shape[1] == 0:
                return np.zeros(len(w))
            out = self.log_l[w[:, 0]] + self.log_r[w[:, -1]] - (w.shape[1] - 1) * self.log_lam
            for k in range(w.shape[1] - 1):
                out = out + self.logM[w[:, k], w[:, k + 1]]
            return out
        return np.array([self.log_measure(np.asarray([tuple(w)], dtype=np.int64))[0]
                         if len(w) else 0.0 for w in words])

    def sample_words(self, n: int, depth: int, seed: int, purpose: str = "gibbs-words") -> np.ndarray:
        u = streams.uniforms(seed, purpose, n, depth)
        out = np.empty((n, depth), dtype=np.int8)
        cum0 = np.cumsum(self.stationary)
        cum0[-1] = 1.0
        out[:, 0] = np.minimum((u[:, 0, None] >= cum0[None, :]).sum(axis=1), self.m - 1)
        cumT = np.cumsum(self.transition, axis=1)
        cumT[:, -1] = 1.0
        for k in range(1, depth):
            rows = cumT[out[:, k - 1]]
            out[:, k] = (u[:, k, None] >= rows).sum(axis=1)
        return out

    def sample_refined_words(self, alphabet: RefinedAlphabet, n: int, depth: int, seed: int) -> np.ndarray:
        """Words built letter by letter over the refined alphabet, cut to ``depth`` symbols."""
        letters = alphabet.words
        lens = np.array([len(w) for w in letters])
        pad = np.zeros((len(letters), lens.max()), dtype=np.int64)
        for k, w in enumerate(letters):
            pad[k, : len(w)] = w
        first = np.exp(self.log_measure(pad_list(letters)))
        # P(letter | previous symbol a) = P[a, w_1] * mu([w]) / stationary[w_1]
        cond = self.transition[:, pad[:, 0]] * first[None, :] / self.stationary[pad[:, 0]][None, :]
        first_cum = np.cumsum(first / first.sum())
        cond_cum = np.cumsum(cond / cond.sum(axis=1, keepdims=True), axis=1)
        n_letters = -(-depth // int(lens.min()))
        u = streams.uniforms(seed, "refined-letters", n, n_letters)
        out = np.zeros((n, depth), dtype=np.int8)
        pos = np.zeros(n, dtype=np.int64)
        prev = None
        rows = np.arange(n)
        ar = np.arange(lens.max())
        for k in range(n_letters):
            table = first_cum[None, :] if prev is None else cond_cum[prev]
            idx = np.minimum((u[:, k, None] >= table).sum(axis=1), len(letters) - 1)
            sym, ln = pad[idx], lens[idx]
            cols = pos[:, None] + ar[None, :]
            ok = (ar[None, :] < ln[:, None]) & (cols < depth)
            out[np.broadcast_to(rows[:, None], ok.shape)[ok], cols[ok]] = sym[ok]
            prev = sym[rows, ln - 1]
            pos = pos + ln
            if pos.min() >= depth:
                break
        return out


def pad_list(words) -> list:
    return [tuple(w) for w in words]


class LevelGibbs:
    """Level-n Gibbs weights by enumeration, for potentials without a transfer matrix.

    Each cylinder gets ``exp(S_n phi(j*) - n P)`` with ``j*`` the periodic
    continuation of j, normalized to sum 1.
    """

    def __init__(self, phi: Potential, n: int):
        self.phi, self.m, self.n = phi, phi.m, n
        sysm = phi.system
        self.words = Alphabet(self.m).words(n)
        x = np.repeat(sysm.V.center[None, :], len(self.words), axis=0)
        reps = max(1, -(-sysm.default_depth(1e-13) // n))
        for _ in range(reps):
            x, _, _ = sysm.chain(self.words, x, track=False)
        _, r, _ = sysm.chain(self.words, x)
        self.raw = phi.s * np.log(r)
        self.log_w = self.raw - logsumexp(self.raw)
        self.pressure = pressure(phi, n_max=min(n, 14)).P_hat

    def log_measure(self, words) -> np.ndarray:
        out = []
        w_all = self.words
        for w in words:
            w = tuple(w)
            if len(w) > self.n:
                raise DepthError(f"table holds level {self.n}, word has length {len(w)}")
            mask = np.all(w_all[:, : len(w)] == np.asarray(w, dtype=np.int64), axis=1)
            out.append(float(logsumexp(self.log_w[mask])))
        return np.array(out)

    def sample_words(self, n: int, depth: int, seed: int, purpose: str = "gibbs-words") -> np.ndarray:
        u = streams.uniforms(seed, purpose, n, 1)[:, 0]
        cum = np.cumsum(np.exp(self.log_w))
        cum[-1] = 1.0
        idx = np.searchsorted(cum, u, side="right")
        out = self.words[idx]
        if depth > self.n:
            tail = streams.uniforms(seed, purpose + "/tail", n, depth - self.n)
            out = np.hstack([out, np.minimum((tail * self.m).astype(np.int64), self.m - 1)])
        return out[:, :depth].astype(np.int8)


def gibbs_measure(phi: Potential, level: int = 12):
    return MarkovGibbs(phi) if phi.finite_range else LevelGibbs(phi, level)


@dataclass
class CylinderWeights:
    level: int | None
    words: list
    log_weights: np.ndarray
    P_hat: float
    sandwich_slack: float
    certificate: float

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def as_dict(self) -> dict:
        return {tuple(int(s) for s in w): float(v) for w, v in zip(self.words, self.weights)}


def _sandwich_slack(phi: Potential, measure, words: np.ndarray, P: float) -> float:
    """``max |log mu([i]) - (S_n phi(j) - n P)|`` over the words i and all j in [i]."""
    n = words.shape[1]
    lm = measure.log_measure(words)
    if phi.finite_range:
        worst = 0.0
        for b in range(phi.m):
            ext = np.hstack([words, np.full((len(words), 1), b)])
            S = birkhoff_sum(phi, ext, n) if n > 0 else np.zeros(len(words))
            worst = max(worst, float(np.abs(lm - (S - n * P)).max()))
        return worst
    periodic = np.tile(words, (1, 3))
    S = birkhoff_sum(phi, periodic, n, tail_depth=2 * n) if n else 0.0
    return float(np.abs(lm - (S - n * P)).max())


def cylinder_weights(phi: Potential, n: int | None = None, alphabet: RefinedAlphabet | None = None,
                     measure=None) -> CylinderWeights:
    """Gibbs weights of every level-n cylinder, or of every refined letter."""
    if (n is None) == (alphabet is None):
        raise ValueError("give exactly one of n and alphabet")
    measure = measure or gibbs_measure(phi, level=n or alphabet.max_len)
    P = measure.pressure
    if alphabet is None:
        words = Alphabet(phi.m).words(n)
        lw = measure.log_measure(words)
        slack = _sandwich_slack(phi, measure, words, P) if n >= 1 else 0.0
        return CylinderWeights(n, [tuple(w) for w in words.tolist()], lw, P, slack, phi.var(n))
    words = list(alphabet.words)
    lw = measure.log_measure(words)
    return CylinderWeights(None, words, lw, P, float("nan"), phi.var(alphabet.n_q))


@dataclass
class QuasiBernoulliReport:
    q: list
    n_q: list
    c_hat: list
    c_theory: list


@dataclass
class GibbsCheck:
    levels: list
    slack: list
    var: list
    max_violation: float
    qb_pairs: list = field(default_factory=list)
    qb: QuasiBernoulliReport | None = None


def quasi_bernoulli_ratios(measure, words_i, words_j) -> np.ndarray:
    """``log(mu([ij]) / (mu([i]) mu([j])))`` over all pairs."""
    li = measure.log_measure(words_i)
    lj = measure.log_measure(words_j)
    joint = measure.log_measure([tuple(a) + tuple(b) for a in words_i for b in words_j])
    return joint - (li[:, None] + lj[None, :]).ravel()


def qb_theory(phi: Potential, len_i: int, len_j: int) -> float:
    kappa, beta = phi.hoelder()
    return math.exp(kappa * beta**len_i / (1 - beta) + kappa * beta**len_j)


def verify_gibbs(phi: Potential, levels=range(1, 11), qs=range(1, 6), system: ConformalSystem | None = None,
                 qb_levels=((1, 1), (2, 2), (3, 3))) -> GibbsCheck:
    """Worst-case sandwich and quasi-Bernoulli ratios against their certificates.

    ``max_violation`` is the largest amount (in log scale) by which a level's
    sandwich slack exceeds ``Var_n``. The refined-alphabet part needs a
    system to define ratios.
    """
    from .symbolic import build_refined_alphabet

    measure = gibbs_measure(phi, level=max(levels))
    slacks, vars_ = [], []
    for n in levels:
        cw = cylinder_weights(phi, n=n, measure=measure)
        slacks.append(cw.sandwich_slack)
        vars_.append(phi.var(n))
    viol = max(max(s - v, 0.0) for s, v in zip(slacks, vars_))
    pairs = []
    A = Alphabet(phi.m)
    for a, b in qb_levels:
        wi = [tuple(w) for w in A.words(a).tolist()]
        wj = [tuple(w) for w in A.words(b).tolist()]
        lr = quasi_bernoulli_ratios(measure, wi, wj)
        pairs.append((a, b, float(np.exp(np.abs(lr).max())), qb_theory(phi, a, b)))
    qb = None
    if system is not None:
        qq, nq, ch, ct = [], [], [], []
        for q in qs:
            alph = build_refined_alphabet(system.ratio_fn(), system.rho, q, system.m)
            letters = list(alph.words)
            lr = quasi_bernoulli_ratios(measure, letters, letters)
            qq.append(q)
            nq.append(alph.n_q)
            ch.append(float(np.exp(np.abs(lr).max())))
            kappa, beta = phi.hoelder()
            ct.append(math.exp(kappa * beta**alph.n_q / (1 - beta) + kappa * beta**alph.n_q))
        qb = QuasiBernoulliReport(qq, nq, ch, ct)
    return GibbsCheck(list(levels), slacks, vars_, viol, pairs, qb)


# ---------------------------------------------------------------------------
# sampling the pushed-forward measure


def sample_cloud(system: ConformalSystem, phi: Potential, n: int, seed: int, depth: int | None = None,
                 alphabet: RefinedAlphabet | None = None, keep_words: bool = True,
                 min_scale: float | None = None) -> PointCloud:
    """``n`` i.i.d. points of ``Phi mu`` with their words and position-error bounds.

    Words are drawn symbol by symbol from the exact Gibbs measure (or letter by
    letter over a refined alphabet) and mapped through the canonical map from
    the center of V.
    """
    depth = depth or system.default_depth(1e-9)
    measure = gibbs_measure(phi, level=min(depth, 14))
    chunks = []
    for start in range(0, n, streams.CHUNK):
        stop = min(n, start + streams.CHUNK)
        sub = streams.CHUNK * (start // streams.CHUNK)
        # every chunk draws from its own stream family, keyed by chunk index
        cseed = int(np.random.SeedSequence([seed, sub]).generate_state(1)[0])
        if alphabet is None:
            words = measure.sample_words(stop - start, depth, cseed)
        else:
            words = measure.sample_refined_words(alphabet, stop - start, depth, cseed)
        chunks.append(words)
    words = np.vstack(chunks) if chunks else np.zeros((0, depth), dtype=np.int8)
    pts, r, _ = system.chain(words.astype(np.int64), system.V.center[None, :], track=not isinstance(system, Similarity))
    if isinstance(system, Similarity):
        rbar = system.rbar(words.astype(np.int64))
        c1 = 1.0
    else:
        c1 = estimate_c1(system)
        rbar = c1 * r
    pos_error = system.c2 * system.V.diameter * rbar
    if min_scale is not None and 2 * pos_error.max() > min_scale:
        usable = 2 * pos_error.max()
        log.warning("depth %d too small for scale %.3g; smallest usable r is %.3g", depth, min_scale, usable)
    return PointCloud(pts, np.full(n, 1.0 / n), words if keep_words else None, pos_error)


_C1_CACHE: dict = {}


def estimate_c1(system: ConformalSystem) -> float:
    key = id(system)
    if key not in _C1_CACHE:
        from .conformal import estimate_distortion
        _C1_CACHE[key] = estimate_distortion(system, n_words=200, n_pairs=32, seed=0).C1_hat
    return _C1_CACHE[key]


def similarity_dimension(system: Similarity, phi: Potential) -> float:
    """``h(mu) / chi(mu)`` for a finite-range Gibbs measure on a similarity system.

    Under the open set condition this is the dimension of the pushed-forward
    measure; for the uniform Bernoulli measure it is the Moran value.
    """
    if not isinstance(system, Similarity) or not phi.finite_range:
        raise ValueError("closed form needs a similarity system and a finite-range potential")
    g = MarkovGibbs(phi)
    P = g.transition
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(P > 0, P * np.log(P), 0.0)
    h = -float(g.stationary @ plogp.sum(axis=1))
    chi = -float(g.stationary @ np.log(system.ratios))
    return h / chi
