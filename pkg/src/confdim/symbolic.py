"""Words over a finite alphabet, the shift, the metric d_rho and refined alphabets.

Symbols are integers ``0 .. m-1``; a finite word is a tuple of symbols. The
empty tuple is the empty word.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import streams

Word = tuple


class ContractionError(ValueError):
    """A ratio function returned a value outside (0, 1)."""


@dataclass(frozen=True)
class Alphabet:
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"alphabet needs m >= 2 symbols, got {self.m!r}")

    def check(self, word: Sequence[int]) -> Word:
        w = tuple(int(s) for s in word)
        for s in w:
            if not 0 <= s < self.m:
                raise ValueError(f"symbol {s} outside alphabet of size {self.m}")
        return w

    def words(self, n: int) -> np.ndarray:
        """All words of length n as an ``(m**n, n)`` array in lexicographic order."""
        if n == 0:
            return np.zeros((1, 0), dtype=np.int64)
        grids = np.indices((self.m,) * n).reshape(n, -1).T
        return np.ascontiguousarray(grids, dtype=np.int64)


def parent(word: Word) -> Word:
    """``i^-``: the word with its last symbol dropped."""
    if not word:
        raise ValueError("the empty word has no parent")
    return word[:-1]


def concat(*words: Word) -> Word:
    out: tuple = ()
    for w in words:
        out = out + tuple(w)
    return out


def in_cylinder(word: Word, prefix: Word) -> bool:
    return tuple(word[: len(prefix)]) == tuple(prefix)


@dataclass(frozen=True)
class InfiniteWord:
    """A finite prefix followed by a periodic or seeded-random tail.

    Exactly one of ``period`` and ``seed`` is used for the tail; a random tail
    draws symbols uniformly from ``range(m)``.
    """

    prefix: Word = ()
    period: Word = ()
    seed: int | None = None
    m: int = 2
    offset: int = 0

    def __post_init__(self):
        if not self.period and self.seed is None:
            raise ValueError("an infinite word needs a periodic or seeded tail")

    @classmethod
    def periodic(cls, u: Sequence[int], m: int = 2) -> "InfiniteWord":
        return cls(prefix=(), period=tuple(int(s) for s in u), m=m)

    def take(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=np.int64)
        k = min(n, len(self.prefix))
        out[:k] = self.prefix[:k]
        rest = n - k
        if rest > 0:
            if self.period:
                reps = -(-rest // len(self.period))
                out[k:] = np.tile(np.asarray(self.period), reps)[:rest]
            else:
                u = streams.uniforms(self.seed, "infinite-word", self.offset + rest)
                u = u[self.offset :, 0]
                out[k:] = np.minimum((u * self.m).astype(np.int64), self.m - 1)
        return out

    def shift(self, k: int = 1) -> "InfiniteWord":
        """``sigma^k`` of this word."""
        if k <= len(self.prefix):
            return InfiniteWord(self.prefix[k:], self.period, self.seed, self.m, self.offset)
        extra = k - len(self.prefix)
        if self.period:
            off = extra % len(self.period)
            rot = self.period[off:] + self.period[:off]
            return InfiniteWord((), rot, None, self.m)
        return InfiniteWord((), (), self.seed, self.m, self.offset + extra)


def shift(word: Sequence[int], k: int = 1):
    """Left shift on the base alphabet."""
    if isinstance(word, InfiniteWord):
        return word.shift(k)
    return tuple(word)[k:]


def metric_d_rho(i: Sequence[int], j: Sequence[int], rho: float) -> tuple[float, bool]:
    """``rho ** n`` where n is the first index at which i and j disagree.

    Returns ``(distance, depth_limited)``. When the prefixes agree over their
    common length the distance is reported as 0 and ``depth_limited`` is True.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    a = np.asarray(i)
    b = np.asarray(j)
    n = min(len(a), len(b))
    diff = np.flatnonzero(a[:n] != b[:n])
    if diff.size == 0:
        return 0.0, True
    return float(rho ** int(diff[0])), False


@dataclass(frozen=True)
class RefinedAlphabet:
    """The stopping-time alphabet of words whose ratio first drops to ``rho**q``."""

    q: int
    rho: float
    m: int
    words: tuple
    rbar: tuple
    r_lower: float | None = None
    violations: tuple = field(default=())

    @property
    def n_q(self) -> int:
        return min(len(w) for w in self.words)

    @property
    def max_len(self) -> int:
        return max(len(w) for w in self.words)

    @property
    def bounds_ok(self) -> bool:
        return not self.violations

    def is_prefix_free(self) -> bool:
        ws = sorted(self.words)
        return all(not in_cylinder(b, a) for a, b in zip(ws, ws[1:]))

    def covers(self, depth: int | None = None) -> bool:
        """Every word of length ``depth`` has exactly one prefix in the alphabet."""
        depth = self.max_len if depth is None else depth
        members = set(self.words)
        for w in Alphabet(self.m).words(depth):
            t = tuple(int(s) for s in w)
            if sum(t[:k] in members for k in range(1, depth + 1)) != 1:
                return False
        return True

    def parse(self, symbols: Sequence[int]) -> list:
        """Split a base-alphabet sequence into consecutive refined letters.

        A trailing piece too short to form a full letter is dropped.
        """
        members = set(self.words)
        out, start, s = [], 0, tuple(int(x) for x in symbols)
        while start < len(s):
            for k in range(start + 1, min(len(s), start + self.max_len) + 1):
                if s[start:k] in members:
                    out.append(s[start:k])
                    start = k
                    break
            else:
                break
        return out

    def shift(self, symbols: Sequence[int]) -> Word:
        """Left shift on the refined alphabet: drop the first refined letter."""
        letters = self.parse(symbols)
        if not letters:
            raise ValueError("sequence shorter than one refined letter")
        return tuple(symbols)[len(letters[0]):]


def build_refined_alphabet(
    ratio_fn: Callable[[Word], float],
    rho: float,
    q: int,
    m: int,
    r_lower: float | None = None,
    max_depth: int = 200,
) -> RefinedAlphabet:
    """All words i with ``rbar(i) <= rho**q < rbar(i^-)``, by depth-first traversal.

    ``rbar`` of the empty word is taken to be 1. When ``r_lower`` is given, the
    ratio and length bounds that members must satisfy are checked and any
    failures are recorded in ``violations``.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    if q < 1:
        raise ValueError("q must be >= 1")
    Alphabet(m)
    # products of equal ratios should hit rho**q exactly; absorb rounding
    thresh = rho**q * (1.0 + 1e-12)
    words, ratios = [], []
    stack: list = [()]
    while stack:
        w = stack.pop()
        for a in range(m - 1, -1, -1):
            child = w + (a,)
            r = float(ratio_fn(child))
            if not 0.0 < r < 1.0:
                raise ContractionError(f"ratio of word {child} is {r}, outside (0, 1)")
            if r <= thresh:
                words.append(child)
                ratios.append(r)
            elif len(child) >= max_depth:
                raise ContractionError(f"no stopping time reached by depth {max_depth}")
            else:
                stack.append(child)
    order = sorted(range(len(words)), key=lambda k: words[k])
    words = [words[k] for k in order]
    ratios = [ratios[k] for k in order]
    violations = []
    if r_lower is not None:
        violations = _check_bounds(words, ratios, rho, q, r_lower)
    return RefinedAlphabet(q, rho, m, tuple(words), tuple(ratios), r_lower, tuple(violations))


def _check_bounds(words, ratios, rho, q, r_lower):
    tol = 1e-12
    lo_len = q * math.log(rho) / math.log(r_lower)
    hi_len = q + math.log(r_lower) / math.log(rho)
    bad = []
    for w, r in zip(words, ratios):
        n = len(w)
        checks = {
            "r_lower*rho^q < rbar": r_lower * rho**q < r * (1 + tol),
            "rbar <= rho^|i|": r <= rho**n * (1 + tol),
            "r_lower^|i| <= rbar": r_lower**n <= r * (1 + tol),
            "rbar <= rho^q": r <= rho**q * (1 + tol),
            "length lower": lo_len - tol <= n,
            "length upper": n <= hi_len + tol,
        }
        bad.extend((w, name) for name, ok in checks.items() if not ok)
    return bad


def product_ratio(ratios: Sequence[float]) -> Callable[[Word], float]:
    """ratio_fn for constant per-symbol ratios: ``rbar(i) = prod ratios[i_k]``."""
    r = np.asarray(ratios, dtype=float)
    return lambda w: float(np.prod(r[list(w)])) if w else 1.0


def sum_over(words: Iterable[Word], weight: Callable[[Word], float]) -> float:
    return math.fsum(weight(w) for w in words)
