import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confdim.symbolic import (
    Alphabet,
    ContractionError,
    InfiniteWord,
    build_refined_alphabet,
    concat,
    in_cylinder,
    metric_d_rho,
    parent,
    product_ratio,
    shift,
    sum_over,
)

from oracles import refined_alphabet_bruteforce


def test_alphabet_needs_two_symbols():
    with pytest.raises(ValueError):
        Alphabet(1)
    with pytest.raises(ValueError):
        Alphabet(3).check((0, 3))


def test_alphabet_words_lexicographic():
    w = Alphabet(2).words(2)
    assert w.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    assert Alphabet(3).words(0).shape == (1, 0)


def test_word_helpers():
    assert parent((0, 1, 1)) == (0, 1)
    assert concat((0,), (1, 1)) == (0, 1, 1)
    assert in_cylinder((0, 1, 1), (0, 1))
    assert not in_cylinder((0, 1), (0, 1, 1))
    assert shift((2, 0, 1), 1) == (0, 1)


def test_metric_examples():
    assert metric_d_rho((0, 1, 0), (0, 1, 0), 0.5) == (0.0, True)
    assert metric_d_rho((0, 1), (1, 1), 0.5) == (1.0, False)
    assert metric_d_rho((0, 1, 1, 0), (0, 1, 1, 1), 0.5) == (0.125, False)
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            metric_d_rho((0,), (1,), bad)


words3 = st.lists(st.integers(0, 2), min_size=6, max_size=6)


@settings(max_examples=200, deadline=None)
@given(words3, words3, words3, st.floats(0.05, 0.95))
def test_metric_ultrametric(i, j, k, rho):
    dij, _ = metric_d_rho(i, j, rho)
    djk, _ = metric_d_rho(j, k, rho)
    dik, _ = metric_d_rho(i, k, rho)
    assert dik <= max(dij, djk) + 1e-15


def test_infinite_word_periodic_and_shift():
    w = InfiniteWord(prefix=(2,), period=(0, 1), m=3)
    assert w.take(6).tolist() == [2, 0, 1, 0, 1, 0]
    assert w.shift(2).take(4).tolist() == [1, 0, 1, 0]
    assert shift(w, 3).take(3).tolist() == [0, 1, 0]


def test_infinite_word_random_tail_consistent_under_shift():
    w = InfiniteWord(prefix=(1, 1), seed=5, m=4)
    full = w.take(40)
    assert full[:2].tolist() == [1, 1]
    assert np.array_equal(w.shift(7).take(33), full[7:])
    assert np.array_equal(w.take(40), full)


def test_refined_alphabet_constant_ratio():
    alph = build_refined_alphabet(product_ratio([1 / 3, 1 / 3]), 1 / 3, 2, 2)
    assert set(alph.words) == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert alph.n_q == 2


def test_refined_alphabet_half_quarter_matches_enumeration():
    ratios = [0.5, 0.25]
    alph = build_refined_alphabet(product_ratio(ratios), 0.5, 2, 2, r_lower=0.25)
    assert set(alph.words) == {(1,), (0, 0), (0, 1)}
    assert set(alph.words) == refined_alphabet_bruteforce(ratios, 0.5, 2, 4)
    assert alph.bounds_ok
    assert alph.is_prefix_free() and alph.covers()


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(0.1, 0.8), min_size=2, max_size=3),
    st.integers(1, 4),
)
def test_refined_alphabet_properties(ratios, q):
    rho = max(ratios)
    r_lower = min(ratios)
    alph = build_refined_alphabet(product_ratio(ratios), rho, q, len(ratios), r_lower=r_lower)
    assert alph.is_prefix_free()
    assert alph.covers()
    assert alph.bounds_ok, alph.violations
    assert set(alph.words) == refined_alphabet_bruteforce(ratios, rho, q, alph.max_len)
    # product weights over a prefix-free covering set sum to one
    p = np.asarray(ratios) ** 0.7
    p = p / p.sum()
    total = sum_over(alph.words, lambda w: math.prod(p[a] for a in w))
    assert abs(total - 1.0) < 1e-12


def test_refined_alphabet_rejects_bad_ratio():
    with pytest.raises(ContractionError):
        build_refined_alphabet(lambda w: 1.2, 0.5, 1, 2)
    with pytest.raises(ValueError):
        build_refined_alphabet(product_ratio([0.5, 0.5]), 1.0, 1, 2)


def test_refined_parse_and_shift():
    alph = build_refined_alphabet(product_ratio([0.5, 0.25]), 0.5, 2, 2)
    assert alph.parse((1, 0, 1, 0, 0, 1)) == [(1,), (0, 1), (0, 0), (1,)]
    assert alph.shift((0, 1, 1, 0)) == (1, 0)
