import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confdim import rotations
from confdim.conformal import (
    JULIA_THRESHOLD,
    DomainError,
    Julia,
    Similarity,
    canonical_point,
    compose_map,
    derivative_decomposition,
    estimate_distortion,
    from_descriptor,
    metric_sandwich_violations,
    validate_assumptions,
)

from oracles import compose_affine_fraction, julia_alpha, julia_derivative_bound

C_REF = complex(-3, 1)


@pytest.fixture(scope="module")
def julia():
    return Julia(C_REF)


@pytest.fixture(scope="module")
def cantor():
    return Similarity([1 / 3, 1 / 3], np.ones((2, 1, 1)), [[0.0], [2 / 3]], d=1)


@pytest.fixture(scope="module")
def rotated_pair():
    return Similarity.planar([1 / 3, 1 / 3], [1.0, 1.0], [[0, 0], [2 / 3, 0]])


def test_empty_word_is_identity(julia, rotated_pair):
    for sysm in (julia, rotated_pair):
        x = sysm.V.center + 0.1
        assert np.allclose(compose_map(sysm, (), x), x)


def test_cantor_composition_exact(cantor):
    y = compose_map(cantor, (1, 1), [0.0])[0, 0]
    exact = compose_affine_fraction([1 / 3, 1 / 3], [0, 2 / 3], (1, 1), 0)
    assert abs(y - 8 / 9) < 1e-15
    assert abs(y - float(exact)) < 1e-15


def test_julia_alpha_fixed(julia):
    a = julia_alpha(C_REF)
    assert np.allclose(julia.alpha, [a.real, a.imag], atol=1e-14)
    y = compose_map(julia, (0,), julia.alpha)[0]
    assert np.allclose(y, julia.alpha, atol=1e-12)


def test_julia_derivative_modulus(julia):
    z = julia.V.sample(200, 3, "test")
    r, _ = derivative_decomposition(julia, (1,), z)
    zc = z[:, 0] + 1j * z[:, 1]
    assert np.allclose(r, 0.5 * np.abs(zc - C_REF) ** -0.5, rtol=1e-13)


def test_julia_inverse_branches(julia):
    z = julia.U.sample(500, 4, "test") * 0.999
    for a in (0, 1):
        w = julia._step(np.full(len(z), a), z)
        assert np.abs(julia.polynomial(w) - z).max() < 1e-12


def test_julia_two_step_chain_rule(julia):
    z = julia.V.sample(50, 5, "test")
    r, rot = derivative_decomposition(julia, (0, 1), z)
    z1 = julia._step(np.ones(len(z), dtype=int), z)
    r2, a2 = julia._step_derivative(np.ones(len(z), dtype=int), z)
    r1, a1 = julia._step_derivative(np.zeros(len(z), dtype=int), z1)
    assert np.allclose(r, r1 * r2, rtol=1e-12)
    assert np.allclose(np.exp(1j * rot), np.exp(1j * (a1 + a2)), atol=1e-12)


def test_similarity_derivative_closed_form(rotated_pair):
    x = rotated_pair.V.sample(3, 1, "test")
    r, rot = derivative_decomposition(rotated_pair, (0, 1, 1, 0, 1), x)
    assert np.allclose(r, (1 / 3) ** 5)
    assert np.allclose(rotations.wrap(rot), rotations.wrap(5.0))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=6), st.lists(st.integers(0, 1), min_size=1, max_size=6),
       st.integers(0, 10_000))
def test_chain_rule_property(u, v, seed):
    sysm = Julia(C_REF)
    x = sysm.V.sample(4, seed, "chain")
    r_uv, rot_uv = derivative_decomposition(sysm, tuple(u) + tuple(v), x)
    r_v, rot_v = derivative_decomposition(sysm, v, x)
    fv = compose_map(sysm, v, x)
    r_u, rot_u = derivative_decomposition(sysm, u, fv)
    assert np.allclose(r_uv, r_u * r_v, rtol=1e-10)
    assert np.abs(np.angle(np.exp(1j * (rot_uv - rot_u - rot_v)))).max() < 1e-10


def test_canonical_point_converges(julia, cantor):
    a = julia.alpha
    y, bound = canonical_point(julia, (0,) * 40)
    assert np.linalg.norm(y - a) <= bound + 1e-14
    y, _ = canonical_point(cantor, (0,) * 40)
    assert abs(y[0]) < 1e-15


def test_canonical_point_independent_of_start(julia):
    word = (0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0, 1)
    y1, b = canonical_point(julia, word, x0=julia.V.center)
    y2, _ = canonical_point(julia, word, x0=julia.V.center + np.array([0.3, -0.2]))
    assert np.linalg.norm(y1 - y2) <= 2 * b


def test_domain_violation_raises(julia):
    with pytest.raises(DomainError):
        compose_map(julia, (0,), [100.0, 0.0])


def test_similarity_distortion_is_one(rotated_pair, cantor):
    for sysm in (rotated_pair, cantor):
        rep = estimate_distortion(sysm)
        assert rep.C1_hat == 1.0 and rep.stabilized


def test_julia_distortion_running_maximum(julia):
    rep = estimate_distortion(julia, n_words=100, n_pairs=16, seed=2)
    assert rep.C1_hat >= 1.0 and rep.C2_hat >= 1.0
    assert rep.history[-1][0] >= rep.history[0][0]


def test_julia_sandwich_small(julia):
    rep = estimate_distortion(julia, n_words=200, n_pairs=32, seed=0)
    bad, worst = metric_sandwich_violations(julia, rep.C2_hat, 4000, seed=9)
    assert bad == 0 and worst <= rep.C2_hat


def test_validate_julia_reference(julia):
    rep = validate_assumptions(julia)
    assert rep.passed, rep.failures()
    assert abs(julia.derivative_bound - julia_derivative_bound(C_REF)) < 1e-14
    assert abs(julia.derivative_bound - 0.6214) < 1e-4
    assert abs(JULIA_THRESHOLD - (5 + 2 * math.sqrt(6)) / 4) < 1e-15
    assert abs(C_REF) > JULIA_THRESHOLD


def test_validate_julia_zero_fails():
    rep = validate_assumptions(Julia(0))
    assert not rep.passed
    assert any(c.name == "julia |c| threshold" for c in rep.failures())


def test_validate_expanding_similarity_fails():
    rep = validate_assumptions(Similarity.planar([1.1, 0.5], [0.0, 0.0], [[0, 0], [1, 0]]))
    assert not rep.passed


def test_descriptor_roundtrip(rotated_pair, cantor, julia):
    for sysm in (rotated_pair, cantor, julia):
        again = from_descriptor(sysm.descriptor())
        assert again.descriptor() == sysm.descriptor()
    O = rotations.haar(3, 2, 0)
    s3 = Similarity([0.4, 0.3], O, [[0, 0, 0], [1, 0, 0]], d=3)
    assert np.allclose(from_descriptor(s3.descriptor()).linear, s3.linear)


def test_rotation_parts_are_rotations():
    O = rotations.haar(3, 50, 1)
    assert rotations.orthogonality_residual(O, 3) < 1e-12
    assert np.allclose(np.linalg.det(O), 1.0)
    assert math.isclose(float(rotations.wrap(2 * math.pi + 0.5)), 0.5)
