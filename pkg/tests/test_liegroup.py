import json

import numpy as np
import pytest

from pathrep.liegroup import (
    CutLocusError,
    GroupError,
    LieGroupSpec,
    make_group,
    trace_inner,
)

SO3 = make_group("special-orthogonal", n=3)
TORUS = make_group("torus", k=1)
TORUS2 = make_group("torus", k=2)


def test_basis_orthonormal():
    for spec in (SO3, TORUS, TORUS2):
        for i, a in enumerate(spec.basis):
            for j, b in enumerate(spec.basis):
                assert abs(trace_inner(a, b) - (i == j)) < 1e-12


def test_exp_log_roundtrip():
    rng = np.random.default_rng(0)
    for spec in (SO3, TORUS, TORUS2):
        for _ in range(50):
            x = rng.uniform(-1.2, 1.2, spec.d)
            g = spec.exp(x)
            assert spec.membership_residual(g) < 1e-12
            assert np.allclose(spec.log(g), x, atol=1e-12)


def test_exp_batch_matches_scalar():
    rng = np.random.default_rng(1)
    xs = rng.uniform(-1, 1, (20, SO3.d))
    batch = SO3.exp_batch(xs)
    for x, g in zip(xs, batch):
        assert np.allclose(g, SO3.exp(x), atol=1e-14)


def test_so3_half_turn_and_cut_locus():
    g = SO3.exp(np.array([0.0, 0.0, np.pi]))
    assert np.allclose(np.diag(g), [-1, -1, 1], atol=1e-12)
    with pytest.raises(CutLocusError):
        SO3.log(g)
    # angles just inside the guard still work
    x = np.array([0.0, 0.0, np.pi - 1e-3])
    assert np.allclose(SO3.log(SO3.exp(x)), x, atol=1e-9)


def test_bracket_structure():
    e1, e2, e3 = np.eye(3)
    assert np.allclose(SO3.bracket(e1, e2), e3, atol=1e-14)
    assert np.allclose(SO3.bracket(e2, e3), e1, atol=1e-14)
    assert np.allclose(SO3.bracket(e3, e1), e2, atol=1e-14)
    assert np.allclose(TORUS.bracket(np.ones(1), np.ones(1)), 0.0)


def test_adjoint_orthogonal_and_consistent():
    rng = np.random.default_rng(2)
    g = SO3.exp(rng.standard_normal(3))
    ad = SO3.ad_matrix(g)
    assert np.allclose(ad.T @ ad, np.eye(3), atol=1e-12)
    x = rng.standard_normal(3)
    direct = g @ SO3.vector(x) @ g.T
    assert np.allclose(SO3.vector(ad @ x), direct, atol=1e-12)
    assert np.allclose(TORUS.ad_matrix(TORUS.exp(np.array([0.7]))), np.eye(1))


def test_casimir():
    c = SO3.casimir()
    assert np.allclose(c.c2_matrix, -2.0 * np.eye(3), atol=1e-12)
    assert np.allclose(TORUS.casimir().c2_matrix, -np.eye(2), atol=1e-12)


def test_serialization_bit_exact():
    for spec in (SO3, TORUS2):
        doc = spec.to_json()
        back = LieGroupSpec.from_json(doc)
        assert back.kind == spec.kind
        assert np.array_equal(back.basis, spec.basis)
        assert back.to_json() == doc


def test_user_group_requires_skew():
    bad = np.eye(2)[None]
    with pytest.raises(GroupError):
        make_group("user", basis=bad)


def test_user_group_from_so3_basis():
    spec = make_group("user", basis=np.array(SO3.basis))
    x = np.array([0.3, -0.2, 0.5])
    assert np.allclose(spec.exp(x), SO3.exp(x), atol=1e-12)
