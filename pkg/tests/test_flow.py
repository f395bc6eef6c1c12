import numpy as np
import pytest

from pathrep.flow import (
    CHUNK,
    coarsen_increments,
    develop_left,
    develop_right,
    develop_scan,
    ito_left,
    ito_right,
    normal_increments,
    quadratic_variation,
    rotate_path,
    rotation_cells,
    sample_bm_batch,
    stoch_integral,
    StepFunction,
)
from pathrep.liegroup import make_group
from pathrep.paths import AlgebraPath, TimeGrid, cm_from_steps, path_invert

SO3 = make_group("special-orthogonal", n=3)
TORUS = make_group("torus", k=1)
GRID = TimeGrid(1.0, 50)
PHI = cm_from_steps(SO3, [0.0, 0.5, 1.0], [[1.2, 0.0, 0.3], [0.0, -0.8, 0.5]])


def test_noise_partition_invariance():
    whole = normal_increments(9, 0, 3 * CHUNK, 10, 3)
    pieces = np.concatenate(
        [normal_increments(9, s, c, 10, 3) for s, c in ((0, 100), (100, 500), (600, 3 * CHUNK - 600))]
    )
    assert np.array_equal(whole, pieces)


def test_ito_develop_inverse():
    dW = sample_bm_batch(SO3, GRID, 3, 0, 8)
    for dw in dW:
        w = AlgebraPath.from_increments(SO3, GRID, dw)
        assert np.max(np.abs(ito_left(develop_left(w)).values - w.values)) < 1e-12
        assert np.max(np.abs(ito_right(develop_right(w)).values - w.values)) < 1e-12


def test_inversion_exchanges_ito_maps():
    dW = sample_bm_batch(SO3, GRID, 4, 0, 8)
    for dw in dW:
        g = develop_left(AlgebraPath.from_increments(SO3, GRID, dw))
        gi = path_invert(g)
        assert np.max(np.abs(ito_left(gi).values + ito_right(g).values)) < 1e-13
        assert np.max(np.abs(ito_right(gi).values + ito_left(g).values)) < 1e-13


def test_right_increments_are_rotated_left_increments():
    dw = sample_bm_batch(SO3, GRID, 5, 0, 1)[0]
    w = AlgebraPath.from_increments(SO3, GRID, dw)
    g = develop_left(w)
    br = ito_right(g)
    for k in range(GRID.steps):
        ad = SO3.ad_matrix(g.values[k])
        assert np.allclose(br.increments[k], ad @ dw[k], atol=1e-12)


def test_stoch_integral_and_rotation():
    dw = sample_bm_batch(SO3, GRID, 6, 0, 1)[0]
    w = AlgebraPath.from_increments(SO3, GRID, dw)
    h = StepFunction(SO3, GRID, np.ones((GRID.steps, 3)))
    assert stoch_integral(h, w) == pytest.approx(float(dw.sum()))
    rot = rotate_path(PHI, w)
    assert abs(np.trace(quadratic_variation(rot)) - np.trace(quadratic_variation(w))) < 1e-13
    cells = rotation_cells(PHI, GRID)
    assert np.allclose(np.einsum("kab,kcb->kac", cells, cells), np.tile(np.eye(3), (GRID.steps, 1, 1)), atol=1e-12)


def test_develop_scan_matches_develop_left():
    dW = sample_bm_batch(SO3, GRID, 7, 0, 4)
    out = develop_scan(SO3, dW, checkpoints=[25, GRID.steps])
    for i, dw in enumerate(dW):
        g = develop_left(AlgebraPath.from_increments(SO3, GRID, dw))
        assert np.allclose(out["checkpoints"][GRID.steps][i], g.values[-1], atol=1e-13)
        assert np.allclose(out["checkpoints"][25][i], g.values[25], atol=1e-13)


def test_develop_scan_h_right_dict():
    dW = sample_bm_batch(SO3, GRID, 8, 0, 4)
    b = PHI.log_derivatives(GRID)[1]
    single = develop_scan(SO3, dW, h_right=b)["h_right"]
    named = develop_scan(SO3, dW, h_right={"b": b, "zero": np.zeros_like(b)})["h_right"]
    assert np.array_equal(named["b"], single)
    assert np.array_equal(named["zero"], np.zeros(4))
    # against a per-path reference using the right Ito increments
    for i, dw in enumerate(dW):
        g = develop_left(AlgebraPath.from_increments(SO3, GRID, dw))
        ref = float(np.sum(ito_right(g).increments * b))
        assert single[i] == pytest.approx(ref, abs=1e-10)


def test_develop_scan_compensator():
    dW = sample_bm_batch(TORUS, GRID, 9, 0, 3)
    out = develop_scan(TORUS, dW, checkpoints=[GRID.steps], casimir_compensator=True, dt=GRID.dt)
    comp = out["compensator"][GRID.steps]
    c2 = TORUS.casimir().c2_matrix
    for i, dw in enumerate(dW):
        g = develop_left(AlgebraPath.from_increments(TORUS, GRID, dw))
        ref = 0.5 * GRID.dt * np.sum(g.values[:-1] @ c2, axis=0)
        assert np.allclose(comp[i], ref, atol=1e-12)


def test_coarsen_increments():
    dW = sample_bm_batch(SO3, GRID, 10, 0, 2)
    coarse = coarsen_increments(dW, 5)
    assert coarse.shape == (2, 10, 3)
    assert np.allclose(coarse.sum(axis=1), dW.sum(axis=1), atol=1e-14)
