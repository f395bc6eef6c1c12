import numpy as np
import pytest

from pathrep.liegroup import make_group
from pathrep.paths import (
    AlgebraPath,
    CameronMartinPath,
    GroupPath,
    PathError,
    TimeGrid,
    cm_from_steps,
    cm_scaled,
    discrete_energy,
    discrete_log_derivative,
    path_invert,
    path_multiply,
)

SO3 = make_group("special-orthogonal", n=3)
GRID = TimeGrid(1.0, 40)
PHI = cm_from_steps(SO3, [0.0, 0.5, 1.0], [[1.2, 0.0, 0.3], [0.0, -0.8, 0.5]])


def test_grid_validation():
    with pytest.raises(PathError):
        TimeGrid(0.0, 10)
    with pytest.raises(PathError):
        TimeGrid(1.0, 0)
    assert TimeGrid(1.0, 10) == TimeGrid(1.0, 10)
    assert TimeGrid(1.0, 10) != TimeGrid(1.0, 20)


def test_algebra_path_increments():
    dw = np.arange(12, dtype=float).reshape(4, 3)
    w = AlgebraPath.from_increments(SO3, TimeGrid(1.0, 4), dw)
    assert np.allclose(w.increments, dw)
    assert np.all(w.values[0] == 0.0)


def test_group_path_must_stay_on_manifold():
    vals = np.tile(np.eye(3), (GRID.steps + 1, 1, 1))
    vals[5] = 2 * np.eye(3)
    with pytest.raises(PathError):
        GroupPath(SO3, GRID, vals)


def test_cm_energy_exact():
    assert PHI.energy() == pytest.approx(0.5 * (1.2**2 + 0.3**2) + 0.5 * (0.8**2 + 0.5**2))
    sampled = PHI.sample(GRID)
    assert discrete_energy(sampled) == pytest.approx(PHI.energy(), abs=1e-12)


def test_cm_log_derivatives_relation():
    a, b = PHI.log_derivatives(GRID)
    # a = Ad_{phi^-1} b cell by cell, exactly
    for k, t in enumerate(GRID.nodes[:-1]):
        ad_inv = SO3.ad_matrix(PHI.eval(t).T)
        assert np.allclose(a[k], ad_inv @ b[k], atol=1e-12)
    # b is piecewise constant equal to -xi_j
    assert np.allclose(b[:20], -PHI.generators[0])
    assert np.allclose(b[20:], -PHI.generators[1])
    disc = discrete_log_derivative(PHI.sample(GRID), "right")
    assert np.allclose(disc, b, atol=1e-10)


def test_cm_inverse_closed_under_class():
    inv = PHI.inverse()
    for t in np.linspace(0, 1, 9):
        assert np.allclose(inv.eval(t), PHI.eval(t).T, atol=1e-12)
    prod = path_multiply(PHI.sample(GRID), inv.sample(GRID))
    assert np.allclose(prod.values, np.eye(3), atol=1e-12)
    assert np.allclose(path_invert(path_invert(PHI.sample(GRID))).values,
                       PHI.sample(GRID).values)


def test_cm_scaled_family():
    scaled = cm_scaled(PHI, np.array([2.0, 0.0]))
    assert scaled.energy() == pytest.approx(4 * 0.5 * (1.2**2 + 0.3**2))


def test_grid_must_refine_partition():
    phi = cm_from_steps(SO3, [0.0, 1.0 / 3.0, 1.0], [[1, 0, 0], [0, 1, 0]])
    with pytest.raises(PathError):
        phi.sample(TimeGrid(1.0, 40))
    phi.sample(TimeGrid(1.0, 39))  # 39 divides thirds


def test_cm_serialization_roundtrip():
    back = CameronMartinPath.from_json(SO3, PHI.to_json())
    assert np.array_equal(back.partition, PHI.partition)
    assert np.array_equal(back.generators, PHI.generators)
