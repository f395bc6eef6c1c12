import numpy as np
import pytest

from pathrep.cylinder import (
    CylinderExponential,
    GroupCylinderFunction,
    HermiteTarget,
    brownian_rep_pullback,
    constant_one,
    cyclicity_residual,
    energy_rep,
    exp_hermite_pairing,
    fw_inverse,
    fw_transform,
    gauss_regular_rep,
    intertwining_defect,
    involution_J,
    pairing,
    pullback_sqrt_density,
)
from pathrep.flow import rotation_cells, sample_bm_batch
from pathrep.liegroup import make_group
from pathrep.paths import TimeGrid, cm_from_steps

SO3 = make_group("special-orthogonal", n=3)
TORUS = make_group("torus", k=1)
GRID = TimeGrid(1.0, 40)
PHI = cm_from_steps(SO3, [0.0, 0.5, 1.0], [[1.2, 0.0, 0.3], [0.0, -0.8, 0.5]])


def rand_f(dim, seed, scale=0.4):
    rng = np.random.default_rng(seed)
    eta = rng.standard_normal((GRID.steps, dim)) + 1j * rng.standard_normal((GRID.steps, dim))
    return CylinderExponential(GRID, complex(*rng.standard_normal(2)), scale * eta)


def test_expectation_matches_monte_carlo():
    f = rand_f(3, 0)
    dW = sample_bm_batch(SO3, GRID, 1, 0, 40000)
    emp = f.value_batch(dW).mean()
    ref = f.gaussian_expectation()
    assert abs(emp - ref) / abs(ref) < 0.05


def test_product_conjugate_translate():
    f, g = rand_f(3, 1), rand_f(3, 2)
    dW = sample_bm_batch(SO3, GRID, 2, 0, 10)
    assert np.allclose(
        f.product(g).value_batch(dW), f.value_batch(dW) * g.value_batch(dW)
    )
    assert np.allclose(f.conjugate().value_batch(dW), np.conj(f.value_batch(dW)))
    h = np.random.default_rng(3).standard_normal((GRID.steps, 3))
    shifted = f.translate(h)
    assert np.allclose(shifted.value_batch(dW), f.value_batch(dW + h * GRID.dt))


def test_fourier_wiener_transform_algebra():
    f = rand_f(3, 4)
    assert fw_inverse(fw_transform(f)).coeff_distance(f) < 1e-14
    four = fw_transform(fw_transform(fw_transform(fw_transform(f))))
    assert four.coeff_distance(f) < 1e-14
    g = rand_f(3, 5)
    assert abs(pairing(fw_transform(f), fw_transform(g)) - pairing(f, g)) < 1e-12


def test_regular_representation_unitary_and_pointwise():
    f = rand_f(3, 6)
    cells = rotation_cells(PHI, GRID)
    h = np.random.default_rng(7).standard_normal((GRID.steps, 3)) * 0.5
    Uf = gauss_regular_rep(f, cells, h)
    g = rand_f(3, 8)
    assert abs(pairing(Uf, gauss_regular_rep(g, cells, h)) - pairing(f, g)) < 1e-12
    dW = sample_bm_batch(SO3, GRID, 3, 0, 50)
    w_minus_h = dW - h * GRID.dt
    rotinv = np.einsum("kba,Bkb->Bka", cells, w_minus_h)
    direct = (
        np.exp(
            0.5 * np.einsum("Bkd,kd->B", dW, h.astype(complex))
            - 0.25 * np.sum(h**2) * GRID.dt
        )
        * f.value_batch(rotinv)
    )
    assert np.max(np.abs(direct - Uf.value_batch(dW))) < 1e-12


def test_intertwining_convention_identifiable():
    f = rand_f(3, 9)
    assert intertwining_defect(SO3, PHI, GRID, f, 0.5, "right", "derived") < 1e-14
    assert intertwining_defect(SO3, PHI, GRID, f, 1.0, "right", "derived") > 1e-2
    assert intertwining_defect(SO3, PHI, GRID, f, 0.5, "left", "derived") > 1e-2
    assert intertwining_defect(SO3, PHI, GRID, f, 0.5, "right", "flipped") > 1e-2
    # abelian case: left and right derivatives coincide
    ft = rand_f(1, 10)
    pt = cm_from_steps(TORUS, [0.0, 0.5, 1.0], [[1.3], [-0.7]])
    assert intertwining_defect(TORUS, pt, GRID, ft, 0.5, "left", "derived") < 1e-12


def test_representations_unitary():
    f, g = rand_f(3, 11), rand_f(3, 12)
    base = pairing(f, g)
    uf = brownian_rep_pullback(SO3, PHI, GRID, f)
    ug = brownian_rep_pullback(SO3, PHI, GRID, g)
    assert abs(pairing(uf, ug) - base) < 1e-12
    ef = energy_rep(SO3, PHI, GRID, f)
    eg = energy_rep(SO3, PHI, GRID, g)
    assert abs(pairing(ef, eg) - base) < 1e-12


def test_involution_squares_to_identity():
    F = GroupCylinderFunction(
        (0.5, 1.0), lambda mats: mats[0][..., 0, 1] + mats[1][..., 2, 2]
    )
    mats = [SO3.exp(np.array([0.3, 0.1, -0.4]))[None], SO3.exp(np.array([0.0, 0.9, 0.2]))[None]]
    JJ = involution_J(involution_J(F))
    assert np.array_equal(JJ.eval_on_checkpoints(mats), F.eval_on_checkpoints(mats))
    J = involution_J(F)
    assert JJ.eval_on_checkpoints(mats)[0] != J.eval_on_checkpoints(mats)[0]


def test_hermite_pairing_closed_form():
    f = rand_f(3, 13)
    tgt = HermiteTarget(GRID, [0.0, 0.5, 1.0], [[1.0, 0, 0], [0, 1.0, 1.0]], (2, 1))
    dW = sample_bm_batch(SO3, GRID, 5, 0, 200000)
    closed = exp_hermite_pairing(f, tgt)
    mc = (f.value_batch(dW) * tgt.value_batch(dW)).mean()
    assert abs(closed - mc) < 0.05 * max(abs(closed), 1.0)
    assert tgt.norm_sq() == pytest.approx(2.0)


def test_probe_is_sqrt_density():
    phi = cm_from_steps(SO3, [0.0, 0.5, 1.0], [[2.0, 0, 0], [0, 2.0, 0]])
    x = np.array([0.7, -0.4])
    probe = pullback_sqrt_density(phi, GRID, x)
    # norm of the probe is E[Z_{phi_x}]^(1/2)-style Gaussian integral: exactly 1
    assert pairing(probe, probe) == pytest.approx(1.0)


def test_cyclicity_residuals():
    phi = cm_from_steps(SO3, [0.0, 0.5, 1.0], [[2.0, 0, 0], [0, 2.0, 0]])
    pts = [0.0, 1.0, -1.0, 2.0, -2.0, 0.5, -0.5, 3.0, -3.0]
    designs = np.array([[a, b] for a in pts for b in pts])
    one = HermiteTarget(GRID, phi.partition, phi.generators, (0, 0))
    rel, cond = cyclicity_residual(phi, GRID, one, designs)
    assert rel < 1e-5
    deg2 = HermiteTarget(GRID, phi.partition, phi.generators, (2, 2))
    rel2, cond2 = cyclicity_residual(phi, GRID, deg2, designs)
    assert rel2 < 0.05
    assert np.isfinite(cond2)


def test_constant_one():
    one = constant_one(GRID, 3)
    assert one.gaussian_expectation() == pytest.approx(1.0)
