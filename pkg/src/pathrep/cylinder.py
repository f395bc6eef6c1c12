"""Symbolic cylinder-function calculus over the Wiener space of increments.

The workhorse class is the exponential family

    f(w) = exp(c + sum_k <eta_k, dw_k>),

with complex constant c and complex step coefficients eta.  The family is
closed under products, conjugation, Cameron-Martin translation, cellwise
rotation, the Fourier-Wiener transform and all the representation
operators used here, so every identity between those operators can be
checked exactly on the (c, eta) data, with no Monte Carlo error.

Hermite cylinder polynomials in segment averages of the noise are paired
with the exponential family in closed form; that is what the cyclicity
probes use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite_e

from .flow import rotation_cells
from .liegroup import LieGroupSpec
from .paths import CameronMartinPath, PathError, TimeGrid


class CylinderError(ValueError):
    pass


@dataclass(frozen=True)
class CylinderExponential:
    """exp(c + sum_k <eta_k, dw_k>) on a fixed grid."""

    grid: TimeGrid
    c: complex
    eta: np.ndarray  # complex, (N, d)

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=complex)
        if eta.ndim != 2 or eta.shape[0] != self.grid.steps:
            raise CylinderError("eta must be (steps, dim)")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "c", complex(self.c))

    @property
    def dim(self) -> int:
        return self.eta.shape[1]

    # -- algebra -----------------------------------------------------------

    def product(self, other: "CylinderExponential") -> "CylinderExponential":
        self._check(other)
        return CylinderExponential(self.grid, self.c + other.c, self.eta + other.eta)

    def conjugate(self) -> "CylinderExponential":
        return CylinderExponential(self.grid, np.conj(self.c), np.conj(self.eta))

    def scale(self, z: complex) -> "CylinderExponential":
        """Multiply the function by the constant exp(z)."""
        return CylinderExponential(self.grid, self.c + z, self.eta)

    def translate(self, h_steps: np.ndarray) -> "CylinderExponential":
        """Precompose with w -> w + h, where dh_k = h_steps[k] dt."""
        shift = np.sum(self.eta * np.asarray(h_steps)) * self.grid.dt
        return CylinderExponential(self.grid, self.c + shift, self.eta)

    def precompose_rotation(self, cells: np.ndarray) -> "CylinderExponential":
        """Precompose with the map whose increments are dw'_k = R_k dw_k."""
        eta = np.einsum("kab,ka->kb", cells.astype(complex), self.eta)
        return CylinderExponential(self.grid, self.c, eta)

    def _check(self, other):
        if self.grid != other.grid or self.eta.shape != other.eta.shape:
            raise CylinderError("grid/shape mismatch")

    # -- analysis ----------------------------------------------------------

    def quad_form(self) -> complex:
        """q(eta) = sum_k (eta_k . eta_k) dt, without conjugation."""
        return complex(np.sum(self.eta * self.eta) * self.grid.dt)

    def gaussian_expectation(self) -> complex:
        """E f(w) under the Wiener increments dw_k ~ N(0, dt I)."""
        return complex(np.exp(self.c + 0.5 * self.quad_form()))

    def value_batch(self, dW: np.ndarray) -> np.ndarray:
        """Evaluate on an increment block (B, N, d)."""
        return np.exp(self.c + np.einsum("bkd,kd->b", dW.astype(complex), self.eta))

    def coeff_distance(self, other: "CylinderExponential") -> float:
        """Max deviation of (c, eta) data; zero iff the functions coincide."""
        self._check(other)
        return float(
            max(abs(self.c - other.c), np.max(np.abs(self.eta - other.eta), initial=0.0))
        )


def constant_one(grid: TimeGrid, dim: int) -> CylinderExponential:
    return CylinderExponential(grid, 0.0, np.zeros((grid.steps, dim), dtype=complex))


def pairing(f: CylinderExponential, g: CylinderExponential) -> complex:
    """Hermitian L^2 pairing E[f conj(g)]."""
    return f.product(g.conjugate()).gaussian_expectation()


def norm_sq(f: CylinderExponential) -> float:
    return float(np.real(pairing(f, f)))


# -- Fourier-Wiener transform ----------------------------------------------


def fw_transform(f: CylinderExponential) -> CylinderExponential:
    """F f, acting on the exponential family as (c, eta) -> (c + q(eta), i eta)."""
    return CylinderExponential(f.grid, f.c + f.quad_form(), 1j * f.eta)


def fw_inverse(f: CylinderExponential) -> CylinderExponential:
    return CylinderExponential(f.grid, f.c + f.quad_form(), -1j * f.eta)


# -- representations -------------------------------------------------------


def gauss_regular_rep(
    f: CylinderExponential, cells: np.ndarray | None, h_steps: np.ndarray | None
) -> CylinderExponential:
    """Weighted regular representation of the rotation/translation pair.

    U_{R,h} f(w) = exp(<h, w>/2 - |h|^2/4) f(R^-1 (w - h)); the square-root
    weight makes U unitary on L^2 of the Wiener measure.
    """
    out = f
    if cells is not None:
        inv_cells = np.swapaxes(cells, 1, 2)
        out = out.precompose_rotation(inv_cells)
    if h_steps is not None:
        h_steps = np.asarray(h_steps, dtype=float)
        h_norm_sq = float(np.sum(h_steps**2) * f.grid.dt)
        out = out.translate(-h_steps)
        out = CylinderExponential(
            out.grid, out.c - 0.25 * h_norm_sq, out.eta + 0.5 * h_steps
        )
    return out


def energy_rep(
    spec: LieGroupSpec,
    phi: CameronMartinPath,
    grid: TimeGrid,
    f: CylinderExponential,
    kappa: float = 0.5,
    derivative: str = "right",
) -> CylinderExponential:
    """Phase-twisted rotation representation of a finite-energy path.

    E^(kappa)_phi f(w) = exp(-i kappa int <m, dw>) f(O_{phi^-1} w), where m
    is the right (phi' phi^-1) or left (phi^-1 phi') logarithmic derivative.
    """
    a, b = phi.log_derivatives(grid)
    m = b if derivative == "right" else a
    # O_{phi^-1} has cell matrices Ad_{phi(t_k)}^-1, so eta picks up Ad_phi
    cells_inv = np.swapaxes(rotation_cells(phi, grid), 1, 2)
    out = f.precompose_rotation(cells_inv)
    return CylinderExponential(out.grid, out.c, out.eta - 1j * kappa * m)


def brownian_rep_pullback(
    spec: LieGroupSpec,
    phi: CameronMartinPath,
    grid: TimeGrid,
    f: CylinderExponential,
    convention: str = "derived",
) -> CylinderExponential:
    """Pullback of right translation by phi through the Ito map, with the
    square-root Girsanov weight:

    u^R_phi f(w) = exp(-S_b/2 - |phi|_H^2/4) f(O_{phi^-1} w + int phi^-1 dphi),

    with S_b = int <phi' phi^-1, dw>.  convention="flipped" negates the sign
    of the stochastic phase, for comparison runs.
    """
    if convention not in ("derived", "flipped"):
        raise CylinderError("convention must be 'derived' or 'flipped'")
    sign = -0.5 if convention == "derived" else 0.5
    a, b = phi.log_derivatives(grid)
    cells_inv = np.swapaxes(rotation_cells(phi, grid), 1, 2)
    # translate first: the shift int <eta, a> dt pairs with the original eta
    out = f.translate(a).precompose_rotation(cells_inv)
    return CylinderExponential(
        out.grid, out.c - 0.25 * phi.energy(), out.eta + sign * b
    )


def intertwining_defect(
    spec: LieGroupSpec,
    phi: CameronMartinPath,
    grid: TimeGrid,
    f: CylinderExponential,
    kappa: float = 0.5,
    derivative: str = "right",
    convention: str = "derived",
) -> float:
    """Coefficient distance between F u^R_phi F^-1 f and E^(kappa)_phi f."""
    lhs = fw_transform(
        brownian_rep_pullback(spec, phi, grid, fw_inverse(f), convention=convention)
    )
    rhs = energy_rep(spec, phi, grid, f, kappa=kappa, derivative=derivative)
    return lhs.coeff_distance(rhs)


# -- group cylinder functions and the inversion involution ------------------


@dataclass(frozen=True)
class GroupCylinderFunction:
    """F(g) = fn(g(t_1), ..., g(t_m)) for fixed sample times."""

    times: tuple  # strictly increasing, in (0, horizon]
    fn: object  # callable: list of (B, n, n) arrays -> (B,) values
    label: str = ""

    def node_indices(self, grid: TimeGrid):
        idx = [int(round(t / grid.dt)) for t in self.times]
        for t, k in zip(self.times, idx):
            if abs(k * grid.dt - t) > 1e-9:
                raise PathError("sample time not on the grid")
        return idx

    def eval_on_checkpoints(self, mats: list) -> np.ndarray:
        return np.asarray(self.fn(mats))


def involution_J(F: GroupCylinderFunction) -> GroupCylinderFunction:
    """J F (g) = F(Theta g), Theta the pointwise inversion of group paths."""

    def fn(mats):
        return F.fn([np.swapaxes(m, -1, -2) for m in mats])

    return GroupCylinderFunction(F.times, fn, label=f"J[{F.label}]")


# -- Hermite cylinder polynomials ------------------------------------------


@dataclass(frozen=True)
class HermiteTarget:
    """Product of probabilist Hermite polynomials He_{n_j}(y_j) with

    y_j = <xi_j, w(s_j) - w(s_{j-1})> / sigma_j,   sigma_j = |xi_j| sqrt(ds_j),

    for a partition 0 = s_0 < ... < s_m and directions xi_j.  The y_j are
    independent standard normals under the Wiener measure.
    """

    grid: TimeGrid
    partition: np.ndarray  # (m+1,)
    directions: np.ndarray  # (m, d)
    orders: tuple  # (m,) nonnegative ints

    def __post_init__(self):
        part = np.asarray(self.partition, dtype=float)
        dirs = np.asarray(self.directions, dtype=float)
        if part[0] != 0.0 or np.any(np.diff(part) <= 0):
            raise CylinderError("bad partition")
        if dirs.shape[0] != len(part) - 1 or len(self.orders) != len(part) - 1:
            raise CylinderError("need one direction and order per segment")
        pos = part / self.grid.dt
        if np.max(np.abs(pos - np.round(pos))) > 1e-9:
            raise CylinderError("grid must subdivide the partition")
        object.__setattr__(self, "partition", part)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "orders", tuple(int(n) for n in self.orders))

    def _segments(self):
        idx = np.round(self.partition / self.grid.dt).astype(int)
        return [slice(idx[j], idx[j + 1]) for j in range(len(self.orders))]

    def sigmas(self) -> np.ndarray:
        ds = np.diff(self.partition)
        return np.linalg.norm(self.directions, axis=1) * np.sqrt(ds)

    def value_batch(self, dW: np.ndarray) -> np.ndarray:
        out = np.ones(dW.shape[0])
        sig = self.sigmas()
        for j, (sl, n) in enumerate(zip(self._segments(), self.orders)):
            y = dW[:, sl, :] @ self.directions[j] / sig[j]
            y = y.sum(axis=1)
            coeffs = np.zeros(n + 1)
            coeffs[n] = 1.0
            out = out * hermite_e.hermeval(y, coeffs)
        return out

    def norm_sq(self) -> float:
        return float(np.prod([math.factorial(n) for n in self.orders]))


def exp_hermite_pairing(f: CylinderExponential, p: HermiteTarget) -> complex:
    """E[f(w) p(w)] in closed form.

    With S = sum <eta_k, dw_k> and independent standard y_j,
    E[e^{c+S} prod He_{n_j}(y_j)] = e^c E[e^S] prod Cov(S, y_j)^{n_j}.
    """
    if f.grid != p.grid:
        raise CylinderError("grid mismatch")
    sig = p.sigmas()
    total = f.gaussian_expectation()
    for j, (sl, n) in enumerate(zip(p._segments(), p.orders)):
        lam = np.sum(f.eta[sl] @ p.directions[j]) * f.grid.dt / sig[j]
        total = total * lam**n
    return complex(total)


# -- cyclicity probes ------------------------------------------------------


def pullback_sqrt_density(
    phi: CameronMartinPath, grid: TimeGrid, x: np.ndarray
) -> CylinderExponential:
    """The probe (B^L)^* sqrt(Z^R) for the scaled path with segment scales x.

    For the piecewise-exponential family the square-root density is itself
    in the exponential class:
        exp(-(1/4) sum_j x_j^2 |xi_j|^2 ds_j + (1/2) sum x_j <xi_j, dw over seg j>).
    """
    x = np.asarray(x, dtype=float)
    ds = np.diff(phi.partition)
    gens = phi.generators
    c = -0.25 * float(np.sum(x**2 * np.sum(gens**2, axis=1) * ds))
    eta = np.zeros((grid.steps, phi.spec.d), dtype=complex)
    mids = grid.nodes[:-1]
    for j, xi in enumerate(gens):
        sel = (mids >= phi.partition[j] - 1e-12) & (mids < phi.partition[j + 1] - 1e-12)
        eta[sel] = 0.5 * x[j] * xi
    return CylinderExponential(grid, c, eta)


def cyclicity_residual(
    phi: CameronMartinPath,
    grid: TimeGrid,
    target: HermiteTarget,
    designs: np.ndarray,
    ridge: float = 1e-10,
):
    """Least-squares distance from a Hermite target to the probe span.

    designs is (p, m): each row gives the segment scales of one probe.
    Returns (relative residual, condition number of the Gram matrix).
    """
    probes = [pullback_sqrt_density(phi, grid, x) for x in np.atleast_2d(designs)]
    p = len(probes)
    gram = np.empty((p, p))
    for i in range(p):
        for j in range(p):
            gram[i, j] = np.real(pairing(probes[j], probes[i]))
    cross = np.array([np.real(exp_hermite_pairing(u, target)) for u in probes])
    cond = float(np.linalg.cond(gram))
    coef = np.linalg.solve(gram + ridge * np.eye(p), cross)
    t_norm_sq = target.norm_sq()
    res_sq = t_norm_sq - 2.0 * coef @ cross + coef @ gram @ coef
    rel = float(np.sqrt(max(res_sq, 0.0) / t_norm_sq))
    return rel, cond
