"""Discretized path spaces on a group and its Lie algebra.

Algebra paths start at 0, group paths at the identity, both on a uniform
time grid.  Finite-energy group paths are represented by the
piecewise-exponential class phi(s) = exp(-(s - t_{j-1}) xi_j) phi(t_{j-1}),
which admits exact evaluation, exact energy and exact piecewise-constant
logarithmic derivatives.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .liegroup import LieGroupSpec


class PathError(ValueError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    steps: int

    def __post_init__(self):
        if self.horizon <= 0 or self.steps < 1:
            raise PathError("need horizon > 0 and steps >= 1")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps + 1)

    def __eq__(self, other):
        return (
            isinstance(other, TimeGrid)
            and self.horizon == other.horizon
            and self.steps == other.steps
        )

    def __hash__(self):
        return hash((self.horizon, self.steps))


@dataclass(frozen=True)
class AlgebraPath:
    """Path in the Lie algebra sampled at grid nodes, w_0 = 0."""

    spec: LieGroupSpec
    grid: TimeGrid
    values: np.ndarray  # (N+1, d)

    def __post_init__(self):
        if self.values.shape != (self.grid.steps + 1, self.spec.d):
            raise PathError("value array does not match grid/spec")
        if np.any(self.values[0] != 0.0):
            raise PathError("algebra path must start at 0")

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    @staticmethod
    def from_increments(spec, grid, dw: np.ndarray) -> "AlgebraPath":
        vals = np.vstack([np.zeros((1, spec.d)), np.cumsum(dw, axis=0)])
        return AlgebraPath(spec, grid, vals)


@dataclass(frozen=True)
class GroupPath:
    """Path in the group sampled at grid nodes, g_0 = identity."""

    spec: LieGroupSpec
    grid: TimeGrid
    values: np.ndarray  # (N+1, n, n)

    def __post_init__(self):
        if self.values.shape != (self.grid.steps + 1, self.spec.n, self.spec.n):
            raise PathError("value array does not match grid/spec")
        if np.linalg.norm(self.values[0] - np.eye(self.spec.n)) > 1e-12:
            raise PathError("group path must start at the identity")
        worst = max(self.spec.membership_residual(g) for g in self.values[:: max(1, len(self.values) // 8)])
        if worst > self.spec.metric_tolerance:
            raise PathError(f"group path leaves the manifold (residual {worst:.2e})")


def path_multiply(a: GroupPath, b: GroupPath) -> GroupPath:
    if a.grid != b.grid:
        raise PathError("grid mismatch")
    return GroupPath(a.spec, a.grid, np.einsum("kij,kjl->kil", a.values, b.values))


def path_invert(a: GroupPath) -> GroupPath:
    # orthogonal matrices: inverse is the transpose, exact involution
    return GroupPath(a.spec, a.grid, np.swapaxes(a.values, 1, 2))


def discrete_energy(g: GroupPath) -> float:
    """Sum |log(g_k^-1 g_{k+1})|^2 / dt over grid cells."""
    ratios = np.einsum("kji,kjl->kil", g.values[:-1], g.values[1:])
    logs = g.spec.log_batch(ratios)
    return float(np.sum(logs**2) / g.grid.dt)


def discrete_log_derivative(g: GroupPath, side: str = "left") -> np.ndarray:
    """Per-cell (1/dt) log of consecutive ratios, shape (N, d)."""
    if side == "left":
        ratios = np.einsum("kji,kjl->kil", g.values[:-1], g.values[1:])
    elif side == "right":
        ratios = np.einsum("kij,klj->kil", g.values[1:], g.values[:-1])
    else:
        raise PathError("side must be 'left' or 'right'")
    return g.spec.log_batch(ratios) / g.grid.dt


@dataclass(frozen=True)
class CameronMartinPath:
    """Piecewise-exponential finite-energy group path.

    On segment j the path is phi(s) = exp(-(s - t_{j-1}) xi_j) phi(t_{j-1}).
    Node values are precomputed so evaluation is an exact product of
    exponentials.
    """

    spec: LieGroupSpec
    partition: np.ndarray  # (m+1,)
    generators: np.ndarray  # (m, d)
    orientation: str = "left"
    _node_values: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        part = np.asarray(self.partition, dtype=float)
        gens = np.asarray(self.generators, dtype=float)
        if part.ndim != 1 or np.any(np.diff(part) <= 0):
            raise PathError("partition must be strictly increasing")
        if part[0] != 0.0:
            raise PathError("partition must start at 0")
        if gens.shape != (len(part) - 1, self.spec.d):
            raise PathError("one generator per segment required")
        if self.orientation != "left":
            raise PathError("only the left-factor orientation is supported")
        object.__setattr__(self, "partition", part)
        object.__setattr__(self, "generators", gens)
        nodes = [np.eye(self.spec.n)]
        for j, xi in enumerate(gens):
            seg = self.spec.exp(-(part[j + 1] - part[j]) * xi)
            nodes.append(seg @ nodes[-1])
        object.__setattr__(self, "_node_values", np.stack(nodes))

    @property
    def horizon(self) -> float:
        return float(self.partition[-1])

    def segment_of(self, t: float) -> int:
        """Index of the segment owning time t (right-open cells)."""
        j = int(np.searchsorted(self.partition, t, side="right")) - 1
        return min(max(j, 0), len(self.generators) - 1)

    def eval(self, t: float) -> np.ndarray:
        if t < -1e-12 or t > self.horizon + 1e-12:
            raise PathError("time out of range")
        j = self.segment_of(t)
        head = self.spec.exp(-(t - self.partition[j]) * self.generators[j])
        return head @ self._node_values[j]

    def sample(self, grid: TimeGrid) -> GroupPath:
        self._require_refines(grid)
        vals = np.stack([self.eval(t) for t in grid.nodes])
        return GroupPath(self.spec, grid, vals)

    def energy(self) -> float:
        dts = np.diff(self.partition)
        return float(np.sum(np.sum(self.generators**2, axis=1) * dts))

    def log_derivatives(self, grid: TimeGrid):
        """Exact per-cell step functions (a, b) with a = phi^-1 phi',
        b = phi' phi^-1, each of shape (N, d).

        b is constantly -xi_j on segment j; a is -Ad_{phi(t_{j-1})^-1} xi_j,
        also constant per segment for this class.
        """
        self._require_refines(grid)
        mids = grid.nodes[:-1]
        a = np.empty((grid.steps, self.spec.d))
        b = np.empty((grid.steps, self.spec.d))
        for j, xi in enumerate(self.generators):
            ad_inv = self.spec.ad_matrix(self._node_values[j].T)
            sel = (mids >= self.partition[j] - 1e-12) & (mids < self.partition[j + 1] - 1e-12)
            b[sel] = -xi
            a[sel] = -(ad_inv @ xi)
        return a, b

    def inverse(self) -> "CameronMartinPath":
        """Pointwise inverse path; stays in the piecewise-exponential class."""
        gens = np.empty_like(self.generators)
        for j, xi in enumerate(self.generators):
            ad_inv = self.spec.ad_matrix(self._node_values[j].T)
            gens[j] = -(ad_inv @ xi)
        return CameronMartinPath(self.spec, self.partition.copy(), gens)

    def _require_refines(self, grid: TimeGrid) -> None:
        if abs(grid.horizon - self.horizon) > 1e-12:
            raise PathError("grid horizon differs from path horizon")
        pos = self.partition / grid.dt
        if np.max(np.abs(pos - np.round(pos))) > 1e-9:
            raise PathError("grid must subdivide the Cameron-Martin partition")

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {
                "partition": self.partition.tolist(),
                "generators": self.generators.tolist(),
                "orientation": self.orientation,
            }
        )

    @staticmethod
    def from_json(spec: LieGroupSpec, text: str) -> "CameronMartinPath":
        doc = json.loads(text)
        return CameronMartinPath(
            spec,
            np.array(doc["partition"]),
            np.array(doc["generators"]),
            doc.get("orientation", "left"),
        )


def cm_from_steps(spec, partition, generators) -> CameronMartinPath:
    return CameronMartinPath(spec, np.asarray(partition, float), np.asarray(generators, float))


def cm_scaled(phi: CameronMartinPath, x: np.ndarray) -> CameronMartinPath:
    """The family phi_x with generators x_j * xi_j."""
    x = np.asarray(x, dtype=float)
    return CameronMartinPath(phi.spec, phi.partition.copy(), x[:, None] * phi.generators)


def cm_multiply_on_grid(a: CameronMartinPath, b: CameronMartinPath, grid: TimeGrid) -> GroupPath:
    """Pointwise product a(t) b(t) sampled on the grid."""
    return path_multiply(a.sample(grid), b.sample(grid))
