"""Sampling of algebra-valued Brownian motion and its development.

The development uses the geometric Euler step g_{k+1} = g_k exp(dw_k)
(resp. exp(dw_k) g_k), which stays on the group exactly and makes the
discrete left/right Ito maps exact inverses of the development.

Randomness is counter-based (Philox) and chunked: path index i draws row
i % CHUNK from the stream keyed by (seed, i // CHUNK), so ensembles are
reproducible for any partitioning of the index range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .liegroup import LieGroupSpec
from .paths import AlgebraPath, CameronMartinPath, GroupPath, PathError, TimeGrid

CHUNK = 256


@dataclass(frozen=True)
class NoiseStream:
    """Deterministic noise source identified by (seed, path index)."""

    seed: int
    index: int = 0
    kind: str = "philox-chunked"


def _chunk_normals(seed: int, chunk_index: int, steps: int, dim: int) -> np.ndarray:
    key = np.array([seed, chunk_index], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.standard_normal((CHUNK, steps, dim))


def normal_increments(seed: int, start: int, count: int, steps: int, dim: int) -> np.ndarray:
    """Standard-normal increment block for path indices [start, start+count)."""
    out = np.empty((count, steps, dim))
    i = start
    while i < start + count:
        c, r = divmod(i, CHUNK)
        take = min(CHUNK - r, start + count - i)
        out[i - start : i - start + take] = _chunk_normals(seed, c, steps, dim)[r : r + take]
        i += take
    return out


def sample_bm(spec: LieGroupSpec, grid: TimeGrid, noise: NoiseStream) -> AlgebraPath:
    """One algebra-valued Brownian path with covariance dt * I per step."""
    z = normal_increments(noise.seed, noise.index, 1, grid.steps, spec.d)[0]
    return AlgebraPath.from_increments(spec, grid, np.sqrt(grid.dt) * z)


def sample_bm_batch(spec, grid, seed: int, start: int, count: int) -> np.ndarray:
    """Increment blocks (count, N, d) for a contiguous index range."""
    z = normal_increments(seed, start, count, grid.steps, spec.d)
    return np.sqrt(grid.dt) * z


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant algebra-valued function on grid cells."""

    spec: LieGroupSpec
    grid: TimeGrid
    values: np.ndarray  # (N, d)

    def __post_init__(self):
        if self.values.shape != (self.grid.steps, self.spec.d):
            raise PathError("step values do not match grid")

    def l2_norm_sq(self) -> float:
        return float(np.sum(self.values**2) * self.grid.dt)


def develop_left(w: AlgebraPath) -> GroupPath:
    """Solve dg = g dw: g_{k+1} = g_k exp(dw_k)."""
    steps = w.spec.exp_batch(w.increments)
    g = np.empty((w.grid.steps + 1, w.spec.n, w.spec.n))
    g[0] = np.eye(w.spec.n)
    for k in range(w.grid.steps):
        g[k + 1] = g[k] @ steps[k]
    return GroupPath(w.spec, w.grid, g)


def develop_right(w: AlgebraPath) -> GroupPath:
    """Solve dg = dw g: g_{k+1} = exp(dw_k) g_k."""
    steps = w.spec.exp_batch(w.increments)
    g = np.empty((w.grid.steps + 1, w.spec.n, w.spec.n))
    g[0] = np.eye(w.spec.n)
    for k in range(w.grid.steps):
        g[k + 1] = steps[k] @ g[k]
    return GroupPath(w.spec, w.grid, g)


def ito_left(g: GroupPath) -> AlgebraPath:
    """Discrete B^L: increments log(g_k^-1 g_{k+1})."""
    ratios = np.einsum("kji,kjl->kil", g.values[:-1], g.values[1:])
    dw = g.spec.log_batch(ratios)
    return AlgebraPath.from_increments(g.spec, g.grid, dw)


def ito_right(g: GroupPath) -> AlgebraPath:
    """Discrete B^R: increments log(g_{k+1} g_k^-1)."""
    ratios = np.einsum("kij,klj->kil", g.values[1:], g.values[:-1])
    dw = g.spec.log_batch(ratios)
    return AlgebraPath.from_increments(g.spec, g.grid, dw)


def stoch_integral(h: StepFunction, w: AlgebraPath) -> float:
    """Left-point integral sum_k <h_k, dw_k>."""
    if h.grid != w.grid:
        raise PathError("grid mismatch")
    return float(np.sum(h.values * w.increments))


def rotation_cells(phi: CameronMartinPath, grid: TimeGrid) -> np.ndarray:
    """Ad_{phi(t_k)} in basis coordinates per grid cell, shape (N, d, d)."""
    phi._require_refines(grid)
    return np.stack([phi.spec.ad_matrix(phi.eval(t)) for t in grid.nodes[:-1]])


def rotate_path(phi: CameronMartinPath, w: AlgebraPath) -> AlgebraPath:
    """O_phi(w): increments Ad_{phi(t_k)} dw_k."""
    rots = rotation_cells(phi, w.grid)
    dw = np.einsum("kab,kb->ka", rots, w.increments)
    return AlgebraPath.from_increments(w.spec, w.grid, dw)


def quadratic_variation(w: AlgebraPath) -> np.ndarray:
    """d x d matrix sum_k dw_k dw_k^T in basis coordinates."""
    dw = w.increments
    return dw.T @ dw


# -- batched development ----------------------------------------------------


def develop_scan(
    spec: LieGroupSpec,
    dW: np.ndarray,
    checkpoints=(),
    h_right: np.ndarray | None = None,
    casimir_compensator: bool = False,
    dt: float | None = None,
):
    """One pass of geometric Euler over an increment block dW (B, N, d).

    Returns a dict with:
      "checkpoints": {k: g_k as (B, n, n)} for each requested node index,
      "h_right": accumulated sum_k <h_k, Ad_{g_k} dw_k>; h_right may be one
                 (N, d) step-value array (result (B,)) or a dict of named
                 arrays (result keyed the same way),
      "compensator": {k: (B, n, n)} left-rule integrals of g C2 / 2 dt at the
                 requested checkpoints when casimir_compensator is set.
    """
    nb, steps, d = dW.shape
    n = spec.n
    want = sorted(set(int(k) for k in checkpoints))
    g = np.broadcast_to(np.eye(n), (nb, n, n)).copy()
    out_cp = {}
    h_named = isinstance(h_right, dict)
    if h_right is not None:
        h_stack = np.stack(list(h_right.values()) if h_named else [h_right])
        acc = np.zeros((len(h_stack), nb))
    comp = np.zeros((nb, n, n)) if casimir_compensator else None
    comp_out = {}
    c2 = spec.casimir().c2_matrix if casimir_compensator else None
    if casimir_compensator and dt is None:
        raise PathError("dt is required for the Casimir compensator")
    if 0 in want:
        out_cp[0] = g.copy()
        if casimir_compensator:
            comp_out[0] = comp.copy()
    for k in range(steps):
        if h_right is not None:
            # dB^R_k = Ad_{g_k} dw_k, exact at grid level
            rot = np.einsum("bij,bj->bi", g, dW[:, k]) if spec.kind == "special-orthogonal-3" else (
                dW[:, k]
                if spec.kind.startswith("torus")
                else np.stack([spec.ad_matrix(gi) @ wi for gi, wi in zip(g, dW[:, k])])
            )
            acc += np.einsum("bd,qd->qb", rot, h_stack[:, k])
        if casimir_compensator:
            comp += 0.5 * dt * (g @ c2)
        g = g @ spec.exp_batch(dW[:, k])
        if (k + 1) in want:
            out_cp[k + 1] = g.copy()
            if casimir_compensator:
                comp_out[k + 1] = comp.copy()
    result = {"checkpoints": out_cp}
    if h_right is not None:
        result["h_right"] = dict(zip(h_right.keys(), acc)) if h_named else acc[0]
    if casimir_compensator:
        result["compensator"] = comp_out
    return result


def coarsen_increments(dW: np.ndarray, factor: int) -> np.ndarray:
    """Aggregate fine increments to a coarser grid (same Brownian path)."""
    nb, steps, d = dW.shape
    if steps % factor:
        raise PathError("coarsening factor must divide the step count")
    return dW.reshape(nb, steps // factor, factor, d).sum(axis=2)
