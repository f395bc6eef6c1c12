"""Compact matrix Lie groups with an orthonormal Lie-algebra basis.

Supported built-ins are the k-torus (realized as k commuting 2x2 rotation
blocks) and SO(n).  A group is described by a `LieGroupSpec` carrying the
matrix size n, the algebra dimension d and an orthonormal basis of the
algebra under the trace pairing <X, Y> = -1/2 tr(XY), which is Ad-invariant
and reduces to the Euclidean coordinate product in basis coordinates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, logm


class GroupError(ValueError):
    """Invalid group data (bad basis, failed membership, ...)."""


class CutLocusError(GroupError):
    """Logarithm requested at or beyond the cut locus."""


DEFAULT_MEMBERSHIP_TOL = 1e-9
DEFAULT_CUT_MARGIN = 1e-6


def trace_inner(x: np.ndarray, y: np.ndarray) -> float:
    """Ad-invariant pairing -1/2 tr(xy) on matrices."""
    return -0.5 * float(np.trace(x @ y))


def _skew_basis_so(n: int) -> np.ndarray:
    """Standard generators of so(n), orthonormal under -1/2 tr(XY)."""
    if n == 3:
        l1 = np.array([[0.0, 0, 0], [0, 0, -1], [0, 1, 0]])
        l2 = np.array([[0.0, 0, 1], [0, 0, 0], [-1, 0, 0]])
        l3 = np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 0]])
        return np.stack([l1, l2, l3])
    mats = []
    for i in range(n):
        for j in range(i + 1, n):
            m = np.zeros((n, n))
            m[i, j] = -1.0
            m[j, i] = 1.0
            mats.append(m)
    return np.stack(mats)


def _torus_basis(k: int) -> np.ndarray:
    j = np.array([[0.0, -1.0], [1.0, 0.0]])
    mats = []
    for i in range(k):
        m = np.zeros((2 * k, 2 * k))
        m[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = j
        mats.append(m)
    return np.stack(mats)


@dataclass(frozen=True)
class LieGroupSpec:
    """A compact matrix group with an orthonormal algebra basis.

    kind is one of "torus-k", "special-orthogonal-n" or "user".  The basis
    has shape (d, n, n); membership and orthonormality are enforced within
    metric_tolerance.
    """

    kind: str
    n: int
    d: int
    basis: np.ndarray
    metric_tolerance: float = DEFAULT_MEMBERSHIP_TOL
    cut_margin: float = DEFAULT_CUT_MARGIN

    # -- algebra <-> coordinates ------------------------------------------

    def vector(self, coords) -> np.ndarray:
        """Matrix form of the algebra element with the given coordinates."""
        coords = np.asarray(coords, dtype=float)
        return np.tensordot(coords, self.basis, axes=(-1, 0))

    def coords_of(self, mat: np.ndarray, check: bool = True) -> np.ndarray:
        """Project a matrix onto the basis; optionally check the residual."""
        c = -0.5 * np.einsum("aij,...ji->...a", self.basis, mat)
        if check:
            res = np.linalg.norm(self.vector(c) - mat)
            if res > 1e-8:
                raise GroupError(f"matrix lies outside the algebra span (residual {res:.2e})")
        return c

    def inner(self, x_coords, y_coords) -> float:
        return float(np.dot(np.asarray(x_coords), np.asarray(y_coords)))

    def norm(self, x_coords) -> float:
        return float(np.linalg.norm(x_coords))

    def bracket(self, x_coords, y_coords) -> np.ndarray:
        x, y = self.vector(x_coords), self.vector(y_coords)
        return self.coords_of(x @ y - y @ x)

    # -- exp / log ---------------------------------------------------------

    def exp(self, coords) -> np.ndarray:
        """Group element exp(X) for the algebra vector with given coords."""
        return self.exp_batch(np.asarray(coords, dtype=float)[None])[0]

    def exp_batch(self, coords: np.ndarray) -> np.ndarray:
        """Vectorized exponential, coords shape (..., d) -> (..., n, n)."""
        coords = np.asarray(coords, dtype=float)
        if self.kind.startswith("torus"):
            k = self.d
            out = np.zeros(coords.shape[:-1] + (self.n, self.n))
            c, s = np.cos(coords), np.sin(coords)
            for i in range(k):
                out[..., 2 * i, 2 * i] = c[..., i]
                out[..., 2 * i, 2 * i + 1] = -s[..., i]
                out[..., 2 * i + 1, 2 * i] = s[..., i]
                out[..., 2 * i + 1, 2 * i + 1] = c[..., i]
            return out
        if self.kind == "special-orthogonal-3":
            return _rodrigues(coords)
        flat = coords.reshape(-1, self.d)
        out = np.stack([expm(self.vector(c)) for c in flat])
        return out.reshape(coords.shape[:-1] + (self.n, self.n))

    def log(self, mat: np.ndarray) -> np.ndarray:
        """Principal-branch logarithm in basis coordinates.

        Raises CutLocusError within cut_margin of the cut locus.
        """
        return self.log_batch(np.asarray(mat, dtype=float)[None])[0]

    def log_batch(self, mats: np.ndarray) -> np.ndarray:
        mats = np.asarray(mats, dtype=float)
        guard = np.pi - self.cut_margin
        if self.kind.startswith("torus"):
            k = self.d
            ang = np.arctan2(
                mats[..., 1::2, ::2].diagonal(axis1=-2, axis2=-1),
                mats[..., ::2, ::2].diagonal(axis1=-2, axis2=-1),
            )
            if np.any(np.abs(ang) >= guard):
                raise CutLocusError("rotation angle within cut_margin of pi")
            return ang
        if self.kind == "special-orthogonal-3":
            return _so3_log(mats, guard)
        out = []
        for m in mats.reshape(-1, self.n, self.n):
            x = np.real(logm(m))
            x = 0.5 * (x - x.T)  # clean round-off; algebra is skew here
            ev = np.linalg.eigvals(x)
            if np.max(np.abs(ev.imag)) >= guard:
                raise CutLocusError("rotation angle within cut_margin of pi")
            out.append(self.coords_of(x))
        return np.stack(out).reshape(mats.shape[:-2] + (self.d,))

    # -- adjoint action ----------------------------------------------------

    def ad_coords(self, g: np.ndarray, x_coords) -> np.ndarray:
        """Coordinates of Ad_g X = g X g^-1."""
        return self.ad_matrix(g) @ np.asarray(x_coords, dtype=float)

    def ad_matrix(self, g: np.ndarray) -> np.ndarray:
        """The d x d orthogonal matrix of Ad_g in basis coordinates."""
        if self.kind.startswith("torus"):
            return np.eye(self.d)
        if self.kind == "special-orthogonal-3":
            return np.asarray(g, dtype=float)
        cols = [self.coords_of(g @ b @ g.T) for b in self.basis]
        return np.stack(cols, axis=1)

    # -- membership --------------------------------------------------------

    def membership_residual(self, g: np.ndarray) -> float:
        g = np.asarray(g, dtype=float)
        return float(np.linalg.norm(g.T @ g - np.eye(self.n)))

    def require_member(self, g: np.ndarray) -> np.ndarray:
        res = self.membership_residual(g)
        if res > self.metric_tolerance:
            raise GroupError(f"membership residual {res:.2e} exceeds tolerance")
        return np.asarray(g, dtype=float)

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.n)

    # -- Casimir -----------------------------------------------------------

    def casimir(self) -> "CasimirData":
        c2 = np.einsum("aij,ajk->ik", self.basis, self.basis)
        return CasimirData(c2_matrix=c2, basis=self.basis.copy())

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "kind": self.kind,
            "n": self.n,
            "d": self.d,
            "basis": [m.flatten().tolist() for m in self.basis],
            "tolerance": self.metric_tolerance,
            "cut_margin": self.cut_margin,
        }
        return json.dumps(doc)

    @staticmethod
    def from_json(text: str) -> "LieGroupSpec":
        doc = json.loads(text)
        basis = np.array([np.array(row).reshape(doc["n"], doc["n"]) for row in doc["basis"]])
        return LieGroupSpec(
            kind=doc["kind"],
            n=doc["n"],
            d=doc["d"],
            basis=basis,
            metric_tolerance=doc["tolerance"],
            cut_margin=doc.get("cut_margin", DEFAULT_CUT_MARGIN),
        )


@dataclass(frozen=True)
class CasimirData:
    """Sum over the orthonormal basis of A @ A and the A (x) A contraction."""

    c2_matrix: np.ndarray
    basis: np.ndarray

    def contract_bilinear(self, form) -> float:
        """Evaluate sum_A form(A, A) for a bilinear form on matrices."""
        return float(sum(form(a, a) for a in self.basis))


@dataclass(frozen=True)
class AlgebraVector:
    """Lie-algebra element in orthonormal basis coordinates."""

    spec: LieGroupSpec
    coords: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.spec.vector(self.coords)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))


@dataclass(frozen=True)
class GroupElement:
    """Group element given by its matrix, validated on construction."""

    spec: LieGroupSpec
    matrix: np.ndarray

    def __post_init__(self):
        self.spec.require_member(self.matrix)


def _rodrigues(coords: np.ndarray) -> np.ndarray:
    """Vectorized SO(3) exponential via the Rodrigues formula."""
    coords = np.asarray(coords, dtype=float)
    theta = np.linalg.norm(coords, axis=-1)
    # series coefficients are stable through theta -> 0
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(theta > 1e-8, np.sin(theta) / np.where(theta == 0, 1, theta), 1 - theta**2 / 6)
        b = np.where(
            theta > 1e-8,
            (1 - np.cos(theta)) / np.where(theta == 0, 1, theta) ** 2,
            0.5 - theta**2 / 24,
        )
    k = _hat(coords)
    k2 = k @ k
    eye = np.broadcast_to(np.eye(3), k.shape)
    return eye + a[..., None, None] * k + b[..., None, None] * k2


def _hat(coords: np.ndarray) -> np.ndarray:
    out = np.zeros(coords.shape[:-1] + (3, 3))
    x, y, z = coords[..., 0], coords[..., 1], coords[..., 2]
    out[..., 0, 1] = -z
    out[..., 1, 0] = z
    out[..., 0, 2] = y
    out[..., 2, 0] = -y
    out[..., 1, 2] = -x
    out[..., 2, 1] = x
    return out


def _so3_log(mats: np.ndarray, guard: float) -> np.ndarray:
    tr = np.trace(mats, axis1=-2, axis2=-1)
    ct = np.clip((tr - 1.0) / 2.0, -1.0, 1.0)
    theta = np.arccos(ct)
    if np.any(theta >= guard):
        raise CutLocusError("rotation angle within cut_margin of pi")
    axial = np.stack(
        [
            mats[..., 2, 1] - mats[..., 1, 2],
            mats[..., 0, 2] - mats[..., 2, 0],
            mats[..., 1, 0] - mats[..., 0, 1],
        ],
        axis=-1,
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(
            theta > 1e-6,
            theta / (2.0 * np.sin(np.where(theta == 0, 1, theta))),
            0.5 + theta**2 / 12,
        )
    return scale[..., None] * axial


def make_group(kind: str, **params) -> LieGroupSpec:
    """Construct and validate a group spec.

    make_group("torus", k=1), make_group("special-orthogonal", n=3) or
    make_group("user", basis=array (d, n, n)).
    """
    tol = params.pop("metric_tolerance", DEFAULT_MEMBERSHIP_TOL)
    margin = params.pop("cut_margin", DEFAULT_CUT_MARGIN)
    if kind == "torus":
        k = int(params.pop("k", 1))
        if k < 1:
            raise GroupError("torus rank must be positive")
        spec = LieGroupSpec(f"torus-{k}", 2 * k, k, _torus_basis(k), tol, margin)
    elif kind in ("special-orthogonal", "so"):
        n = int(params.pop("n"))
        if n < 2:
            raise GroupError("SO(n) needs n >= 2")
        basis = _skew_basis_so(n)
        spec = LieGroupSpec(f"special-orthogonal-{n}", n, basis.shape[0], basis, tol, margin)
    elif kind == "user":
        basis = np.asarray(params.pop("basis"), dtype=float)
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise GroupError("user basis must have shape (d, n, n)")
        if np.max(np.abs(basis + np.swapaxes(basis, 1, 2))) > 1e-12:
            raise GroupError("user basis matrices must be skew-symmetric")
        if params.pop("orthonormalize", False):
            basis = _gram_schmidt(basis)
        spec = LieGroupSpec("user", basis.shape[1], basis.shape[0], basis, tol, margin)
    else:
        raise GroupError(f"unknown group kind {kind!r}")
    if params:
        raise GroupError(f"unexpected parameters {sorted(params)}")
    _validate(spec)
    return spec


def _gram_schmidt(basis: np.ndarray) -> np.ndarray:
    out = []
    for b in basis:
        v = b.copy()
        for u in out:
            v -= trace_inner(u, v) * u
        nrm = np.sqrt(trace_inner(v, v))
        if nrm < 1e-12:
            raise GroupError("basis is linearly dependent")
        out.append(v / nrm)
    return np.stack(out)


def _validate(spec: LieGroupSpec, rng_seed: int = 0) -> None:
    gram = np.array([[trace_inner(a, b) for b in spec.basis] for a in spec.basis])
    if np.max(np.abs(gram - np.eye(spec.d))) > max(spec.metric_tolerance, 1e-10):
        raise GroupError("basis is not orthonormal under -1/2 tr(XY)")
    # bracket closure: commutators must stay in the span
    for i in range(spec.d):
        for j in range(spec.d):
            a, b = spec.basis[i], spec.basis[j]
            comm = a @ b - b @ a
            proj = spec.vector(-0.5 * np.einsum("aij,ji->a", spec.basis, comm))
            if np.linalg.norm(comm - proj) > 1e-10:
                raise GroupError("basis is not closed under the bracket")
    # Ad-invariance spot check on random samples
    rng = np.random.default_rng(rng_seed)
    for _ in range(5):
        g = spec.exp(rng.standard_normal(spec.d))
        x = rng.standard_normal(spec.d)
        y = rng.standard_normal(spec.d)
        lhs = spec.inner(spec.ad_coords(g, x), spec.ad_coords(g, y))
        if abs(lhs - spec.inner(x, y)) > 1e-10:
            raise GroupError("inner product is not Ad-invariant on this basis")


# spec-level convenience wrappers ------------------------------------------


def exp_map(spec: LieGroupSpec, x: AlgebraVector) -> GroupElement:
    return GroupElement(spec, spec.exp(x.coords))


def log_map(spec: LieGroupSpec, g: GroupElement) -> AlgebraVector:
    return AlgebraVector(spec, spec.log(g.matrix))


def adjoint_action(spec: LieGroupSpec, g: GroupElement, x: AlgebraVector) -> AlgebraVector:
    return AlgebraVector(spec, spec.ad_coords(g.matrix, x.coords))


def bracket(spec: LieGroupSpec, x: AlgebraVector, y: AlgebraVector) -> AlgebraVector:
    return AlgebraVector(spec, spec.bracket(x.coords, y.coords))


def inner(spec: LieGroupSpec, x: AlgebraVector, y: AlgebraVector) -> float:
    return spec.inner(x.coords, y.coords)
