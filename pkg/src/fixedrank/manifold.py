"""Points, tangent vectors and basic geometry of the manifold of rank-r matrices.

A point is stored as ``Y = U @ S @ V.T`` with column-orthonormal ``U`` (m x r),
``V`` (n x r) and an invertible core ``S`` (r x r). The core is diagonal after
:meth:`FixedRankPoint.renormalize` but may be a general matrix in between.

A tangent vector at ``Y`` is stored as the triple ``(M, Up, Vp)`` and stands
for ``U @ M @ V.T + Up @ V.T + U @ Vp.T`` with ``U.T @ Up = 0``, ``V.T @ Vp = 0``.
Tangent vectors do not keep a reference to their base point; every operation
that interprets one takes the base point explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Dims",
    "FixedRankPoint",
    "TangentVector",
    "LowRankSum",
    "RankDeficiencyError",
    "orthonormalize",
    "embed",
    "embed_tangent",
    "tangent_project",
    "normal_part",
    "truncated_svd",
    "inner",
    "weingarten",
    "modeling_error",
    "random_point",
    "random_tangent",
    "project_lowrank",
    "dense_tangent_project",
]

ORTHO_TOL = 1e-12
GAP_TOL = 1e-12


class RankDeficiencyError(np.linalg.LinAlgError):
    """Raised when a matrix that must have rank r has a vanishing r-th singular value."""


@dataclass(frozen=True)
class Dims:
    m: int
    n: int
    r: int

    def __post_init__(self):
        if self.r < 1 or self.r > min(self.m, self.n):
            raise ValueError(f"rank must satisfy 1 <= r <= min(m, n), got {self}")


def orthonormalize(A):
    """Thin QR factorization ``A = Q @ R`` with ``diag(R) >= 0``.

    Fixing the signs makes the factors a deterministic function of ``A``.
    """
    Q, R = np.linalg.qr(A, mode="reduced")
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs, R * signs[:, None]


@dataclass(frozen=True, eq=False)
class FixedRankPoint:
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    # set by truncated_svd when sigma_r and sigma_{r+1} of the input nearly coincide
    gap_warning: bool = field(default=False, compare=False)

    def __post_init__(self):
        U, S, V = (np.asarray(a, dtype=float) for a in (self.U, self.S, self.V))
        if U.ndim != 2 or V.ndim != 2 or S.shape != (U.shape[1], V.shape[1]):
            raise ValueError(f"incompatible factor shapes {U.shape}, {S.shape}, {V.shape}")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "V", V)

    @property
    def dims(self) -> Dims:
        return Dims(self.U.shape[0], self.V.shape[0], self.U.shape[1])

    @property
    def shape(self):
        return (self.U.shape[0], self.V.shape[0])

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    def singular_values(self):
        return np.linalg.svd(self.S, compute_uv=False)

    def renormalize(self) -> "FixedRankPoint":
        """Diagonalize the core with a small SVD and absorb its factors into U, V."""
        Us, s, Vst = np.linalg.svd(self.S)
        return FixedRankPoint(self.U @ Us, np.diag(s), self.V @ Vst.T, self.gap_warning)

    def check(self, tol=ORTHO_TOL):
        """Raise ``ValueError`` if the factor invariants are violated."""
        r = self.rank
        eye = np.eye(r)
        if np.linalg.norm(self.U.T @ self.U - eye) > tol * max(1, r):
            raise ValueError("U is not column-orthonormal")
        if np.linalg.norm(self.V.T @ self.V - eye) > tol * max(1, r):
            raise ValueError("V is not column-orthonormal")
        if not np.all(np.isfinite(self.S)) or self.singular_values()[-1] <= 0:
            raise ValueError("core S is singular")
        return self


@dataclass(frozen=True, eq=False)
class TangentVector:
    M: np.ndarray
    Up: np.ndarray
    Vp: np.ndarray

    def __post_init__(self):
        M, Up, Vp = (np.asarray(a, dtype=float) for a in (self.M, self.Up, self.Vp))
        r = M.shape[0]
        if M.shape != (r, r) or Up.shape[1] != r or Vp.shape[1] != r:
            raise ValueError(f"incompatible tangent shapes {M.shape}, {Up.shape}, {Vp.shape}")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "Up", Up)
        object.__setattr__(self, "Vp", Vp)

    @property
    def dims(self) -> Dims:
        return Dims(self.Up.shape[0], self.Vp.shape[0], self.M.shape[0])

    @classmethod
    def zeros(cls, dims: Dims) -> "TangentVector":
        return cls(np.zeros((dims.r, dims.r)), np.zeros((dims.m, dims.r)), np.zeros((dims.n, dims.r)))

    def __add__(self, other: "TangentVector") -> "TangentVector":
        return TangentVector(self.M + other.M, self.Up + other.Up, self.Vp + other.Vp)

    def __sub__(self, other: "TangentVector") -> "TangentVector":
        return TangentVector(self.M - other.M, self.Up - other.Up, self.Vp - other.Vp)

    def __mul__(self, c) -> "TangentVector":
        return TangentVector(c * self.M, c * self.Up, c * self.Vp)

    __rmul__ = __mul__

    def __neg__(self) -> "TangentVector":
        return TangentVector(-self.M, -self.Up, -self.Vp)

    def norm(self) -> float:
        # the three blocks are mutually orthogonal in the trace inner product
        return float(np.sqrt(np.sum(self.M**2) + np.sum(self.Up**2) + np.sum(self.Vp**2)))


@dataclass(frozen=True, eq=False)
class LowRankSum:
    """The matrix ``left @ right.T`` kept in factored form."""

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        left = np.asarray(self.left, dtype=float)
        right = np.asarray(self.right, dtype=float)
        if left.ndim != 2 or right.ndim != 2 or left.shape[1] != right.shape[1]:
            raise ValueError(f"incompatible factor shapes {left.shape}, {right.shape}")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @property
    def shape(self):
        return (self.left.shape[0], self.right.shape[0])

    @property
    def width(self) -> int:
        return self.left.shape[1]

    @classmethod
    def from_point(cls, Y: FixedRankPoint) -> "LowRankSum":
        return cls(Y.U @ Y.S, Y.V)

    @classmethod
    def from_tangent(cls, Y: FixedRankPoint, T: TangentVector) -> "LowRankSum":
        _check_tangent_shapes(Y, T)
        return cls(np.hstack([Y.U @ T.M + T.Up, Y.U]), np.hstack([Y.V, T.Vp]))

    def __add__(self, other: "LowRankSum") -> "LowRankSum":
        return LowRankSum(np.hstack([self.left, other.left]), np.hstack([self.right, other.right]))

    def __mul__(self, c) -> "LowRankSum":
        return LowRankSum(c * self.left, self.right)

    __rmul__ = __mul__

    def to_dense(self):
        return self.left @ self.right.T


def _check_tangent_shapes(Y: FixedRankPoint, T: TangentVector):
    if T.dims != Y.dims:
        raise ValueError(f"tangent vector of dims {T.dims} does not match base point {Y.dims}")


def _check_ambient_shape(Y: FixedRankPoint, Z):
    if Z.shape != Y.shape:
        raise ValueError(f"ambient matrix of shape {Z.shape} does not match point of shape {Y.shape}")


def embed(Y: FixedRankPoint):
    return Y.U @ Y.S @ Y.V.T


def embed_tangent(Y: FixedRankPoint, T: TangentVector):
    _check_tangent_shapes(Y, T)
    return (Y.U @ T.M + T.Up) @ Y.V.T + Y.U @ T.Vp.T


def tangent_project(Y: FixedRankPoint, Z) -> TangentVector:
    """Orthogonal projection of the ambient matrix ``Z`` onto the tangent space at ``Y``."""
    Z = np.asarray(Z, dtype=float)
    _check_ambient_shape(Y, Z)
    U, V = Y.U, Y.V
    ZV = Z @ V
    ZtU = Z.T @ U
    M = U.T @ ZV
    Up = ZV - U @ M
    Vp = ZtU - V @ M.T
    return TangentVector(M, Up, Vp)


def project_lowrank(Y: FixedRankPoint, Z: LowRankSum) -> TangentVector:
    """Tangent projection of a factored matrix without forming it densely."""
    UtL = Y.U.T @ Z.left
    VtR = Y.V.T @ Z.right
    M = UtL @ VtR.T
    Up = (Z.left - Y.U @ UtL) @ VtR.T
    Vp = (Z.right - Y.V @ VtR) @ UtL.T
    return TangentVector(M, Up, Vp)


def dense_tangent_project(U, V, Z):
    """``UU'ZVV' + (I-UU')ZVV' + UU'Z(I-VV')`` evaluated densely; used for cross-checks."""
    PU = U @ U.T
    PV = V @ V.T
    IU = np.eye(PU.shape[0]) - PU
    IV = np.eye(PV.shape[0]) - PV
    return PU @ Z @ PV + IU @ Z @ PV + PU @ Z @ IV


def normal_part(Y: FixedRankPoint, Z):
    Z = np.asarray(Z, dtype=float)
    return Z - embed_tangent(Y, tangent_project(Y, Z))


def modeling_error(Y: FixedRankPoint, F_val) -> float:
    """Frobenius norm of the part of ``F_val`` that is normal to the manifold at ``Y``."""
    return float(np.linalg.norm(normal_part(Y, F_val)))


def inner(Y: FixedRankPoint, T1: TangentVector, T2: TangentVector) -> float:
    _check_tangent_shapes(Y, T1)
    _check_tangent_shapes(Y, T2)
    return float(np.vdot(T1.M, T2.M) + np.vdot(T1.Up, T2.Up) + np.vdot(T1.Vp, T2.Vp))


def _truncate_core(Ql, core, Qr, r):
    Us, s, Vst = np.linalg.svd(core)
    if s.size < r or s[r - 1] <= np.finfo(float).eps * max(core.shape) * s[0]:
        raise RankDeficiencyError(f"input has numerical rank below {r}")
    gap = s[r - 1] - (s[r] if s.size > r else 0.0)
    return FixedRankPoint(Ql @ Us[:, :r], np.diag(s[:r]), Qr @ Vst[:r].T,
                          gap_warning=bool(gap < GAP_TOL * s[0]))


def truncated_svd(A, r: int) -> FixedRankPoint:
    """Best rank-``r`` approximation of a dense matrix or a :class:`LowRankSum`.

    The result carries ``gap_warning=True`` when ``sigma_r - sigma_{r+1}`` is
    below ``1e-12 * sigma_1``, i.e. when the projection is not well defined.

    Raises
    ------
    RankDeficiencyError
        If ``sigma_r`` vanishes numerically.
    """
    if isinstance(A, LowRankSum):
        if A.width < r:
            raise RankDeficiencyError(f"sum of width {A.width} cannot have rank {r}")
        Ql, Rl = orthonormalize(A.left)
        Qr, Rr = orthonormalize(A.right)
        return _truncate_core(Ql, Rl @ Rr.T, Qr, r)
    A = np.asarray(A, dtype=float)
    if r > min(A.shape):
        raise RankDeficiencyError(f"matrix of shape {A.shape} cannot have rank {r}")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    return _truncate_core(U, np.diag(s), Vt.T, r)


def weingarten(Y: FixedRankPoint, T: TangentVector, N) -> TangentVector:
    """Weingarten map ``W_Y(T, N) = N Vp S^{-T} V' + U S^{-T} Up' N``.

    For diagonal ``S`` this is the familiar ``N Vp S^{-1} V' + U S^{-1} Up' N``;
    the transposes matter once the core is a general invertible matrix.
    ``N`` is normal-projected first unless it already satisfies ``U'N = 0`` and
    ``NV = 0`` to 1e-10 (relative to its norm).
    """
    N = np.asarray(N, dtype=float)
    _check_ambient_shape(Y, N)
    _check_tangent_shapes(Y, T)
    scale = max(np.linalg.norm(N), 1.0)
    if np.linalg.norm(Y.U.T @ N) > 1e-10 * scale or np.linalg.norm(N @ Y.V) > 1e-10 * scale:
        N = normal_part(Y, N)
    # X S^{-T} = solve(S, X^T)^T and X S^{-1} = solve(S^T, X^T)^T
    Up_new = np.linalg.solve(Y.S, (N @ T.Vp).T).T
    Vp_new = np.linalg.solve(Y.S.T, (N.T @ T.Up).T).T
    r = Y.rank
    return TangentVector(np.zeros((r, r)), Up_new, Vp_new)


def random_point(dims: Dims, singular_values, seed) -> FixedRankPoint:
    """Point with Haar-like random factors (QR of Gaussian matrices) and prescribed spectrum."""
    s = np.asarray(singular_values, dtype=float)
    if s.shape != (dims.r,) or np.any(s <= 0):
        raise ValueError("need r strictly positive singular values")
    rng = np.random.default_rng(seed)
    U, _ = orthonormalize(rng.standard_normal((dims.m, dims.r)))
    V, _ = orthonormalize(rng.standard_normal((dims.n, dims.r)))
    return FixedRankPoint(U, np.diag(s), V)


def random_tangent(Y: FixedRankPoint, seed, target_norm=1.0) -> TangentVector:
    rng = np.random.default_rng(seed)
    m, n, r = Y.dims.m, Y.dims.n, Y.dims.r
    M = rng.standard_normal((r, r))
    Up = rng.standard_normal((m, r))
    Vp = rng.standard_normal((n, r))
    Up -= Y.U @ (Y.U.T @ Up)
    Vp -= Y.V @ (Y.V.T @ Vp)
    T = TangentVector(M, Up, Vp)
    return T * (target_norm / T.norm())
