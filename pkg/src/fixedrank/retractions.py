"""Retractions on the fixed-rank manifold.

Four maps from tangent vectors back to the manifold are provided: the metric
projection (truncated SVD), the two projector-splitting updates KSL and KLS,
and the orthographic retraction together with its exact inverse. All outputs
are renormalized so that the returned core is diagonal, unless the caller
passes ``renormalize=False``.
"""
from __future__ import annotations

import enum

import numpy as np

from .manifold import (
    FixedRankPoint,
    LowRankSum,
    RankDeficiencyError,
    TangentVector,
    embed,
    orthonormalize,
    tangent_project,
    truncated_svd,
)

__all__ = [
    "RetractionKind",
    "SingularCoreError",
    "retract",
    "retract_svd",
    "retract_ksl",
    "retract_kls",
    "retract_orth",
    "inverse_retract_orth",
    "second_order_defect",
]

# reciprocal condition number below which a small core is treated as singular
_RCOND = 1e3 * np.finfo(float).eps


class RetractionKind(enum.Enum):
    SVD = "svd"
    KSL = "ksl"
    KLS = "kls"
    ORTH = "orth"

    @property
    def second_order(self) -> bool:
        return True

    @property
    def has_inverse(self) -> bool:
        return self is RetractionKind.ORTH

    @property
    def extended(self) -> bool:
        return self is RetractionKind.SVD


class SingularCoreError(np.linalg.LinAlgError):
    """The orthographic retraction is undefined because ``Sigma_0 + M`` is singular."""


def _finish(U, S, V, renormalize):
    Y = FixedRankPoint(U, S, V)
    return Y.renormalize() if renormalize else Y


def _full_rank_qr(A, what):
    Q, R = orthonormalize(A)
    d = np.abs(np.diag(R))
    if d.size and d.min() <= _RCOND * max(d.max(), np.finfo(float).tiny):
        raise RankDeficiencyError(f"{what} is rank deficient")
    return Q, R


def retract_svd(X: FixedRankPoint, Z, renormalize=True) -> FixedRankPoint:
    """Metric projection of ``X + Z`` onto the manifold.

    ``Z`` is either a tangent vector at ``X`` or an arbitrary :class:`LowRankSum`
    (the extended use needed by projected Runge-Kutta stages).
    """
    if isinstance(Z, LowRankSum):
        return truncated_svd(LowRankSum.from_point(X) + Z, X.rank)
    r = X.rank
    Qu, Ru = orthonormalize(Z.Up)
    Qv, Rv = orthonormalize(Z.Vp)
    core = np.block([[X.S + Z.M, Rv.T], [Ru, np.zeros((r, r))]])
    Us, s, Vst = np.linalg.svd(core)
    if s[r - 1] <= np.finfo(float).eps * 2 * r * s[0]:
        raise RankDeficiencyError("X + Z has rank below r")
    U1 = np.hstack([X.U, Qu]) @ Us[:, :r]
    V1 = np.hstack([X.V, Qv]) @ Vst[:r].T
    # the core SVD already yields a diagonal, ordered Sigma_1
    return FixedRankPoint(U1, np.diag(s[:r]), V1)


def retract_ksl(X: FixedRankPoint, Z: TangentVector, renormalize=True) -> FixedRankPoint:
    U0, S0, V0 = X.U, X.S, X.V
    # K-step
    U1, S_hat = _full_rank_qr(U0 @ (S0 + Z.M) + Z.Up, "K-step matrix")
    # S-step
    L = U1.T @ U0
    S_tilde = S_hat - (U1.T @ Z.Up + L @ Z.M)
    # L-step: V0 S_tilde' + Z' U1 with Z' U1 = V0 M' L' + V0 Up' U1 + Vp L'
    ZtU1 = V0 @ (Z.M.T @ L.T + Z.Up.T @ U1) + Z.Vp @ L.T
    V1, S1t = _full_rank_qr(V0 @ S_tilde.T + ZtU1, "L-step matrix")
    return _finish(U1, S1t.T, V1, renormalize)


def _kl_factors(X, Z):
    """Shared K- and L-steps of the KLS and orthographic retractions."""
    SM = X.S + Z.M
    U1, S_U = _full_rank_qr(X.U @ SM + Z.Up, "K-step matrix")
    V1, S_V = _full_rank_qr(X.V @ SM.T + Z.Vp, "L-step matrix")
    return SM, U1, S_U, V1, S_V


def retract_kls(X: FixedRankPoint, Z: TangentVector, renormalize=True) -> FixedRankPoint:
    SM, U1, _, V1, _ = _kl_factors(X, Z)
    L = U1.T @ X.U
    R = V1.T @ X.V
    # S-step, equal to U1' (X + Z) V1
    S1 = L @ (SM @ R.T + Z.Vp.T @ V1) + U1.T @ Z.Up @ R.T
    return _finish(U1, S1, V1, renormalize)


def retract_orth(X: FixedRankPoint, Z: TangentVector, renormalize=True) -> FixedRankPoint:
    """Orthographic retraction: the point of ``(X + Z + N_X) ∩ M_r``.

    Raises
    ------
    SingularCoreError
        If ``Sigma_0 + M`` is numerically singular.
    """
    SM = X.S + Z.M
    if 1.0 / np.linalg.cond(SM) <= _RCOND:
        raise SingularCoreError("Sigma_0 + M is singular; orthographic retraction undefined")
    SM, U1, S_U, V1, S_V = _kl_factors(X, Z)
    S1 = S_U @ np.linalg.solve(SM, S_V.T)
    return _finish(U1, S1, V1, renormalize)


def inverse_retract_orth(X: FixedRankPoint, Y: FixedRankPoint) -> TangentVector:
    """``Pi(X)(Y - X)`` computed from the factors of ``X`` and ``Y``."""
    A = X.U.T @ Y.U
    B = Y.V.T @ X.V
    core = A @ Y.S @ B
    M = core - X.S
    Up = (Y.U - X.U @ A) @ (Y.S @ B)
    Vp = (Y.V - X.V @ (X.V.T @ Y.V)) @ (Y.S.T @ A.T)
    return TangentVector(M, Up, Vp)


_DISPATCH = {
    RetractionKind.SVD: retract_svd,
    RetractionKind.KSL: retract_ksl,
    RetractionKind.KLS: retract_kls,
    RetractionKind.ORTH: retract_orth,
}


def retract(kind, X: FixedRankPoint, Z, renormalize=True) -> FixedRankPoint:
    kind = RetractionKind(kind) if not isinstance(kind, RetractionKind) else kind
    if isinstance(Z, LowRankSum) and not kind.extended:
        raise TypeError(f"{kind.name} retraction only accepts tangent vectors")
    return _DISPATCH[kind](X, Z, renormalize=renormalize)


def second_order_defect(kind, X: FixedRankPoint, Z: TangentVector, t: float) -> float:
    """``||Pi(X)(R_X(tZ) - X - tZ)||_F``, which is O(t^3) for second-order retractions."""
    if t <= 0:
        raise ValueError("t must be positive")
    Y = retract(kind, X, t * Z)
    D = tangent_project(X, embed(Y) - embed(X)) - t * Z
    return D.norm()
