"""Manifold curves built from retractions.

``retraction_curve`` prescribes position, velocity and (for second-order
retractions) acceleration at one point. ``hermite_eval`` evaluates a cubic
Hermite-type interpolant between two points with prescribed velocities using
the orthographic retraction and its inverse. ``euclidean_hermite_eval`` is
the flat-space counterpart.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .manifold import FixedRankPoint, LowRankSum, TangentVector, project_lowrank
from .retractions import RetractionKind, inverse_retract_orth, retract, retract_orth

__all__ = [
    "JetData",
    "HermiteData",
    "HermiteError",
    "retraction_curve",
    "hermite_eval",
    "euclidean_hermite_eval",
]


@dataclass(frozen=True, eq=False)
class JetData:
    t: float
    x: FixedRankPoint
    v: TangentVector
    a: TangentVector | None = None


@dataclass(frozen=True, eq=False)
class HermiteData:
    p0: JetData
    p1: JetData

    def __post_init__(self):
        if not self.p0.t < self.p1.t:
            raise ValueError("Hermite data needs t0 < t1")
        if self.p0.v is None or self.p1.v is None:
            raise ValueError("Hermite data needs velocities at both ends")

    @property
    def dt(self):
        return self.p1.t - self.p0.t


class HermiteError(RuntimeError):
    """A retraction or inverse retraction inside the Hermite construction failed.

    ``level`` is 0 for the control points and 1..3 for the De Casteljau levels
    (the chart construction only uses levels 0 and 1).
    """

    def __init__(self, message, level):
        super().__init__(f"{message} (level {level})")
        self.level = level


def retraction_curve(kind, x: FixedRankPoint, v: TangentVector, a: TangentVector | None, t):
    """``R_x(t v + t^2/2 a)``; ``a=None`` means zero acceleration."""
    Z = t * v if a is None else t * v + (0.5 * t * t) * a
    return retract(kind, x, Z)


def _segment(p, q, s):
    # retraction curve from p through q, reaching q at s = 1
    return retract_orth(p, s * inverse_retract_orth(p, q))


def _casteljau(points, s):
    # Euclidean De Casteljau recursion on tangent vectors of a common base point
    while len(points) > 1:
        points = [(1 - s) * a + s * b for a, b in zip(points[:-1], points[1:])]
    return points[0]


def _hermite_chart(p0, p1, h, s):
    x0 = p0.x
    try:
        xi1 = inverse_retract_orth(x0, p1.x)
        # the chart Y -> Pi(x0)(Y - x0) is linear, so its differential is Pi(x0)
        w1 = project_lowrank(x0, LowRankSum.from_tangent(p1.x, p1.v))
    except np.linalg.LinAlgError as exc:
        raise HermiteError(f"inverse retraction failed: {exc}", 0) from exc
    ctrl = [TangentVector.zeros(x0.dims), h * p0.v, xi1 - h * w1, xi1]
    try:
        return retract_orth(x0, _casteljau(ctrl, s))
    except np.linalg.LinAlgError as exc:
        raise HermiteError(f"retraction of the chart curve failed: {exc}", 1) from exc


def _hermite_segments(p0, p1, h, s):
    try:
        pts = [p0.x, retract_orth(p0.x, h * p0.v), retract_orth(p1.x, -h * p1.v), p1.x]
    except np.linalg.LinAlgError as exc:
        raise HermiteError(f"control point construction failed: {exc}", 0) from exc
    level = 0
    try:
        for level in (1, 2, 3):
            pts = [_segment(pts[i], pts[i + 1], s) for i in range(len(pts) - 1)]
    except np.linalg.LinAlgError as exc:
        raise HermiteError(f"De Casteljau segment failed: {exc}", level) from exc
    return pts[0]


HERMITE_CONSTRUCTIONS = ("chart", "segments")


def hermite_eval(data: HermiteData, t, kind=RetractionKind.ORTH, construction="chart") -> FixedRankPoint:
    """Evaluate the retraction-based Hermite interpolant at ``t``.

    ``construction="chart"`` (default) runs the cubic De Casteljau recursion on
    tangent vectors at ``x0``, in the chart given by the inverse orthographic
    retraction, and maps the result back with the orthographic retraction.
    The control points are ``0``, ``dt/3 v0``, ``xi1 - dt/3 Pi(x0) v1`` and
    ``xi1 = Pi(x0)(x1 - x0)``. Endpoint positions and velocities are then
    matched exactly and the approximation error is O(dt^4).

    ``construction="segments"`` runs the recursion on the manifold itself,
    joining the control points ``x0, R_x0(dt/3 v0), R_x1(-dt/3 v1), x1`` with
    orthographic retraction segments. It matches ``x0, x1`` and ``v0`` but
    only approximates ``v1``, and its approximation error is O(dt^3).

    ``t`` may lie outside ``[t0, t1]``.

    Raises
    ------
    HermiteError
        If a retraction or inverse retraction fails; carries the failing level.
    """
    kind = RetractionKind(kind) if not isinstance(kind, RetractionKind) else kind
    if not kind.has_inverse:
        raise ValueError(f"{kind.name} retraction has no implemented inverse")
    h = data.dt / 3.0
    s = (t - data.p0.t) / data.dt
    if construction == "chart":
        return _hermite_chart(data.p0, data.p1, h, s)
    if construction == "segments":
        return _hermite_segments(data.p0, data.p1, h, s)
    raise ValueError(f"unknown Hermite construction {construction!r}")


def euclidean_hermite_eval(t0, A0, V0, t1, A1, V1, t):
    """Cubic polynomial ``H`` with ``H(t_i) = A_i`` and ``H'(t_i) = V_i``."""
    if t0 == t1:
        raise ValueError("t0 and t1 must differ")
    dt = t1 - t0
    s = (t - t0) / dt
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * np.asarray(A0) + (h10 * dt) * np.asarray(V0) + h01 * np.asarray(A1) + (h11 * dt) * np.asarray(V1)
