"""Time integrators for dynamical low-rank approximation.

All steppers advance ``Y' = Pi(Y) F(t, Y)`` on the manifold of rank-r
matrices by one step of size ``dt`` and return a renormalized point.
"""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .curves import HermiteData, JetData, hermite_eval
from .manifold import (
    FixedRankPoint,
    LowRankSum,
    TangentVector,
    embed,
    embed_tangent,
    modeling_error,
    tangent_project,
    truncated_svd,
    weingarten,
)
from .retractions import RetractionKind, retract, retract_orth

__all__ = [
    "VectorField",
    "StepperKind",
    "Trajectory",
    "StepFailure",
    "BUTCHER",
    "projected_field",
    "dlra_acceleration",
    "step_prk",
    "step_ksl",
    "step_kls",
    "step_afe",
    "step_rh",
    "step_arh",
    "step",
    "integrate",
    "reference_ambient_solve",
]


@dataclass(frozen=True)
class VectorField:
    """Possibly time-dependent ambient vector field ``F(t, A)``.

    ``jvp(t, A, H)`` is the directional derivative ``DF(A)[H]`` and
    ``dt_part(t, A)`` the partial time derivative; either may be absent.
    """

    f: Callable
    jvp: Callable | None = None
    dt_part: Callable | None = None
    autonomous: bool = True

    def __call__(self, t, A):
        return self.f(t, A)

    @property
    def has_acceleration(self) -> bool:
        return self.jvp is not None or self.dt_part is not None

    @classmethod
    def zero(cls, shape) -> "VectorField":
        return cls(lambda t, A: np.zeros(shape), jvp=lambda t, A, H: np.zeros(shape))


class StepperKind(enum.Enum):
    PRK1 = "prk1"
    PRK2 = "prk2"
    PRK3 = "prk3"
    KSL = "ksl"
    KLS = "kls"
    AFE = "afe"
    RH = "rh"
    ARH = "arh"

    @property
    def needs_acceleration(self) -> bool:
        return self in (StepperKind.AFE, StepperKind.ARH)


class StepFailure(RuntimeError):
    def __init__(self, message, t=None, step_index=None):
        super().__init__(message)
        self.t = t
        self.step_index = step_index


# explicit Runge-Kutta tables (c, A, b): Euler, Heun, Kutta's third-order method
BUTCHER = {
    1: (np.array([0.0]), np.array([[0.0]]), np.array([1.0])),
    2: (np.array([0.0, 1.0]), np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([0.5, 0.5])),
    3: (
        np.array([0.0, 0.5, 1.0]),
        np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [-1.0, 2.0, 0.0]]),
        np.array([1 / 6, 2 / 3, 1 / 6]),
    ),
}


def projected_field(field: VectorField, t, Y: FixedRankPoint) -> TangentVector:
    return tangent_project(Y, field(t, embed(Y)))


def dlra_acceleration(field: VectorField, t, Y: FixedRankPoint, F_val=None) -> TangentVector:
    """Intrinsic acceleration of the projected flow through ``Y`` at time ``t``.

    ``Pi(Y)(DF(Y)[Pi F] + dF/dt) + W_Y(Pi F, Pi^perp F)``. ``F_val`` may be
    passed to reuse an evaluation of ``F(t, Y)``.
    """
    if not field.has_acceleration:
        raise ValueError("vector field provides neither jvp nor dt_part")
    A = embed(Y)
    F = field(t, A) if F_val is None else F_val
    T = tangent_project(Y, F)
    T_dense = embed_tangent(Y, T)
    ambient = np.zeros_like(F)
    if field.jvp is not None:
        ambient = ambient + field.jvp(t, A, T_dense)
    if field.dt_part is not None:
        ambient = ambient + field.dt_part(t, A)
    return tangent_project(Y, ambient) + weingarten(Y, T, F - T_dense)


def step_prk(s, field: VectorField, t, Y: FixedRankPoint, dt) -> FixedRankPoint:
    """Projected Runge-Kutta step with ``s`` stages via the extended SVD retraction."""
    if s not in BUTCHER:
        raise ValueError(f"no PRK method with {s} stages")
    c, a, b = BUTCHER[s]
    base = LowRankSum.from_point(Y)
    ks = []
    for i in range(s):
        if i == 0:
            eta = Y
        else:
            incr = [dt * a[i, j] * ks[j] for j in range(i) if a[i, j] != 0.0]
            eta = truncated_svd(sum(incr, base), Y.rank)
        ks.append(LowRankSum.from_tangent(eta, projected_field(field, t + c[i] * dt, eta)))
    incr = [dt * b[i] * ks[i] for i in range(s) if b[i] != 0.0]
    return truncated_svd(sum(incr, base), Y.rank)


def step_ksl(field, t, Y, dt):
    return retract(RetractionKind.KSL, Y, dt * projected_field(field, t, Y))


def step_kls(field, t, Y, dt):
    return retract(RetractionKind.KLS, Y, dt * projected_field(field, t, Y))


def _afe_increment(field, t, Y, dt):
    F = field(t, embed(Y))
    v = tangent_project(Y, F)
    a = dlra_acceleration(field, t, Y, F_val=F)
    return dt * v + (0.5 * dt * dt) * a, v


def step_afe(field, t, Y, dt, second_order_kind=RetractionKind.ORTH):
    Z, _ = _afe_increment(field, t, Y, dt)
    return retract(second_order_kind, Y, Z)


def _hermite_step(field, t, Y, v, Y_mid, dt):
    t_mid = t + 2.0 * dt / 3.0
    data = HermiteData(JetData(t, Y, v), JetData(t_mid, Y_mid, projected_field(field, t_mid, Y_mid)))
    return hermite_eval(data, t + dt)


def step_rh(field, t, Y, dt):
    v = projected_field(field, t, Y)
    Y_mid = retract_orth(Y, (2.0 * dt / 3.0) * v)
    return _hermite_step(field, t, Y, v, Y_mid, dt)


def step_arh(field, t, Y, dt):
    # AFE sub-step of length 2 dt / 3: (2/3) dt v + (2/9) dt^2 a
    Z, v = _afe_increment(field, t, Y, 2.0 * dt / 3.0)
    Y_mid = retract_orth(Y, Z)
    return _hermite_step(field, t, Y, v, Y_mid, dt)


_STEPPERS = {
    StepperKind.PRK1: lambda f, t, Y, dt: step_prk(1, f, t, Y, dt),
    StepperKind.PRK2: lambda f, t, Y, dt: step_prk(2, f, t, Y, dt),
    StepperKind.PRK3: lambda f, t, Y, dt: step_prk(3, f, t, Y, dt),
    StepperKind.KSL: step_ksl,
    StepperKind.KLS: step_kls,
    StepperKind.AFE: step_afe,
    StepperKind.RH: step_rh,
    StepperKind.ARH: step_arh,
}


def step(kind, field, t, Y, dt) -> FixedRankPoint:
    kind = StepperKind(kind) if not isinstance(kind, StepperKind) else kind
    if kind.needs_acceleration and not field.has_acceleration:
        raise ValueError(f"{kind.name} needs a vector field with jvp or dt_part")
    return _STEPPERS[kind](field, t, Y, dt).renormalize()


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    sigma_r: list = field(default_factory=list)
    modeling_error: list = field(default_factory=list)
    wall_time: list = field(default_factory=list)
    failure: str | None = None
    gap_warnings: int = 0

    @property
    def final(self) -> FixedRankPoint:
        return self.states[-1]

    @property
    def ok(self) -> bool:
        return self.failure is None


def integrate(kind, field: VectorField, Y0: FixedRankPoint, T, dt, t0=0.0, store_states=True,
              record_modeling_error=False) -> Trajectory:
    """Integrate with ``N = T / dt`` uniform steps.

    A failing step ends the trajectory early; ``Trajectory.failure`` then holds
    the reason and the states computed so far are kept. With
    ``store_states=False`` only the initial and the latest state are kept.
    """
    if T <= 0 or dt <= 0:
        raise ValueError("T and dt must be positive")
    N = int(round(T / dt))
    if N < 1 or abs(N * dt - T) > 1e-9 * T:
        raise ValueError(f"T / dt = {T / dt} is not an integer")
    kind = StepperKind(kind) if not isinstance(kind, StepperKind) else kind
    traj = Trajectory(times=[t0], states=[Y0], sigma_r=[Y0.singular_values()[-1]])
    Y = Y0
    for k in range(N):
        t = t0 + k * dt
        if record_modeling_error:
            traj.modeling_error.append(modeling_error(Y, field(t, embed(Y))))
        start = time.perf_counter()
        try:
            Y = step(kind, field, t, Y, dt)
        except (np.linalg.LinAlgError, RuntimeError, FloatingPointError) as exc:
            traj.failure = f"step {k} at t={t:.6g}: {type(exc).__name__}: {exc}"
            break
        traj.wall_time.append(time.perf_counter() - start)
        sv = Y.singular_values()
        if not np.all(np.isfinite(sv)) or not np.all(np.isfinite(Y.U)) or not np.all(np.isfinite(Y.V)):
            traj.failure = f"step {k} at t={t:.6g}: non-finite state"
            break
        traj.gap_warnings += int(Y.gap_warning)
        traj.times.append(t0 + (k + 1) * dt)
        if store_states:
            traj.states.append(Y)
        else:
            traj.states[1:] = [Y]
        traj.sigma_r.append(sv[-1])
    return traj


def reference_ambient_solve(field: VectorField, A0, T, tol=1e-10, t0=0.0, t_eval=None):
    """Solve ``A' = F(t, A)`` in the ambient space with the Dormand-Prince 5(4) pair.

    Returns ``A(t0 + T)``; with ``t_eval`` given, returns ``(A(t0 + T), states)``
    where ``states`` has shape ``(len(t_eval), m, n)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A0 = np.asarray(A0, dtype=float)
    shape = A0.shape

    def rhs(t, y):
        return np.asarray(field(t, y.reshape(shape))).ravel()

    sol = solve_ivp(rhs, (t0, t0 + T), A0.ravel(), method="RK45", rtol=tol, atol=tol,
                    dense_output=t_eval is not None)
    if sol.status != 0:
        raise RuntimeError(f"reference solver failed: {sol.message}")
    final = sol.y[:, -1].reshape(shape)
    if t_eval is None:
        return final
    states = sol.sol(np.asarray(t_eval, dtype=float)).T.reshape((-1,) + shape)
    return final, states
