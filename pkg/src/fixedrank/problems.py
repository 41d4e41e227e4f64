"""Benchmark problems: differential Lyapunov equation and a factored rotation curve."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from .integrators import VectorField
from .manifold import Dims, FixedRankPoint, orthonormalize, random_point, random_tangent
from .retractions import retract_orth

__all__ = [
    "LyapunovProblem",
    "RotationProblem",
    "HermiteRobustnessInstance",
    "laplacian_1d",
    "make_lyapunov",
    "lyapunov_field",
    "make_rotation",
    "rotation_curve",
    "rotation_field",
    "make_hermite_instance",
    "matrix_exponential",
]


def matrix_exponential(Omega, t=1.0):
    """``exp(t * Omega)`` by scaling and squaring with a Pade core."""
    Omega = np.asarray(Omega, dtype=float)
    if Omega.ndim != 2 or Omega.shape[0] != Omega.shape[1]:
        raise ValueError("matrix exponential needs a square matrix")
    return scipy.linalg.expm(t * Omega)


def laplacian_1d(n):
    """Tridiagonal ``n x n`` matrix with -2 on the diagonal and 1 on the off-diagonals."""
    return scipy.sparse.diags([np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1], format="csr")


def _matrix_with_spectrum(rng, n, s):
    U, _ = orthonormalize(rng.standard_normal((n, n)))
    V, _ = orthonormalize(rng.standard_normal((n, n)))
    return (U * s) @ V.T


@dataclass(frozen=True, eq=False)
class LyapunovProblem:
    L: scipy.sparse.csr_matrix
    Q: np.ndarray
    A0: np.ndarray
    eta: float
    r: int

    @property
    def n(self):
        return self.A0.shape[0]


def make_lyapunov(n, r, eta, seed=0) -> LyapunovProblem:
    """``A' = L A + A L' + Q`` with ``||Q||_F = eta`` and a rank-``r`` initial value.

    ``Q`` has singular values decaying as ``10^(2-i)`` before rescaling and
    ``A0`` has nonzero singular values ``3^(2-i)``, ``i = 1..r``.
    """
    if not 1 <= r <= n:
        raise ValueError("need 1 <= r <= n")
    rng = np.random.default_rng(seed)
    i = np.arange(1, n + 1)
    Q_tilde = _matrix_with_spectrum(rng, n, 10.0 ** (2 - i))
    Q = eta * Q_tilde / np.linalg.norm(Q_tilde) if eta > 0 else np.zeros((n, n))
    s0 = np.where(i <= r, 3.0 ** (2 - i), 0.0)
    A0 = _matrix_with_spectrum(rng, n, s0)
    return LyapunovProblem(laplacian_1d(n), Q, A0, float(eta), r)


def lyapunov_field(p: LyapunovProblem) -> VectorField:
    L, Q = p.L, p.Q

    def sylvester(A):
        return L @ A + (L @ A.T).T

    def f(t, A):
        return sylvester(A) + Q

    def jvp(t, A, H):
        return sylvester(H)

    return VectorField(f, jvp=jvp, autonomous=True)


@dataclass(frozen=True, eq=False)
class RotationProblem:
    OmegaU: np.ndarray
    OmegaV: np.ndarray
    D: np.ndarray

    @property
    def n(self):
        return self.D.shape[0]


def make_rotation(n, seed=0) -> RotationProblem:
    rng = np.random.default_rng(seed)
    GU = rng.standard_normal((n, n))
    GV = rng.standard_normal((n, n))
    D = np.diag(2.0 ** -np.arange(1, n + 1))
    return RotationProblem((GU - GU.T) / 2, (GV - GV.T) / 2, D)


def rotation_curve(p: RotationProblem, t):
    """Return ``A(t)``, ``A'(t)`` and ``A''(t)`` for ``A(t) = exp(t OmU) e^t D exp(t OmV)'``."""
    U = matrix_exponential(p.OmegaU, t)
    V = matrix_exponential(p.OmegaV, t)
    Sig = np.exp(t) * p.D
    Wu, Wv = p.OmegaU, p.OmegaV
    SWv = Sig @ Wv.T
    WuS = Wu @ Sig
    inner1 = WuS + Sig + SWv
    inner2 = Wu @ WuS + Sig + Sig @ (Wv @ Wv).T + 2 * WuS + 2 * WuS @ Wv.T + 2 * SWv
    return U @ Sig @ V.T, U @ inner1 @ V.T, U @ inner2 @ V.T


def rotation_field(p: RotationProblem) -> VectorField:
    """State-independent field ``F(t, .) = A'(t)`` with ``dF/dt = A''(t)``."""
    cache = {}

    def curve(t):
        if t not in cache:
            if len(cache) > 8:
                cache.clear()
            cache[t] = rotation_curve(p, t)
        return cache[t]

    def f(t, A):
        return curve(t)[1]

    def jvp(t, A, H):
        return np.zeros_like(H)

    def dt_part(t, A):
        return curve(t)[2]

    return VectorField(f, jvp=jvp, dt_part=dt_part, autonomous=False)


@dataclass(frozen=True, eq=False)
class HermiteRobustnessInstance:
    Y0: FixedRankPoint
    Y1: FixedRankPoint
    Z0: object
    Z1: object
    sigma_r: float
    attempts: int = 1


def make_hermite_instance(sigma_r, seed=0, m=100, n=100, r=12, max_attempts=10) -> HermiteRobustnessInstance:
    """Two nearby rank-``r`` points and unit tangent vectors at each.

    ``Y0`` has singular values log-spaced on ``[sigma_r, 1]``; ``Y1`` is the
    orthographic retraction of ``Y0`` along a unit tangent vector, with its
    singular values then replaced by ``sigma_i(Y0) * (1 + xi_i)`` for ``xi_i``
    uniform on ``[1/2, 2]`` (growth factors in ``[1.5, 3]``).
    """
    if not 0 < sigma_r <= 1:
        raise ValueError("sigma_r must lie in (0, 1]")
    dims = Dims(m, n, r)
    s0 = np.logspace(0, np.log10(sigma_r), r)
    s0[0], s0[-1] = 1.0, sigma_r
    seeds = np.random.SeedSequence(seed).spawn(max_attempts)
    last_error = None
    for attempt, ss in enumerate(seeds, start=1):
        point_seed, move_seed, xi_seed, z0_seed, z1_seed = ss.spawn(5)
        Y0 = random_point(dims, s0, point_seed)
        Z = random_tangent(Y0, move_seed, 1.0)
        try:
            Y1_tilde = retract_orth(Y0, Z)
        except np.linalg.LinAlgError as exc:
            last_error = exc
            continue
        xi = np.random.default_rng(xi_seed).uniform(0.5, 2.0, r)
        Y1 = FixedRankPoint(Y1_tilde.U, np.diag(s0 * (1 + xi)), Y1_tilde.V)
        Z0 = random_tangent(Y0, z0_seed, 1.0)
        Z1 = random_tangent(Y1, z1_seed, 1.0)
        return HermiteRobustnessInstance(Y0, Y1, Z0, Z1, float(sigma_r), attempt)
    raise RuntimeError(f"could not build a Hermite instance for sigma_r={sigma_r}") from last_error
