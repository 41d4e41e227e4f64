import numpy as np
import pytest
from scipy.integrate import solve_ivp

from fixedrank.manifold import Dims, embed, random_point, random_tangent, tangent_project

EPS = np.finfo(float).eps


def loglog_slope(ts, errs, scale=1.0):
    """Least-squares slope of log(err) vs log(t).

    Points below 1e2 * eps * scale are dropped as floating-point floor. Returns
    ``None`` when every point sits at the floor.
    """
    ts = np.asarray(ts, dtype=float)
    errs = np.asarray(errs, dtype=float)
    keep = errs > 1e2 * EPS * scale
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(ts[keep]), np.log(errs[keep]), 1)[0])


def dense_projector(U, V, Z):
    # independent dense evaluation of the tangent projection
    PU = U @ U.T
    PV = V @ V.T
    return PU @ Z + Z @ PV - PU @ Z @ PV


def make_pair(m=9, n=8, r=3, seed=0, spread=(1.0, 0.3)):
    """Random point with spectrum log-spaced on ``spread`` and a unit tangent vector."""
    s = np.geomspace(spread[0], spread[1], r)
    X = random_point(Dims(m, n, r), s, seed)
    Z = random_tangent(X, seed + 1000, 1.0)
    return X, Z


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def pair():
    return make_pair()


def rotation_factor_curve(problem, r, t):
    """Rank-r curve ``U_r(t) e^t D_r V_r(t)'`` built from the rotation problem, with exact velocity."""
    from fixedrank.manifold import FixedRankPoint, embed, tangent_project
    from fixedrank.problems import matrix_exponential

    U = matrix_exponential(problem.OmegaU, t)[:, :r]
    V = matrix_exponential(problem.OmegaV, t)[:, :r]
    S = np.exp(t) * problem.D[:r, :r]
    Y = FixedRankPoint(U, S, V)
    A = embed(Y)
    return Y, tangent_project(Y, problem.OmegaU @ A + A + A @ problem.OmegaV.T)


def projector_derivative_oracle(Y, T, N, h=1e-5):
    # curve through Y with velocity T: (U + h Up S^{-1}) (S + h M) (V + h Vp S^{-T})'
    Sinv = np.linalg.inv(Y.S)

    def P_at(t):
        U = Y.U + t * T.Up @ Sinv
        V = Y.V + t * T.Vp @ Sinv.T
        Uq, _ = np.linalg.qr(U)
        Vq, _ = np.linalg.qr(V)
        return dense_projector(Uq, Vq, N)

    dP = (P_at(h) - P_at(-h)) / (2 * h)
    return dense_projector(Y.U, Y.V, dP)


def flow_second_difference(field, Y, r, h=1e-4):
    """Projected second difference of the dense projected flow through ``Y``."""
    shape = Y.shape

    def rhs(t, y):
        A = y.reshape(shape)
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
        return dense_projector(U[:, :r], Vt[:r].T, field(t, A)).ravel()

    y0 = embed(Y).ravel()
    fwd = solve_ivp(rhs, (0.0, h), y0, method="DOP853", rtol=1e-13, atol=1e-15).y[:, -1]
    bwd = solve_ivp(rhs, (0.0, -h), y0, method="DOP853", rtol=1e-13, atol=1e-15).y[:, -1]
    second = (fwd - 2 * y0 + bwd).reshape(shape) / h**2
    return tangent_project(Y, second)


# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
