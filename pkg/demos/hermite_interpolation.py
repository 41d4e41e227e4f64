# ---
# jupyter:
#   jupytext:
#     formats: ipynb,py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
# ---

# %% [markdown]
# # Hermite interpolation between two rank-r jets
#
# Given two points on the manifold with a tangent velocity at each, we want a
# curve through both that has the prescribed velocities at the ends. The
# default construction works in the tangent space of the first point: it maps
# the second jet there with the inverse orthographic retraction, builds a
# cubic Bezier curve in that chart and retracts it back.
#
# We test it on a smooth curve `U(t) e^t D V(t)'` whose factors rotate with
# `exp(t Omega)`.

# %%
import numpy as np

from fixedrank import HermiteData, JetData, embed, euclidean_hermite_eval, hermite_eval
from fixedrank.manifold import FixedRankPoint, tangent_project
from fixedrank.problems import make_rotation, matrix_exponential

p = make_rotation(40, seed=0)
r = 4


def curve(t):
    U = matrix_exponential(p.OmegaU, t)[:, :r]
    V = matrix_exponential(p.OmegaV, t)[:, :r]
    Y = FixedRankPoint(U, np.exp(t) * p.D[:r, :r], V)
    A = embed(Y)
    return Y, tangent_project(Y, p.OmegaU @ A + A + A @ p.OmegaV.T)


def max_error(t0, dt, construction):
    data = HermiteData(JetData(t0, *curve(t0)), JetData(t0 + dt, *curve(t0 + dt)))
    return max(np.linalg.norm(embed(hermite_eval(data, t, construction=construction)) - embed(curve(t)[0]))
               for t in np.linspace(t0, t0 + dt, 9))


# %% [markdown]
# ## Approximation order
#
# The chart construction should lose a factor 16 per halving of the interval.
# The segment construction, a De Casteljau recursion with retraction segments
# on the manifold, is shown for comparison. It matches the end velocity only
# to second order and drops to third-order accuracy.

# %%
print(f"{'dt':>8s} {'chart':>10s} {'ratio':>6s} {'segments':>10s} {'ratio':>6s}")
prev = None
for dt in 0.1 / 2.0 ** np.arange(5):
    e = (max_error(0.2, dt, "chart"), max_error(0.2, dt, "segments"))
    ratios = ("", "") if prev is None else tuple(f"{a / b:6.1f}" for a, b in zip(prev, e))
    print(f"{dt:8.4f} {e[0]:10.2e} {ratios[0]:>6s} {e[1]:10.2e} {ratios[1]:>6s}")
    prev = e

# %% [markdown]
# ## The flat case
#
# For plain matrices the interpolant is the cubic Hermite polynomial. Queried
# one interval past its right end it gives the classic extrapolation
# `5 A0 - 4 A1 + dt (2 V0 + 4 V1)`.

# %%
rng = np.random.default_rng(0)
A0, A1, V0, V1 = rng.standard_normal((4, 3, 3))
dt = 0.25
H = euclidean_hermite_eval(0.0, A0, V0, dt, A1, V1, 2 * dt)
print("extrapolation residual:", np.abs(H - (5 * A0 - 4 * A1 + dt * (2 * V0 + 4 * V1))).max())
