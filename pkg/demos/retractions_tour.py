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
# # Retractions on the fixed-rank manifold
#
# A rank-`r` matrix is stored as `U S V'` with orthonormal `U`, `V` and an
# invertible `r x r` core. Tangent vectors are stored as `(M, Up, Vp)`, meaning
# `U M V' + Up V' + U Vp'` with `U' Up = 0` and `V' Vp = 0`.
#
# Four retractions map a tangent step back onto the manifold. Here we check
# how far apart they land and how large their second-order defect is.

# %%
import numpy as np

from fixedrank import (
    Dims,
    RetractionKind,
    embed,
    embed_tangent,
    inverse_retract_orth,
    random_point,
    random_tangent,
    retract,
)
from fixedrank.retractions import retract_orth, second_order_defect

X = random_point(Dims(60, 50, 5), np.geomspace(1.0, 1e-2, 5), seed=0)
Z = random_tangent(X, seed=1)
print("singular values of X:", X.singular_values())

# %% [markdown]
# ## First-order agreement
#
# All four satisfy `R_X(tZ) = X + tZ + O(t^2)`. The remainder should drop by
# about 4x per halving of `t`.

# %%
ts = 0.1 / 2.0 ** np.arange(6)
print(f"{'t':>9s}" + "".join(f"{k.value:>11s}" for k in RetractionKind))
for t in ts:
    line = f"{t:9.2e}"
    for kind in RetractionKind:
        rem = embed(retract(kind, X, t * Z)) - embed(X) - t * embed_tangent(X, Z)
        line += f"{np.linalg.norm(rem):11.2e}"
    print(line)

# %% [markdown]
# ## Second-order defect
#
# The defect is the tangential part of the residual, scaled so that a
# second-order retraction gives `O(t^3)`. The orthographic retraction moves
# only along the normal space, so its defect is zero up to roundoff.

# %%
for kind in RetractionKind:
    d = [second_order_defect(kind, X, Z, t) for t in (1e-2, 5e-3)]
    print(f"{kind.value:5s} defect {d[0]:.2e} -> {d[1]:.2e}  ratio {d[0] / max(d[1], 1e-300):.1f}")

# %% [markdown]
# ## Inverting the orthographic retraction
#
# The inverse is just the tangent projection of `Y - X`, so the round trip
# is exact to roundoff as long as the step stays small compared to `sigma_r`.

# %%
for frac in (1e-3, 1e-2, 1e-1):
    Zs = (frac * X.singular_values()[-1]) * Z
    back = inverse_retract_orth(X, retract_orth(X, Zs))
    print(f"|Z| = {Zs.norm():.1e}: round-trip error {(back - Zs).norm():.1e}")
