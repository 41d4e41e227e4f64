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
# # Convergence on a differential Lyapunov equation
#
# `A' = L A + A L' + Q` with the 1-D Laplacian `L`. For `Q = 0` the solution
# keeps the rank of `A0`, so the low-rank integrators converge to it at their
# nominal order. With a source term the rank grows and every method levels
# off near the best rank-r approximation error.
#
# This uses a smaller problem than the default sweep so it runs in a few
# seconds. `fixedrank convergence` runs the full `n = 100` version.

# %%
from fixedrank.experiments import InsufficientDataError, SweepConfig, fit_order, run_experiment

cfg = SweepConfig(experiment="convergence", n=40, r=6, etas=(0.0, 1.0),
                  methods=("prk1", "ksl", "prk2", "afe", "rh", "arh"),
                  dts=tuple(0.5 / 2**k for k in range(2, 9)))
out = run_experiment(cfg)

# %% [markdown]
# ## Error tables
#
# Spectral-norm error at `T = 0.5` for each step size.

# %%
for eta in cfg.etas:
    rows = [r for r in out.rows if r.eta == eta]
    print(f"eta = {eta:g}, best rank-{cfg.r} error {rows[0].best_approx_error:.2e}")
    print(f"{'dt':>9s}" + "".join(f"{m:>10s}" for m in cfg.methods))
    for dt in cfg.dts:
        errs = {r.method: r.error for r in rows if r.dt == dt}
        print(f"{dt:9.5f}" + "".join(f"{errs[m]:10.2e}" for m in cfg.methods))
    print()

# %% [markdown]
# ## Fitted orders for `Q = 0`
#
# Points within 3x of the smallest error are treated as plateau and left out.

# %%
for m in cfg.methods:
    sel = [r for r in out.rows if r.eta == 0.0 and r.method == m]
    try:
        slope, stderr, mask, _ = fit_order([r.dt for r in sel], [r.error for r in sel])
    except InsufficientDataError as exc:
        print(f"{m:5s} {exc}")
        continue
    print(f"{m:5s} slope {slope:5.2f} +- {stderr:.2f} from {int(mask.sum())} points")
