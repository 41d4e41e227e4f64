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
# # Small singular values
#
# The ambient curve `exp(t OmU) e^t D exp(t OmV)'` has singular values
# `e^t 2^-i`. Approximating it at a larger rank means carrying tinier
# singular values. The projector-splitting method (KSL) does not care. The
# accelerated forward Euler method (AFE) uses the curvature of the manifold,
# which grows like `1 / sigma_r`, yet its error curves still stack on top of
# each other until each one reaches its own modeling-error plateau.

# %%
from fixedrank.experiments import SweepConfig, overlap_ratios, run_experiment

cfg = SweepConfig(experiment="robustness", n=40, ranks=(8, 12, 16), methods=("ksl", "afe"),
                  dts=tuple(0.5 / 2**k for k in range(3, 10)))
out = run_experiment(cfg)

# %%
for m in cfg.methods:
    print(m)
    print(f"{'dt':>9s}" + "".join(f"{'r=' + str(r):>10s}" for r in cfg.ranks))
    for dt in cfg.dts:
        errs = {row.r: row.error for row in out.rows if row.method == m and row.dt == dt}
        print(f"{dt:9.5f}" + "".join(f"{errs[r]:10.2e}" for r in cfg.ranks))
    print()

# %% [markdown]
# Spread of the AFE errors across ranks at the step sizes where every curve
# is still well above its plateau. A ratio near 1 means the curves overlap.

# %%
ratios = overlap_ratios(out.rows, "afe")
for dt, q in ratios:
    print(f"dt = {dt:.5f}: max/min error across ranks {q:.2f}")
if not ratios:
    print("no step size has every rank above its plateau")
print("smallest sigma_r along each run:",
      {r: f"{min(row.min_sigma_r for row in out.rows if row.r == r):.1e}" for r in cfg.ranks})
