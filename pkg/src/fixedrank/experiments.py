"""Experiment sweeps, convergence-order estimation and result files.

Four experiments are available:

``convergence``
    DLRA of the differential Lyapunov equation, final spectral error against
    an ambient reference solution for every (eta, method, dt) cell.
``robustness``
    DLRA of the factored rotation curve for several ranks, error against the
    closed-form curve at the final time.
``hermite-robustness``
    Velocity mismatch of the Hermite interpolant at both ends for random
    instances whose smallest singular value is prescribed.
``order-check``
    Both DLRA sweeps followed by a fitted convergence order per curve,
    compared with the expected order where one is known.

Results are plain dataclass rows. :func:`emit` writes them as CSV together
with a metadata file and two-column plot-data files.
"""
from __future__ import annotations

import csv
import functools
import math
import platform
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import scipy
from scipy import stats

from .curves import HermiteData, HermiteError, JetData, hermite_eval
from .integrators import StepperKind, integrate, reference_ambient_solve
from .manifold import embed, embed_tangent, truncated_svd
from .problems import (
    lyapunov_field,
    make_hermite_instance,
    make_lyapunov,
    make_rotation,
    rotation_curve,
    rotation_field,
)

__all__ = [
    "EXPERIMENTS",
    "ConfigError",
    "InsufficientDataError",
    "SweepConfig",
    "SweepResult",
    "HermiteRecord",
    "HermiteSummary",
    "OrderEstimate",
    "SweepOutcome",
    "parse_config_text",
    "load_config",
    "fit_order",
    "estimate_order",
    "expected_band",
    "run_convergence",
    "run_robustness",
    "run_hermite_robustness",
    "run_order_check",
    "run_experiment",
    "overlap_ratios",
    "hermite_trend",
    "check_timing_order",
    "emit",
]

EXPERIMENTS = ("convergence", "robustness", "hermite-robustness", "order-check")
ALL_METHODS = tuple(k.value for k in StepperKind)
DEFAULT_METHODS = {
    "convergence": ALL_METHODS,
    "robustness": ("afe", "rh", "arh"),
    "order-check": ("ksl", "kls"),
    "hermite-robustness": (),
}
# expected wall-time ordering per step, checked softly
TIMING_ORDER = ("prk1", "afe", "prk2", "rh", "prk3", "arh")
PLATEAU_FACTOR = 3.0
MIN_ORDER_POINTS = 4
PERCENTILES = (5, 25, 50, 75, 95)


class ConfigError(ValueError):
    """Invalid sweep configuration."""


class InsufficientDataError(ValueError):
    """Too few usable points for an order fit."""


def _default_dts(T):
    return tuple(T / 2.0**k for k in range(2, 11))


@dataclass(frozen=True)
class SweepConfig:
    """Parameters of one sweep.

    ``methods=None`` and ``dts=None`` select per-experiment defaults: all
    methods for ``convergence`` and ``dt = T / 2^k`` for ``k = 2..10``.
    ``r`` is the DLRA rank of the Lyapunov sweeps, ``ranks`` the rank list of
    the rotation sweeps. ``sigmas``, ``instances`` and ``hermite_rank`` only
    affect ``hermite-robustness``.
    """

    experiment: str = "convergence"
    n: int = 100
    r: int = 12
    ranks: tuple = (5, 10, 15, 20)
    etas: tuple = (0.0,)
    T: float = 0.5
    dts: tuple | None = None
    methods: tuple | None = None
    seed: int = 0
    ref_tol: float = 1e-10
    sigmas: tuple = tuple(10.0**-k for k in range(1, 9))
    instances: int = 100
    hermite_rank: int = 12
    jobs: int = 1
    out: str = "results"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.T <= 0:
            raise ConfigError("T must be positive")
        dts = _default_dts(self.T) if self.dts is None else tuple(float(d) for d in self.dts)
        if any(d <= 0 for d in dts):
            raise ConfigError("dt values must be positive")
        if len(set(dts)) != len(dts):
            raise ConfigError("dt values must be distinct")
        for d in dts:
            N = round(self.T / d)
            if N < 1 or abs(N * d - self.T) > 1e-9 * self.T:
                raise ConfigError(f"T / dt must be an integer, got T={self.T}, dt={d}")
        methods = DEFAULT_METHODS[self.experiment] if self.methods is None else tuple(self.methods)
        methods = tuple(m.lower() for m in methods)
        bad = [m for m in methods if m not in ALL_METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {', '.join(ALL_METHODS)}")
        if not methods and self.experiment != "hermite-robustness":
            raise ConfigError("methods must be nonempty")
        if self.n < 1 or not 1 <= self.r <= self.n:
            raise ConfigError("need 1 <= r <= n")
        if any(not 1 <= k <= self.n for k in self.ranks) or not self.ranks:
            raise ConfigError("ranks must be nonempty and lie in [1, n]")
        if any(e < 0 for e in self.etas) or not self.etas:
            raise ConfigError("eta values must be nonnegative and nonempty")
        if self.ref_tol <= 0:
            raise ConfigError("ref_tol must be positive")
        if any(not 0 < s <= 1 for s in self.sigmas) or not self.sigmas:
            raise ConfigError("sigma values must lie in (0, 1]")
        if self.instances < 1 or self.jobs < 1:
            raise ConfigError("instances and jobs must be positive")
        object.__setattr__(self, "dts", dts)
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "ranks", tuple(int(k) for k in self.ranks))
        object.__setattr__(self, "etas", tuple(float(e) for e in self.etas))
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))

    def as_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines)


# config-file keys and the SweepConfig field and parser each maps to
_KEYS = {
    "experiment": ("experiment", str),
    "n": ("n", int),
    "r": ("r", int),
    "ranks": ("ranks", "ints"),
    "eta": ("etas", "floats"),
    "etas": ("etas", "floats"),
    "t": ("T", float),
    "dt_list": ("dts", "floats"),
    "dts": ("dts", "floats"),
    "methods": ("methods", "strs"),
    "seed": ("seed", int),
    "ref_tol": ("ref_tol", float),
    "sigmas": ("sigmas", "floats"),
    "instances": ("instances", int),
    "hermite_rank": ("hermite_rank", int),
    "jobs": ("jobs", int),
    "out": ("out", str),
}


def _convert(key, raw):
    name, kind = _KEYS[key]
    raw = raw.strip()
    try:
        if kind == "ints":
            return name, tuple(int(x) for x in raw.split(",") if x.strip())
        if kind == "floats":
            return name, tuple(float(x) for x in raw.split(",") if x.strip())
        if kind == "strs":
            return name, tuple(x.strip() for x in raw.split(",") if x.strip())
        return name, kind(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into SweepConfig keyword arguments.

    Blank lines and lines starting with ``#`` are skipped. Keys are case
    insensitive and accept dashes for underscores, so ``dt-list`` and
    ``dt_list`` are the same key. Lists are comma separated.
    """
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip().lower().replace("-", "_")
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        name, value = _convert(key, raw)
        out[name] = value
    return out


def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text)


@dataclass(frozen=True)
class SweepResult:
    """One (method, rank, eta, dt) cell of a DLRA sweep.

    ``eta`` is ``None`` for the rotation sweeps. Failed cells carry NaN errors
    and a reason string.
    """

    experiment: str
    method: str
    n: int
    r: int
    eta: float | None
    dt: float
    error: float
    best_approx_error: float
    min_sigma_r: float
    wall_time_ms: float
    failed: bool = False
    reason: str = ""

    def sort_key(self):
        return (self.experiment, -1.0 if self.eta is None else self.eta, self.r, self.method, -self.dt)


RESULT_FIELDS = tuple(f.name for f in fields(SweepResult))
TIMING_FIELDS = ("wall_time_ms",)


@dataclass(frozen=True)
class HermiteRecord:
    experiment: str
    sigma_r: float
    instance: int
    error_tau0: float
    error_tau1: float
    failed: bool = False
    reason: str = ""

    def sort_key(self):
        return (-self.sigma_r, self.instance)


@dataclass(frozen=True)
class HermiteSummary:
    sigma_r: float
    tau: int
    count: int
    failures: int
    p5: float
    p25: float
    p50: float
    p75: float
    p95: float


@dataclass(frozen=True)
class OrderEstimate:
    """Fitted slope of log error versus log dt.

    ``dt_min`` and ``dt_max`` bound the window actually used; ``plateau`` is
    the smallest error of the sweep.
    """

    method: str
    slope: float
    stderr: float
    dt_min: float
    dt_max: float
    n_points: int
    plateau: float
    experiment: str = ""
    eta: float | None = None
    r: int | None = None
    band_low: float | None = None
    band_high: float | None = None
    within_band: bool | None = None
    failed: bool = False
    reason: str = ""

    def sort_key(self):
        return (self.experiment, -1.0 if self.eta is None else self.eta, -1 if self.r is None else self.r, self.method)


@dataclass
class SweepOutcome:
    """Rows of one sweep plus derived tables and plot data for :func:`emit`."""

    config: SweepConfig
    rows: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    plot_data: dict = field(default_factory=dict)

    @property
    def any_failed(self) -> bool:
        return any(r.failed for r in self.rows) or any(s.failed for s in self.summary if hasattr(s, "failed"))


def fit_order(dts, errors, plateau_factor=PLATEAU_FACTOR, min_points=MIN_ORDER_POINTS):
    """Least-squares slope of ``log(error)`` against ``log(dt)``.

    Only points with ``error >= plateau_factor * min(error)`` enter the fit.
    Non-finite or nonpositive errors are dropped first.

    Returns
    -------
    slope, stderr, mask, plateau
        ``mask`` selects the points used, ``plateau`` is the smallest error.

    Raises
    ------
    InsufficientDataError
        If fewer than ``min_points`` points remain.
    """
    dts = np.asarray(dts, dtype=float)
    errors = np.asarray(errors, dtype=float)
    ok = np.isfinite(errors) & (errors > 0) & np.isfinite(dts) & (dts > 0)
    if not ok.any():
        raise InsufficientDataError("no finite positive errors")
    plateau = float(errors[ok].min())
    mask = ok & (errors >= plateau_factor * plateau)
    if mask.sum() < min_points:
        raise InsufficientDataError(
            f"only {int(mask.sum())} points lie {plateau_factor:g}x above the plateau {plateau:.3g}, need {min_points}"
        )
    fit = stats.linregress(np.log(dts[mask]), np.log(errors[mask]))
    return float(fit.slope), float(fit.stderr), mask, plateau


def expected_band(method, experiment="convergence", eta=0.0):
    """Accepted slope interval, or ``None`` where no order is asserted."""
    if experiment == "convergence" and eta == 0.0:
        return {
            "prk1": (0.8, 1.2), "ksl": (0.8, 1.2), "kls": (0.8, 1.2),
            "prk2": (1.7, 2.3), "afe": (1.7, 2.3), "rh": (1.7, 2.3),
            "prk3": (2.7, 3.3), "arh": (2.5, math.inf),
        }[method]
    if experiment == "robustness" and method in ("ksl", "kls"):
        return (0.8, 1.2)
    return None


def estimate_order(results, method) -> OrderEstimate:
    """Order estimate for one method from rows of a single (eta, rank) curve.

    Raises
    ------
    InsufficientDataError
        If fewer than four usable points remain after plateau exclusion.
    ValueError
        If the rows mix several curves.
    """
    rows = [r for r in results if r.method == method]
    curves = {(r.experiment, r.eta, r.r) for r in rows}
    if len(curves) > 1:
        raise ValueError(f"rows for {method} span several curves: {sorted(curves, key=str)}")
    if not rows:
        raise InsufficientDataError(f"no rows for method {method}")
    good = [r for r in rows if not r.failed]
    dts = np.array([r.dt for r in good])
    errs = np.array([r.error for r in good])
    slope, stderr, mask, plateau = fit_order(dts, errs)
    exp_id, eta, rank = curves.pop()
    band = expected_band(method, exp_id, eta)
    return OrderEstimate(
        method=method, slope=slope, stderr=stderr,
        dt_min=float(dts[mask].min()), dt_max=float(dts[mask].max()),
        n_points=int(mask.sum()), plateau=plateau, experiment=exp_id, eta=eta, r=rank,
        band_low=None if band is None else band[0], band_high=None if band is None else band[1],
        within_band=None if band is None else bool(band[0] <= slope <= band[1]),
    )


def _spectral(A):
    return float(np.linalg.norm(A, 2))


def _cell(kind, field_, Y0, T, dt, A_ref):
    try:
        traj = integrate(kind, field_, Y0, T, dt, store_states=False)
    except Exception as exc:  # sweep isolation
        return dict(error=math.nan, min_sigma_r=math.nan, wall_time_ms=0.0, failed=True,
                    reason=f"{type(exc).__name__}: {exc}")
    wall = 1e3 * float(np.sum(traj.wall_time))
    min_sr = float(np.min(traj.sigma_r))
    if not traj.ok:
        return dict(error=math.nan, min_sigma_r=min_sr, wall_time_ms=wall, failed=True, reason=traj.failure)
    err = _spectral(embed(traj.final) - A_ref)
    if not math.isfinite(err):
        return dict(error=math.nan, min_sigma_r=min_sr, wall_time_ms=wall, failed=True, reason="non-finite error")
    return dict(error=err, min_sigma_r=min_sr, wall_time_ms=wall, failed=False, reason="")


def _best_approx(A, r):
    s = np.linalg.svd(A, compute_uv=False)
    return float(s[r]) if r < s.size else 0.0


@functools.lru_cache(maxsize=8)
def _lyapunov_setup(n, r, eta, seed, T, ref_tol):
    p = make_lyapunov(n, r, eta, seed)
    fld = lyapunov_field(p)
    A_ref = reference_ambient_solve(fld, p.A0, T, tol=ref_tol)
    return p, fld, A_ref, _best_approx(A_ref, r), truncated_svd(p.A0, r)


def _convergence_cell(job):
    experiment, n, r, eta, seed, T, ref_tol, method, dt = job
    _, fld, A_ref, best, Y0 = _lyapunov_setup(n, r, eta, seed, T, ref_tol)
    res = _cell(method, fld, Y0, T, dt, A_ref)
    return SweepResult(experiment, method, n, r, eta, dt, best_approx_error=best, **res)


@functools.lru_cache(maxsize=4)
def _rotation_setup(n, seed, T):
    p = make_rotation(n, seed)
    return p, rotation_field(p), rotation_curve(p, 0.0)[0], rotation_curve(p, T)[0]


def _robustness_cell(job):
    experiment, n, r, seed, T, method, dt = job
    _, fld, A0, AT = _rotation_setup(n, seed, T)
    res = _cell(method, fld, truncated_svd(A0, r), T, dt, AT)
    return SweepResult(experiment, method, n, r, None, dt, best_approx_error=_best_approx(AT, r), **res)


def _map(fn, cells, jobs):
    if jobs <= 1 or len(cells) <= 1:
        return [fn(s) for s in cells]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, cells, chunksize=max(1, len(cells) // (4 * jobs))))


def _reference_history(config, eta, samples=11):
    p, fld, _, _, _ = _lyapunov_setup(config.n, config.r, eta, config.seed, config.T, config.ref_tol)
    times = np.linspace(0.0, config.T, samples)
    _, states = reference_ambient_solve(fld, p.A0, config.T, tol=config.ref_tol, t_eval=times)
    k = min(config.n, 2 * config.r)
    sv = np.array([np.linalg.svd(A, compute_uv=False)[:k] for A in states])
    return np.column_stack([times, sv])


def _dlra_plot_data(rows, experiment):
    data = {}
    for row in rows:
        if row.failed:
            continue
        tag = f"eta={row.eta:g}" if row.eta is not None else f"r={row.r}"
        data.setdefault(f"{experiment}_{row.method}_{tag}", []).append((row.dt, row.error))
    return {k: np.array(sorted(v, reverse=True)) for k, v in data.items()}


def run_convergence(config: SweepConfig, experiment="convergence") -> SweepOutcome:
    """Lyapunov DLRA sweep over ``config.etas x config.methods x config.dts``."""
    cells = [
        (experiment, config.n, config.r, eta, config.seed, config.T, config.ref_tol, m, dt)
        for eta in config.etas for m in config.methods for dt in config.dts
    ]
    rows = sorted(_map(_convergence_cell, cells, config.jobs), key=SweepResult.sort_key)
    out = SweepOutcome(config, rows, plot_data=_dlra_plot_data(rows, experiment))
    for eta in config.etas:
        out.plot_data[f"{experiment}_reference_singular_values_eta={eta:g}"] = _reference_history(config, eta)
    return out


def run_robustness(config: SweepConfig, experiment="robustness") -> SweepOutcome:
    """Rotation-curve DLRA sweep over ``config.ranks x config.methods x config.dts``."""
    cells = [
        (experiment, config.n, r, config.seed, config.T, m, dt)
        for r in config.ranks for m in config.methods for dt in config.dts
    ]
    rows = sorted(_map(_robustness_cell, cells, config.jobs), key=SweepResult.sort_key)
    return SweepOutcome(config, rows, plot_data=_dlra_plot_data(rows, experiment))


def overlap_ratios(rows, method, plateau_factor=PLATEAU_FACTOR):
    """Spread of the error across ranks at each dt above every rank's plateau.

    A rank's plateau is its smallest error over the sweep. Only the dt values at
    which every rank's error is at least ``plateau_factor`` times its own
    plateau are kept.

    Returns
    -------
    list of (dt, max_error / min_error) pairs, largest dt first.
    """
    by_rank = {}
    for row in rows:
        if row.method == method:
            by_rank.setdefault(row.r, {})[row.dt] = row.error
    if not by_rank:
        return []
    plateaus = {r: np.nanmin(list(d.values())) for r, d in by_rank.items()}
    common = set.intersection(*(set(d) for d in by_rank.values()))
    out = []
    for dt in sorted(common, reverse=True):
        errs = np.array([by_rank[r][dt] for r in by_rank])
        if not np.all(np.isfinite(errs)):
            continue
        if all(by_rank[r][dt] >= plateau_factor * plateaus[r] for r in by_rank):
            out.append((dt, float(errs.max() / errs.min())))
    return out


def hermite_velocity_errors(instance, h=1e-6, construction="chart"):
    """Central-difference velocity mismatch of ``H(tau; (0, Y0, Z0), (1, Y1, Z1))`` at both ends."""
    data = HermiteData(JetData(0.0, instance.Y0, instance.Z0), JetData(1.0, instance.Y1, instance.Z1))

    def H(t):
        return embed(hermite_eval(data, t, construction=construction))

    v0 = (H(h) - H(-h)) / (2 * h)
    v1 = (H(1 + h) - H(1 - h)) / (2 * h)
    e0 = np.linalg.norm(v0 - embed_tangent(instance.Y0, instance.Z0))
    e1 = np.linalg.norm(v1 - embed_tangent(instance.Y1, instance.Z1))
    return float(e0), float(e1)


def _hermite_cell(job):
    experiment, seed, k, i, sigma, n, r = job
    try:
        inst = make_hermite_instance(sigma, seed=[seed, k, i], m=n, n=n, r=r)
        e0, e1 = hermite_velocity_errors(inst)
    except (HermiteError, np.linalg.LinAlgError, RuntimeError) as exc:
        return HermiteRecord(experiment, sigma, i, math.nan, math.nan, True, f"{type(exc).__name__}: {exc}")
    return HermiteRecord(experiment, sigma, i, e0, e1)


def run_hermite_robustness(config: SweepConfig, experiment="hermite-robustness") -> SweepOutcome:
    """Velocity errors of the Hermite interpolant for ``config.instances`` draws per sigma_r.

    The summary holds the 5/25/50/75/95 percentiles per (sigma_r, tau).
    """
    r = min(config.hermite_rank, config.n)
    cells = [(experiment, config.seed, k, i, s, config.n, r)
             for k, s in enumerate(config.sigmas) for i in range(config.instances)]
    rows = sorted(_map(_hermite_cell, cells, config.jobs), key=HermiteRecord.sort_key)
    summary, plot = [], {}
    for tau in (0, 1):
        table = []
        for s in sorted(set(config.sigmas), reverse=True):
            sel = [row for row in rows if row.sigma_r == s]
            vals = np.array([getattr(row, f"error_tau{tau}") for row in sel if not row.failed])
            pct = np.percentile(vals, PERCENTILES) if vals.size else np.full(len(PERCENTILES), np.nan)
            summary.append(HermiteSummary(s, tau, int(vals.size), len(sel) - int(vals.size), *map(float, pct)))
            table.append([s, *pct])
        plot[f"{experiment}_tau={tau}"] = np.array(table)
    return SweepOutcome(config, rows, summary, plot)


def hermite_trend(summary):
    """Spearman correlation of ``log sigma_r`` with the median error, per tau.

    Returns ``{tau: rho}``.
    """
    out = {}
    for tau in (0, 1):
        sel = [s for s in summary if s.tau == tau and np.isfinite(s.p50)]
        rho = stats.spearmanr(np.log([s.sigma_r for s in sel]), [s.p50 for s in sel]).statistic
        out[tau] = float(rho)
    return out


def run_order_check(config: SweepConfig) -> SweepOutcome:
    """Run both DLRA sweeps for ``config.methods`` and fit an order per curve.

    A curve whose slope misses its expected band yields a failed estimate. A
    curve with too few points above its plateau gets a NaN slope and a reason
    but is not counted as failed, since it says nothing about the method.
    """
    conv = run_convergence(config, experiment="convergence")
    rob = run_robustness(config, experiment="robustness")
    rows = conv.rows + rob.rows
    groups = {}
    for row in rows:
        groups.setdefault((row.experiment, row.eta, row.r, row.method), []).append(row)
    summary = []
    for (exp_id, eta, r, method), sel in groups.items():
        try:
            est = estimate_order(sel, method)
        except InsufficientDataError as exc:
            band = expected_band(method, exp_id, eta)
            est = OrderEstimate(method, math.nan, math.nan, math.nan, math.nan, 0, math.nan, exp_id, eta, r,
                                None if band is None else band[0], None if band is None else band[1],
                                None, failed=False, reason=str(exc))
        else:
            if est.within_band is False:
                est = replace(est, failed=True, reason=f"slope {est.slope:.3f} outside [{est.band_low}, {est.band_high}]")
        summary.append(est)
    summary.sort(key=OrderEstimate.sort_key)
    return SweepOutcome(config, rows, summary, {**conv.plot_data, **rob.plot_data})


_RUNNERS = {
    "convergence": run_convergence,
    "robustness": run_robustness,
    "hermite-robustness": run_hermite_robustness,
    "order-check": run_order_check,
}


def run_experiment(config: SweepConfig) -> SweepOutcome:
    return _RUNNERS[config.experiment](config)


def check_timing_order(rows, T, order=TIMING_ORDER):
    """Soft check of the mean wall time per step against the expected ordering.

    Emits a ``RuntimeWarning`` on violation and never raises. Returns
    ``(ok, {method: ms_per_step})`` over the methods present in ``rows``.
    """
    total, steps = {}, {}
    for row in rows:
        if row.failed or row.method not in order:
            continue
        total[row.method] = total.get(row.method, 0.0) + row.wall_time_ms
        steps[row.method] = steps.get(row.method, 0) + round(T / row.dt)
    means = {m: total[m] / steps[m] for m in order if steps.get(m)}
    seq = [means[m] for m in order if m in means]
    ok = all(a < b for a, b in zip(seq, seq[1:]))
    if not ok:
        observed = " < ".join(sorted(means, key=means.get))
        warnings.warn(f"wall-time ordering differs from {' < '.join(m for m in order if m in means)}: "
                      f"observed {observed}", RuntimeWarning, stacklevel=2)
    return ok, means


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header, records):
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for rec in records:
            d = asdict(rec)
            w.writerow([_fmt(d[h]) for h in header])


def _record_type(experiment):
    return HermiteRecord if experiment == "hermite-robustness" else SweepResult


def emit(outcome: SweepOutcome, path, plot_data=True) -> list:
    """Write the outcome of one sweep below directory ``path``.

    Files written, with ``<exp>`` the experiment name using underscores:

    * ``<exp>.csv``: one row per cell, fixed header, rows in sort-key order;
    * ``<exp>_summary.csv``: percentiles or order estimates, when present;
    * ``<exp>_metadata.txt``: configuration, seed and library versions;
    * ``plot_data/*.dat``: whitespace-separated columns with a ``#`` header.

    Returns the list of written paths.
    """
    out_dir = Path(path)
    out_dir.mkdir(parents=True, exist_ok=True)
    exp = outcome.config.experiment
    stem = exp.replace("-", "_")
    written = []

    rec_type = _record_type(exp)
    header = tuple(f.name for f in fields(rec_type))
    rows = sorted(outcome.rows, key=lambda r: r.sort_key())
    p = out_dir / f"{stem}.csv"
    _write_csv(p, header, rows)
    written.append(p)

    if outcome.summary:
        s_type = type(outcome.summary[0])
        p = out_dir / f"{stem}_summary.csv"
        _write_csv(p, tuple(f.name for f in fields(s_type)), outcome.summary)
        written.append(p)

    p = out_dir / f"{stem}_metadata.txt"
    meta = [
        f"# fixedrank {exp} run",
        outcome.config.as_text(),
        f"fixedrank_version = {_version()}",
        f"numpy_version = {np.__version__}",
        f"scipy_version = {scipy.__version__}",
        f"python_version = {platform.python_version()}",
        f"cells = {len(outcome.rows)}",
        f"failed_cells = {sum(r.failed for r in outcome.rows)}",
        f"timing_columns = {','.join(TIMING_FIELDS) if rec_type is SweepResult else ''}",
    ]
    p.write_text("\n".join(meta) + "\n", encoding="utf-8")
    written.append(p)

    if plot_data and outcome.plot_data:
        pd = out_dir / "plot_data"
        pd.mkdir(exist_ok=True)
        for name, arr in sorted(outcome.plot_data.items()):
            arr = np.atleast_2d(np.asarray(arr, dtype=float))
            header_line = _plot_header(name, arr.shape[1])
            f = pd / f"{name}.dat"
            np.savetxt(f, arr, fmt="%.17g", header=header_line)
            written.append(f)
    return written


def _plot_header(name, ncols):
    if "reference_singular_values" in name:
        return "t " + " ".join(f"sigma_{i}" for i in range(1, ncols))
    if name.startswith("hermite-robustness"):
        return "sigma_r " + " ".join(f"p{q}" for q in PERCENTILES)
    return "dt error"


def _version():
    from . import __version__

    return __version__


def read_csv(path):
    """Read an emitted CSV back as a list of dicts of strings."""
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
