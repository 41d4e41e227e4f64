"""Command-line entry point: ``fixedrank <experiment> [options]``.

Exit status is 0 when every cell succeeded, 2 when at least one cell (or
order estimate) failed, and 1 on a configuration error.
"""
from __future__ import annotations

import argparse
import sys
import warnings

from .experiments import (
    EXPERIMENTS,
    ConfigError,
    SweepConfig,
    check_timing_order,
    emit,
    hermite_trend,
    load_config,
    overlap_ratios,
    parse_config_text,
    run_experiment,
)

EXIT_OK, EXIT_CONFIG, EXIT_FAILED_CELLS = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is reserved for failed cells
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_common(p):
    p.add_argument("--config", metavar="PATH", help="key = value file; flags override its entries")
    p.add_argument("--out", metavar="DIR", help="output directory (default: results)")
    p.add_argument("--seed", type=int, metavar="N")
    p.add_argument("--methods", metavar="LIST", help="comma-separated, e.g. prk1,afe,rh")
    p.add_argument("--dt-list", metavar="LIST", help="comma-separated step sizes")
    p.add_argument("--eta", metavar="LIST", help="comma-separated source norms")
    p.add_argument("--ranks", metavar="LIST", help="comma-separated ranks for the rotation sweep")
    p.add_argument("--n", type=int, metavar="N", help="matrix size")
    p.add_argument("--T", type=float, metavar="X", help="final time")
    p.add_argument("--ref-tol", type=float, metavar="X", help="reference solver tolerance")
    p.add_argument("--jobs", type=int, metavar="N", help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fixedrank", description="Dynamical low-rank integration experiments.")
    sub = parser.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    helps = {
        "convergence": "Lyapunov DLRA error versus step size",
        "robustness": "rotation-curve DLRA error versus step size for several ranks",
        "hermite-robustness": "Hermite interpolant velocity errors versus smallest singular value",
        "order-check": "fitted convergence orders compared with expected bands",
    }
    for name in EXPERIMENTS:
        _add_common(sub.add_parser(name, help=helps[name]))
    return parser


def config_from_args(args) -> SweepConfig:
    values = load_config(args.config) if args.config else {}
    if values.get("experiment", args.experiment) != args.experiment:
        raise ConfigError(f"config file is for {values['experiment']!r}, not {args.experiment!r}")
    values["experiment"] = args.experiment
    flag_text = []
    for key in ("out", "seed", "methods", "dt_list", "eta", "ranks", "n", "T", "ref_tol", "jobs"):
        v = getattr(args, key)
        if v is not None:
            flag_text.append(f"{key} = {v}")
    values.update(parse_config_text("\n".join(flag_text)))
    try:
        return SweepConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _report(outcome, stream):
    cfg = outcome.config
    failed = [r for r in outcome.rows if r.failed]
    print(f"{cfg.experiment}: {len(outcome.rows)} cells, {len(failed)} failed", file=stream)
    for r in failed[:10]:
        print(f"  failed: {getattr(r, 'method', '')} {r.reason}", file=stream)
    if cfg.experiment == "hermite-robustness":
        rho = hermite_trend(outcome.summary)
        print(f"  spearman(log sigma_r, median error): tau=0 {rho[0]:.3f}, tau=1 {rho[1]:.3f}", file=stream)
    if cfg.experiment == "robustness" and "afe" in cfg.methods:
        ratios = overlap_ratios(outcome.rows, "afe")
        if ratios:
            print(f"  afe rank overlap: max error ratio {max(q for _, q in ratios):.3f}", file=stream)
    if cfg.experiment == "order-check":
        for est in outcome.summary:
            where = f"eta={est.eta:g}" if est.eta is not None else f"r={est.r}"
            status = "FAIL" if est.failed else ("n/a" if est.within_band is None else "ok")
            print(f"  {est.experiment:11s} {where:8s} {est.method:5s} slope {est.slope:7.3f}  {status} {est.reason}",
                  file=stream)
    if cfg.experiment in ("convergence", "order-check"):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            check_timing_order([r for r in outcome.rows if r.experiment == "convergence"], cfg.T)
        for w in caught:
            print(f"  warning: {w.message}", file=stream)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
    except ConfigError as exc:
        print(f"fixedrank: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outcome = run_experiment(config)
    try:
        written = emit(outcome, config.out)
    except OSError as exc:
        print(f"fixedrank: cannot write results: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _report(outcome, sys.stdout)
    print(f"wrote {len(written)} files to {config.out}")
    return EXIT_FAILED_CELLS if outcome.any_failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
