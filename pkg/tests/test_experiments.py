import csv
import math
import warnings

import numpy as np
import pytest

import fixedrank.experiments as ex
from fixedrank.cli import build_parser, config_from_args, main
from fixedrank.experiments import (
    RESULT_FIELDS,
    ConfigError,
    InsufficientDataError,
    SweepConfig,
    SweepOutcome,
    SweepResult,
    check_timing_order,
    emit,
    estimate_order,
    fit_order,
    hermite_trend,
    overlap_ratios,
    parse_config_text,
    read_csv,
    run_experiment,
)

SMALL = dict(n=20, r=4, T=0.5, dts=tuple(0.5 / 2**k for k in range(2, 7)))


def _row(method="prk1", r=4, eta=0.0, dt=0.1, error=1.0, failed=False, wall=1.0, exp="convergence"):
    return SweepResult(exp, method, 20, r, eta, dt, error, 0.0, 0.1, wall, failed, "")


class TestConfig:
    def test_defaults(self):
        c = SweepConfig()
        assert c.n == 100 and c.r == 12 and c.T == 0.5
        assert c.dts == tuple(0.5 / 2**k for k in range(2, 11))
        assert set(c.methods) == set(ex.ALL_METHODS)
        assert SweepConfig(experiment="robustness").methods == ("afe", "rh", "arh")

    @pytest.mark.parametrize("kwargs", [
        dict(dts=(0.1, 0.1)), dict(dts=(-0.1,)), dict(dts=(0.3,)), dict(methods=()),
        dict(methods=("rk4",)), dict(experiment="nope"), dict(r=200), dict(etas=(-1.0,)),
        dict(T=0.0), dict(ref_tol=0.0), dict(sigmas=(2.0,)), dict(jobs=0),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            SweepConfig(**kwargs)

    def test_parse_text(self):
        text = """
        # comment
        experiment = robustness
        Dt-List = 0.25, 0.125
        eta = 0, 1
        METHODS = AFE,rh
        T = 0.5
        ranks = 5,10
        """
        vals = parse_config_text(text)
        assert vals == dict(experiment="robustness", dts=(0.25, 0.125), etas=(0.0, 1.0),
                            methods=("AFE", "rh"), T=0.5, ranks=(5, 10))
        assert SweepConfig(**vals).methods == ("afe", "rh")

    @pytest.mark.parametrize("text", ["bogus = 1", "n 3", "n = three"])
    def test_parse_errors(self, text):
        with pytest.raises(ConfigError):
            parse_config_text(text)

    def test_as_text_round_trips(self):
        c = SweepConfig(experiment="convergence", etas=(0.0, 1e-3), methods=("rh",), **SMALL)
        back = parse_config_text(c.as_text())
        assert SweepConfig(**back) == c

    def test_flags_override_file(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("n = 30\nr = 3\nseed = 4\nmethods = prk1\n")
        args = build_parser().parse_args(["convergence", "--config", str(cfg), "--seed", "9", "--dt-list", "0.25,0.125"])
        c = config_from_args(args)
        assert (c.n, c.r, c.seed, c.methods, c.dts) == (30, 3, 9, ("prk1",), (0.25, 0.125))

    def test_experiment_mismatch(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("experiment = robustness\n")
        args = build_parser().parse_args(["convergence", "--config", str(cfg)])
        with pytest.raises(ConfigError):
            config_from_args(args)


class TestFitOrder:
    DTS = 0.5 / 2.0 ** np.arange(2, 11)

    def test_exact_power_law(self):
        slope, _, mask, _ = fit_order(self.DTS, self.DTS**2)
        assert abs(slope - 2.0) <= 1e-6
        assert mask.sum() == len(self.DTS) - 1

    def test_plateau_excluded(self):
        slope, _, mask, plateau = fit_order(self.DTS, self.DTS**2 + 1e-6)
        assert abs(slope - 2.0) <= 0.1
        assert plateau == pytest.approx(self.DTS[-1] ** 2 + 1e-6)
        assert not mask[-2:].any() and mask[:-2].all()

    def test_too_few_points(self):
        with pytest.raises(InsufficientDataError):
            fit_order(self.DTS[:3], self.DTS[:3] ** 2)
        with pytest.raises(InsufficientDataError):
            fit_order(self.DTS, np.full(self.DTS.size, 1e-3))

    def test_nonfinite_dropped(self):
        errs = self.DTS**1.0
        errs[0] = np.nan
        slope, *_ = fit_order(self.DTS, errs)
        assert slope == pytest.approx(1.0)

    def test_estimate_order(self):
        rows = [_row(dt=d, error=3 * d) for d in self.DTS] + [_row(method="rh", dt=0.1)]
        est = estimate_order(rows, "prk1")
        assert est.slope == pytest.approx(1.0) and est.within_band
        assert est.dt_max == self.DTS[0] and est.dt_min == self.DTS[-3]
        with pytest.raises(ValueError):
            estimate_order(rows + [_row(eta=1.0)], "prk1")


class TestDiagnostics:
    def test_overlap_ratios(self):
        rows = []
        for r, scale in [(5, 1.0), (10, 1.5)]:
            for d in [0.4, 0.2, 0.1, 0.05]:
                rows.append(_row("afe", r, None, d, scale * d**2 + (1e-3 if r == 5 else 0.0)))
        ratios = dict(overlap_ratios(rows, "afe"))
        # rank 5 sits within 3x of its plateau only at dt = 0.05
        assert set(ratios) == {0.4, 0.2, 0.1}
        assert ratios[0.4] == pytest.approx((1.5 * 0.16) / (0.16 + 1e-3))

    def test_timing_order_is_warn_only(self):
        rows = [_row("prk1", wall=5.0, dt=0.25), _row("afe", wall=1.0, dt=0.25)]
        with pytest.warns(RuntimeWarning):
            ok, means = check_timing_order(rows, 0.5)
        assert not ok and means["prk1"] == 2.5
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert check_timing_order([rows[1], _row("prk2", wall=9.0, dt=0.25)], 0.5)[0]

    def test_hermite_trend(self):
        summ = [ex.HermiteSummary(s, tau, 1, 0, 0, 0, 1 / s * (1 + tau), 0, 0) for tau in (0, 1) for s in (1e-1, 1e-2, 1e-3)]
        assert hermite_trend(summ) == {0: -1.0, 1: -1.0}


class TestSweeps:
    def test_convergence_small(self):
        out = run_experiment(SweepConfig(methods=("prk1", "rh"), **SMALL))
        assert len(out.rows) == 10 and not out.any_failed
        assert all(r.best_approx_error < 1e-8 for r in out.rows)
        errs = [r.error for r in out.rows if r.method == "prk1"]
        assert errs == sorted(errs, reverse=True)
        sv = out.plot_data["convergence_reference_singular_values_eta=0"]
        assert sv.shape == (11, 9)

    def test_failures_are_isolated(self, monkeypatch):
        real = ex.integrate

        def flaky(kind, *a, **k):
            if kind == "rh":
                raise FloatingPointError("boom")
            return real(kind, *a, **k)

        monkeypatch.setattr(ex, "integrate", flaky)
        out = run_experiment(SweepConfig(methods=("prk1", "rh"), **SMALL))
        bad = [r for r in out.rows if r.failed]
        assert len(bad) == 5 and all("boom" in r.reason for r in bad)
        assert all(math.isnan(r.error) for r in bad)
        assert out.any_failed

    def test_hermite_small(self):
        cfg = SweepConfig(experiment="hermite-robustness", n=30, hermite_rank=4, instances=3, sigmas=(1.0, 1e-2, 1e-4))
        out = run_experiment(cfg)
        assert len(out.rows) == 9 and len(out.summary) == 6
        top = [s for s in out.summary if s.sigma_r == 1.0]
        assert all(s.p50 <= 1e-3 for s in top)

    def test_jobs_do_not_change_results(self, tmp_path):
        cfg = dict(experiment="hermite-robustness", n=20, hermite_rank=3, instances=2, sigmas=(1e-1, 1e-3))
        a = emit(run_experiment(SweepConfig(**cfg)), tmp_path / "a")[0].read_bytes()
        b = emit(run_experiment(SweepConfig(jobs=2, **cfg)), tmp_path / "b")[0].read_bytes()
        assert a == b


class TestEmit:
    def test_header_only(self, tmp_path):
        paths = emit(SweepOutcome(SweepConfig()), tmp_path)
        assert (tmp_path / "convergence.csv").read_text() == ",".join(RESULT_FIELDS) + "\n"
        assert tmp_path / "convergence_metadata.txt" in paths

    def test_round_trip_with_quoting(self, tmp_path):
        rows = [_row(dt=0.1, error=0.1 + 0.2), SweepResult("convergence", "rh", 20, 4, 0.0, 0.05, math.nan, 0.0,
                                                            0.1, 2.0, True, 'LinAlgError: "bad", singular\nmatrix')]
        emit(SweepOutcome(SweepConfig(), rows), tmp_path)
        with open(tmp_path / "convergence.csv", newline="", encoding="utf-8") as fh:
            back = list(csv.DictReader(fh))
        assert back == read_csv(tmp_path / "convergence.csv")
        assert [b["method"] for b in back] == ["prk1", "rh"]
        assert float(back[0]["error"]) == 0.1 + 0.2
        assert back[1]["reason"] == 'LinAlgError: "bad", singular\nmatrix'
        assert back[1]["failed"] == "true" and back[1]["eta"] == "0.0"

    def test_metadata_and_plot_files(self, tmp_path):
        cfg = SweepConfig(methods=("prk1",), seed=3, **SMALL)
        emit(run_experiment(cfg), tmp_path)
        meta = (tmp_path / "convergence_metadata.txt").read_text()
        assert "seed = 3" in meta and "fixedrank_version" in meta and "timing_columns = wall_time_ms" in meta
        dat = np.loadtxt(tmp_path / "plot_data" / "convergence_prk1_eta=0.dat")
        assert dat.shape == (5, 2)
        assert (tmp_path / "plot_data" / "convergence_prk1_eta=0.dat").read_text().startswith("# dt error")


def _strip_timing(path):
    rows = read_csv(path)
    for r in rows:
        r.pop("wall_time_ms", None)
    return rows


class TestCLI:
    ARGS = ["convergence", "--n", "20", "--methods", "prk1,ksl", "--dt-list", "0.125,0.0625,0.03125"]

    def test_success_and_determinism(self, tmp_path, capsys):
        assert main(self.ARGS + ["--out", str(tmp_path / "a")]) == 0
        assert main(self.ARGS + ["--out", str(tmp_path / "b")]) == 0
        assert "0 failed" in capsys.readouterr().out
        assert _strip_timing(tmp_path / "a" / "convergence.csv") == _strip_timing(tmp_path / "b" / "convergence.csv")

    @pytest.mark.parametrize("bad", [["--dt-list", "0.3"], ["--methods", "euler"], ["--bogus"], ["--n", "x"]])
    def test_config_errors_exit_1(self, bad, tmp_path):
        argv = ["convergence", "--out", str(tmp_path)] + bad
        try:
            code = main(argv)
        except SystemExit as exc:
            code = exc.code
        assert code == 1

    def test_missing_config_file(self, tmp_path):
        assert main(["robustness", "--config", str(tmp_path / "none.txt")]) == 1

    def test_failed_cells_exit_2(self, tmp_path, monkeypatch):
        real = ex.integrate
        monkeypatch.setattr(ex, "integrate", lambda kind, *a, **k: (_ for _ in ()).throw(RuntimeError("x"))
                            if kind == "ksl" else real(kind, *a, **k))
        assert main(self.ARGS + ["--out", str(tmp_path)]) == 2
        rows = read_csv(tmp_path / "convergence.csv")
        assert {r["failed"] for r in rows if r["method"] == "ksl"} == {"true"}
        assert {r["failed"] for r in rows if r["method"] == "prk1"} == {"false"}

    def test_module_entry_point(self, tmp_path):
        import subprocess
        import sys

        cfg = tmp_path / "h.txt"
        cfg.write_text("instances = 5\nhermite_rank = 4\n")
        res = subprocess.run([sys.executable, "-m", "fixedrank", "hermite-robustness", "--n", "20",
                              "--config", str(cfg), "--out", str(tmp_path)], capture_output=True, text=True, timeout=300)
        assert res.returncode == 0, res.stderr
        assert "spearman" in res.stdout
        assert len(read_csv(tmp_path / "hermite_robustness.csv")) == 40
