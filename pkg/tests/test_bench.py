import csv
import json
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest

import fasreg.bench
from fasreg.baselines import default_lambda_grid, lasso_cv
from fasreg.bench import (
    RESULT_COLUMNS,
    EvalReport,
    SimConfig,
    aggregate_reports,
    basic_config,
    evaluate_chain,
    evaluate_point_fit,
    generate_dataset,
    result_row,
    results_summary,
    run_benchmark,
    run_replicate,
    write_results_csv,
)
from fasreg.factors import center_columns, no_factor_decomposition, pca_decompose
from fasreg.gibbs import run_chain
from fasreg.linalg import RngStream


def fake_chain(supports, beta_mean, sigma2_mean):
    samples = [SimpleNamespace(support=np.asarray(s, dtype=int)) for s in supports]
    return SimpleNamespace(
        samples=samples,
        posterior_mean_beta=np.asarray(beta_mean, dtype=float),
        posterior_mean_sigma2=sigma2_mean,
    )


class TestSimConfig:
    def test_basic_defaults(self):
        cfg = basic_config()
        assert (cfg.n, cfg.p, cfg.s, cfg.k) == (200, 500, 5, 3)
        assert cfg.alpha_star == (0.8, 1.0, 1.2)
        assert cfg.sigma_star == 0.5

    def test_rejects_bad_scenario(self):
        with pytest.raises(ValueError, match="scenario"):
            basic_config(scenario="nope")

    def test_no_correlation_requires_k_zero(self):
        with pytest.raises(ValueError, match="k = 0"):
            basic_config(scenario="no_correlation", alpha_star=())
        cfg = basic_config(
            scenario="no_correlation", k=0, alpha_star=(), khat_used=0,
            method="generic_bayes",
        )
        assert cfg.k == 0

    def test_sub_model_rejects_explicit_alpha(self):
        with pytest.raises(ValueError, match="alpha"):
            basic_config(scenario="sub_model")

    def test_generic_method_needs_khat_zero(self):
        with pytest.raises(ValueError, match="khat_used"):
            basic_config(method="generic_bayes")


class TestGenerateDataset:
    def test_shapes_basic(self):
        ds = generate_dataset(basic_config(), RngStream(0))
        assert ds.X.shape == (200, 500)
        assert ds.Y.shape == (200,)
        assert ds.F.shape == (200, 3)
        assert ds.B.shape == (500, 3)
        assert np.array_equal(ds.truth.support, np.arange(5))
        assert np.allclose(ds.truth.beta[:5], 0.3)
        assert np.count_nonzero(ds.truth.beta) == 5

    def test_model_composition(self):
        ds = generate_dataset(basic_config(n=50, p=30), RngStream(3))
        assert np.allclose(ds.X, ds.F @ ds.B.T + ds.U)

    def test_sub_model_identity(self):
        cfg = basic_config(scenario="sub_model", alpha_star=None, n=60, p=40)
        ds = generate_dataset(cfg, RngStream(11))
        # alpha = B'beta makes the factor term collapse: F alpha + U beta = X beta
        lhs = ds.F @ ds.truth.alpha + ds.U @ ds.truth.beta
        assert np.max(np.abs(lhs - ds.X @ ds.truth.beta)) <= 1e-10

    def test_no_correlation_is_pure_noise(self):
        cfg = basic_config(
            scenario="no_correlation", k=0, alpha_star=(), khat_used=0,
            method="generic_bayes",
        )
        ds = generate_dataset(cfg, RngStream(21))
        assert np.array_equal(ds.X, ds.U)
        assert ds.F.shape == (200, 0)
        variances = ds.X.var(axis=0)
        bound = 4.0 / np.sqrt(cfg.n)
        assert abs(variances.mean() - 1.0) <= bound
        assert np.mean(np.abs(variances - 1.0) <= bound) >= 0.99

    def test_determinism(self):
        a = generate_dataset(basic_config(), RngStream(5))
        b = generate_dataset(basic_config(), RngStream(5))
        assert np.array_equal(a.X, b.X)
        assert np.array_equal(a.Y, b.Y)


class TestEvaluateChain:
    def test_all_samples_at_truth(self):
        truth = SimpleNamespace(support=np.arange(3), beta=np.array([0.3, 0.3, 0.3, 0.0]), sigma2=0.25)
        chain = fake_chain([[0, 1, 2]] * 4, [0.3, 0.3, 0.3, 0.0], 0.25)
        rep = evaluate_chain(chain, truth)
        assert rep.beta_l2_error == 0.0
        assert rep.model_selection_rate == 1.0
        assert rep.sure_screening_rate == 1.0
        assert rep.avg_model_size == 3.0
        assert rep.sigma2_rel_error == 0.0

    def test_half_exact_all_containing(self):
        truth = SimpleNamespace(support=np.arange(2), beta=np.zeros(5), sigma2=1.0)
        chain = fake_chain([[0, 1], [0, 1, 3], [0, 1], [0, 1, 4]], np.zeros(5), 1.0)
        rep = evaluate_chain(chain, truth)
        assert rep.model_selection_rate == 0.5
        assert rep.sure_screening_rate == 1.0
        assert rep.avg_model_size == 2.5

    def test_single_coordinate_l2(self):
        truth = SimpleNamespace(
            support=np.arange(5), beta=np.concatenate([np.full(5, 0.3), np.zeros(3)]), sigma2=0.25
        )
        mean = truth.beta.copy()
        mean[2] += 0.1
        chain = fake_chain([list(range(5))], mean, 0.25)
        assert evaluate_chain(chain, truth).beta_l2_error == pytest.approx(0.1)

    def test_empty_chain_rejected(self):
        truth = SimpleNamespace(support=np.arange(1), beta=np.zeros(2), sigma2=1.0)
        with pytest.raises(ValueError, match="no retained samples"):
            evaluate_chain(fake_chain([], np.zeros(2), 1.0), truth)


class TestAggregateReports:
    def make(self, x):
        return EvalReport(
            beta_l2_error=x,
            model_selection_rate=x / 10.0,
            sure_screening_rate=x / 10.0,
            avg_model_size=x * 2,
            sigma2_rel_error=x,
        )

    def test_average(self):
        agg = aggregate_reports([self.make(1.0), self.make(3.0)])
        assert agg.beta_l2_error == 2.0
        assert agg.avg_model_size == 4.0

    def test_permutation_invariance(self):
        reports = [self.make(x) for x in (0.1, 0.7, 0.3, 1.9, 0.001)]
        a = aggregate_reports(reports)
        b = aggregate_reports(reports[::-1])
        assert a == b

    def test_screening_floor(self):
        with pytest.raises(ValueError, match="screening"):
            EvalReport(
                beta_l2_error=0.0,
                model_selection_rate=0.9,
                sure_screening_rate=0.5,
                avg_model_size=1.0,
                sigma2_rel_error=0.0,
            )


class TestEvaluatePointFit:
    def test_exact_fit(self):
        truth = SimpleNamespace(support=np.arange(2), beta=np.array([1.0, -1.0, 0.0]), sigma2=4.0)
        rep = evaluate_point_fit([1.0, -1.0, 0.0], [0, 1], 4.0, truth)
        assert rep.beta_l2_error == 0.0
        assert rep.model_selection_rate == 1.0
        assert rep.avg_model_size == 2.0

    def test_superset_selection(self):
        truth = SimpleNamespace(support=np.arange(2), beta=np.zeros(4), sigma2=1.0)
        rep = evaluate_point_fit(np.zeros(4), [0, 1, 3], 1.0, truth)
        assert rep.model_selection_rate == 0.0
        assert rep.sure_screening_rate == 1.0


def small_cfg(**over):
    base = dict(
        n=60,
        p=30,
        s=2,
        k=1,
        alpha_star=(1.0,),
        beta_star_values=(0.5, 0.5),
        sigma_star=0.5,
        replicates=2,
        khat_used=1,
        method="fa_bayes",
        cv_folds=5,
    )
    base.update(over)
    return basic_config(**base)


class TestRunReplicate:
    def test_bayes_path_replays_exactly(self):
        cfg = small_cfg()
        rep = run_replicate(cfg, RngStream(40).substream(0))
        rng = RngStream(40).substream(0)
        data = generate_dataset(cfg, rng)
        dec = pca_decompose(center_columns(data.X), 1)
        chain = run_chain(dec, data.Y, iters=20, burn_in=10, rng=rng)
        assert rep == evaluate_chain(chain, data.truth)

    def test_generic_bayes_skips_factor_adjustment(self):
        cfg = small_cfg(method="generic_bayes", khat_used=0)
        rep = run_replicate(cfg, RngStream(42).substream(0))
        rng = RngStream(42).substream(0)
        data = generate_dataset(cfg, rng)
        dec = no_factor_decomposition(data.X)
        chain = run_chain(dec, data.Y, iters=20, burn_in=10, rng=rng)
        assert rep == evaluate_chain(chain, data.truth)

    def test_lasso_path_replays_exactly(self):
        cfg = small_cfg(method="fa_lasso")
        rep = run_replicate(cfg, RngStream(41).substream(0))
        rng = RngStream(41).substream(0)
        data = generate_dataset(cfg, rng)
        dec = pca_decompose(center_columns(data.X), 1)
        grid = default_lambda_grid(dec, data.Y, size=cfg.grid_size)
        fit = lasso_cv(dec, data.Y, lambda_grid=grid, folds=5, rng=rng)
        resid = data.Y - dec.idio @ fit.beta_hat - dec.factors @ fit.alpha_hat
        dof = dec.k + fit.selected.size
        sigma2_hat = float(resid @ resid) / max(cfg.n - dof, 1)
        want = evaluate_point_fit(fit.beta_hat, fit.selected, sigma2_hat, data.truth)
        assert rep == want


class TestRunBenchmark:
    def test_single_replicate_reduces_to_one_evaluation(self):
        cfg = small_cfg(replicates=1)
        agg = run_benchmark(cfg, RngStream(50))
        rep = run_replicate(cfg, RngStream(50).substream(0))
        assert agg == rep

    def test_aggregate_is_replicate_mean(self):
        cfg = small_cfg(replicates=3)
        agg = run_benchmark(cfg, RngStream(51))
        reports = [run_replicate(cfg, RngStream(51).substream(i)) for i in range(3)]
        assert agg == aggregate_reports(reports)

    def test_deterministic_given_seed(self):
        cfg = small_cfg(replicates=2)
        assert run_benchmark(cfg, RngStream(52)) == run_benchmark(cfg, RngStream(52))

    def test_failure_names_first_replicate(self):
        # 15 folds over 20 rows is rejected inside the fit
        cfg = small_cfg(n=20, method="fa_lasso", cv_folds=15)
        with pytest.raises(RuntimeError, match="replicate 0 failed"):
            run_benchmark(cfg, RngStream(53))

    def test_failure_names_later_replicate(self, monkeypatch):
        cfg = small_cfg(replicates=4)
        real = fasreg.bench.run_replicate
        calls = []

        def flaky(cfg_, rng_):
            calls.append(None)
            if len(calls) == 3:
                raise ValueError("synthetic fault")
            return real(cfg_, rng_)

        monkeypatch.setattr(fasreg.bench, "run_replicate", flaky)
        with pytest.raises(RuntimeError, match="replicate 2 failed"):
            run_benchmark(cfg, RngStream(54))

    def test_process_pool_matches_sequential(self):
        cfg = small_cfg(replicates=3)
        assert run_benchmark(cfg, RngStream(56)) == run_benchmark(
            cfg, RngStream(56), threads=2
        )

    def test_small_benchmark_recovers_strong_signal(self):
        cfg = small_cfg(replicates=3, beta_star_values=(1.0, 1.0), sigma_star=0.3)
        agg = run_benchmark(cfg, RngStream(55))
        assert agg.sure_screening_rate >= 0.9
        assert agg.beta_l2_error <= 0.5
        assert 1.5 <= agg.avg_model_size <= 4.0


class TestResultWriters:
    def sample_rows(self):
        cfg = small_cfg()
        return [result_row(cfg, EvalReport(0.1, 0.8, 1.0, 2.25, 0.5))]

    def test_row_layout(self):
        row = self.sample_rows()[0]
        assert row == ("factor_adjusted", "fa_bayes", 1, 60, 30, 2, 0.1, 0.8, 1.0, 2.25, 0.5)

    def test_csv_header_and_bytes_stable(self, tmp_path):
        path = tmp_path / "results.csv"
        rows = self.sample_rows()
        write_results_csv(path, rows)
        with open(path, newline="") as fh:
            got = list(csv.reader(fh))
        assert got[0] == list(RESULT_COLUMNS)
        assert got[1][1] == "fa_bayes"
        assert float(got[1][6]) == 0.1
        first = path.read_bytes()
        write_results_csv(path, rows)
        assert path.read_bytes() == first

    def test_summary_document_is_serializable(self):
        doc = results_summary(self.sample_rows())
        record = doc["results"][0]
        assert record["method"] == "fa_bayes"
        assert record["avg_model_size"] == 2.25
        assert json.loads(json.dumps(doc, sort_keys=True)) == doc
