import numpy as np
import pytest

from driftelm import (DataError, ExperimentConfig, Penalties, emit_report,
                      emit_sweep_csv, run_experiment, run_setting1,
                      run_setting2, sweep_guides)
from driftelm.benchmark import (DAELM_S_PENALTIES, DAELM_T_PENALTIES,
                                ELM_PENALTIES, TaskResult, feature_map_seeds)

FAST = dict(k_guides=4, hidden_size=30, runs=2, base_seed=5)


class TestConfig:
    def test_defaults_are_the_protocol_values(self):
        cfg = ExperimentConfig()
        assert cfg.hidden_size == 1000
        assert cfg.runs == 10
        assert cfg.activation == "radbas"
        assert DAELM_S_PENALTIES == Penalties(c_s=0.01, c_t=10.0)
        assert DAELM_T_PENALTIES == Penalties(c_s=0.001, c_t=0.001, c_tu=100.0)
        assert cfg.resolved_penalties() == DAELM_S_PENALTIES

    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(method="svm")
        with pytest.raises(ValueError):
            ExperimentConfig(runs=0)
        with pytest.raises(ValueError):
            ExperimentConfig(method="daelm-s", k_guides=0)
        ExperimentConfig(method="elm", k_guides=0)  # plain source-only elm

    def test_daelm_t_uses_two_distinct_seeds(self):
        seeds = feature_map_seeds("daelm-t", 11)
        assert len(seeds) == 2 and seeds[0] != seeds[1]
        assert feature_map_seeds("daelm-s", 11) == (11,)


class TestProtocols:
    def test_setting1_task_pairing(self, small_drift_corpus):
        report = run_setting1(ExperimentConfig(method="elm", **FAST), small_drift_corpus)
        assert [(t.source_batch, t.target_batch) for t in report.tasks] \
            == [(1, k) for k in range(2, 11)]
        assert report.setting == "fixed-source"

    def test_setting2_task_pairing(self, small_drift_corpus):
        report = run_setting2(ExperimentConfig(method="elm", **FAST), small_drift_corpus)
        assert [(t.source_batch, t.target_batch) for t in report.tasks] \
            == [(k - 1, k) for k in range(2, 11)]

    def test_reproducible(self, small_drift_corpus):
        cfg = ExperimentConfig(method="daelm-s", **FAST)
        a = run_setting1(cfg, small_drift_corpus)
        b = run_setting1(cfg, small_drift_corpus)
        assert a == b

    def test_seed_changes_results(self, small_drift_corpus):
        cfg = ExperimentConfig(method="daelm-s", **FAST)
        other = ExperimentConfig(method="daelm-s", k_guides=4, hidden_size=30,
                                 runs=2, base_seed=999)
        a = run_setting1(cfg, small_drift_corpus)
        b = run_setting1(other, small_drift_corpus)
        assert any(x.accuracies != y.accuracies for x, y in zip(a.tasks, b.tasks))

    def test_average_is_mean_of_task_means(self, small_drift_corpus):
        report = run_setting1(ExperimentConfig(method="daelm-t", **FAST),
                              small_drift_corpus)
        recomputed = float(np.mean([np.mean(t.accuracies) for t in report.tasks]))
        assert abs(report.average - recomputed) < 1e-12

    def test_all_methods_run(self, small_drift_corpus):
        for method in ("elm", "daelm-s", "daelm-t"):
            report = run_experiment(
                ExperimentConfig(method=method, **FAST), small_drift_corpus)
            assert len(report.tasks) == 9
            for t in report.tasks:
                assert len(t.accuracies) == 2
                assert all(0.0 <= a <= 100.0 for a in t.accuracies)

    def test_jobs_parallelism_is_deterministic(self, small_drift_corpus):
        serial = run_setting1(ExperimentConfig(method="daelm-s", **FAST),
                              small_drift_corpus)
        threaded = run_setting1(ExperimentConfig(method="daelm-s", jobs=4, **FAST),
                                small_drift_corpus)
        assert serial == threaded

    def test_pair_scaler_scope(self, small_drift_corpus):
        cfg = ExperimentConfig(method="daelm-s", scaler_scope="pair", **FAST)
        report = run_setting1(cfg, small_drift_corpus)
        assert len(report.tasks) == 9

    def test_missing_batch_rejected(self, small_drift_corpus):
        with pytest.raises(DataError, match="missing"):
            run_setting1(ExperimentConfig(method="elm", **FAST),
                         small_drift_corpus[:8])

    def test_oversized_guide_request_rejected(self, small_drift_corpus):
        cfg = ExperimentConfig(method="daelm-s", k_guides=500, hidden_size=20,
                               runs=1, base_seed=0)
        with pytest.raises(DataError, match="k_guides"):
            run_setting1(cfg, small_drift_corpus)

    def test_guides_help_under_drift(self, drift_corpus):
        """On drifted batches the adapted model beats the source-only elm."""
        base = ExperimentConfig(method="elm", k_guides=0, hidden_size=60, runs=2,
                                base_seed=2)
        adapted = ExperimentConfig(method="daelm-s", k_guides=30, hidden_size=60,
                                   runs=2, base_seed=2)
        plain = run_setting1(base, drift_corpus)
        helped = run_setting1(adapted, drift_corpus)
        assert helped.average > plain.average + 10.0

    def test_synthetic_drift_reduces_source_accuracy(self, drift_corpus):
        """Later (more drifted) batches score worse than batch 2 for plain elm."""
        cfg = ExperimentConfig(method="elm", k_guides=0, hidden_size=60, runs=2,
                               base_seed=2)
        report = run_setting1(cfg, drift_corpus)
        assert report.tasks[-1].mean < report.tasks[0].mean - 15.0

    def test_daelm_t_transfers_base_knowledge(self, drift_corpus):
        """The coupled model must not collapse below the source-only baseline.

        Its unlabeled term pulls toward the base classifier's own scores, so
        on mild drift it should track or beat a plain source-trained elm.
        """
        plain = run_setting1(
            ExperimentConfig(method="elm", k_guides=0, hidden_size=60, runs=2,
                             base_seed=2), drift_corpus)
        coupled = run_setting1(
            ExperimentConfig(method="daelm-t", k_guides=10, hidden_size=60, runs=2,
                             base_seed=2), drift_corpus)
        assert coupled.average > plain.average - 5.0
        # early, mildly drifted batches stay far above chance (1/6)
        assert coupled.tasks[0].mean > 60.0


class TestSweep:
    def test_one_report_per_k(self, small_drift_corpus):
        cfg = ExperimentConfig(method="daelm-s", **FAST)
        reports = sweep_guides(cfg, small_drift_corpus, [2, 4, 6])
        assert [r.k_guides for r in reports] == [2, 4, 6]

    def test_empty_ks_rejected(self, small_drift_corpus):
        with pytest.raises(ValueError):
            sweep_guides(ExperimentConfig(**FAST), small_drift_corpus, [])

    def test_sweep_csv_layout(self, small_drift_corpus):
        cfg = ExperimentConfig(method="daelm-s", **FAST)
        reports = sweep_guides(cfg, small_drift_corpus, [2, 4])
        text = emit_sweep_csv(reports)
        lines = text.strip().splitlines()
        assert lines[0] == "k,source,target,run,accuracy"
        assert len(lines) == 1 + 2 * 9 * 2  # ks * tasks * runs


class TestEmitReport:
    def sample_report(self):
        from driftelm import ExperimentReport
        tasks = (TaskResult(1, 2, (80.0, 90.0)), TaskResult(1, 3, (70.0, 72.5)))
        return ExperimentReport("daelm-s", "fixed-source", 30, tasks)

    def test_empty_report_csv_is_header_only(self):
        from driftelm import ExperimentReport
        empty = ExperimentReport("elm", "fixed-source", 0, ())
        assert emit_report(empty, "csv") == "source,target,run,accuracy\n"

    def test_csv_rows(self):
        text = emit_report(self.sample_report(), "csv")
        lines = text.strip().splitlines()
        assert lines[0] == "source,target,run,accuracy"
        assert lines[1] == "1,2,0,80.0"
        assert len(lines) == 5

    def test_single_run_single_task(self):
        from driftelm import ExperimentReport
        report = ExperimentReport("elm", "fixed-source", 0, (TaskResult(1, 2, (55.0,)),))
        assert emit_report(report, "csv").strip().splitlines()[1:] == ["1,2,0,55.0"]

    def test_jsonl_record_per_run(self):
        import json
        lines = emit_report(self.sample_report(), "jsonl").strip().splitlines()
        assert len(lines) == 4
        rec = json.loads(lines[0])
        assert rec == {"method": "daelm-s(30)", "setting": "fixed-source",
                       "source": 1, "target": 2, "run": 0, "accuracy": 80.0}

    def test_table_layout(self):
        text = emit_report(self.sample_report(), "table")
        header, row = text.strip().splitlines()
        assert "1->2" in header and "1->3" in header and "average" in header
        assert row.startswith("daelm-s(30)")
        assert "85.00" in row and "71.25" in row and "78.12" in row

    def test_reemission_is_identical(self):
        report = self.sample_report()
        for fmt in ("table", "csv", "jsonl"):
            assert emit_report(report, fmt) == emit_report(report, fmt)

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            emit_report(self.sample_report(), "xml")
