"""Unit tests for priors, sweep configs, execution, and report formats."""

import json

import numpy as np
import pytest

import pertmit as pm
from pertmit.harness import override_seed


def _tiny_config(**overrides):
    base = dict(
        n_values=(3, 4),
        q_values=(0.05, 0.2),
        w_values=(0, 1, 2),
        method="zero_truncated",
        prior=pm.PriorSpec(kind="uniform"),
        response_model="relaxation_only",
        seed=11,
        repetitions=1,
    )
    base.update(overrides)
    return pm.ExperimentConfig(**base)


def _strip_time(report):
    payload = report.to_dict()
    payload.pop("time_ms")
    return payload


class TestPriorSpec:
    def test_unknown_kind_rejected(self):
        with pytest.raises(pm.ConfigError):
            pm.PriorSpec(kind="dirichlet")

    def test_sigma_guard(self):
        with pytest.raises(pm.ConfigError):
            pm.PriorSpec(kind="gaussian_overflow", sigma=0.0)

    def test_decay_label_suffix(self):
        assert pm.PriorSpec(kind="gaussian_overflow", decay=True).label == (
            "gaussian_overflow_decay"
        )
        assert pm.PriorSpec(kind="uniform", decay=True).label == "uniform"
        assert pm.PriorSpec(kind="truncated_gaussian").label == "truncated_gaussian"


class TestBuildPrior:
    def test_uniform(self):
        prior = pm.build_prior(pm.PriorSpec(kind="uniform"), 3)
        np.testing.assert_allclose(prior.values, np.full(8, 0.125))

    def test_point_mass(self):
        prior = pm.build_prior(pm.PriorSpec(kind="point_mass", target=5), 3)
        expected = np.zeros(8)
        expected[5] = 1.0
        np.testing.assert_array_equal(prior.values, expected)

    def test_point_mass_target_range(self):
        with pytest.raises(pm.ConfigError):
            pm.build_prior(pm.PriorSpec(kind="point_mass", target=8), 3)

    def test_random_uniform_seeded(self):
        spec = pm.PriorSpec(kind="random_uniform", seed=5)
        a = pm.build_prior(spec, 4)
        b = pm.build_prior(spec, 4)
        np.testing.assert_array_equal(a.values, b.values)
        assert a.values.sum() == pytest.approx(1.0)
        assert np.all(a.values > 0)

    def test_random_uniform_needs_seed_or_generator(self):
        with pytest.raises(pm.ConfigError):
            pm.build_prior(pm.PriorSpec(kind="random_uniform"), 3)
        rng = np.random.default_rng(0)
        prior = pm.build_prior(pm.PriorSpec(kind="random_uniform"), 3, rng=rng)
        assert prior.values.sum() == pytest.approx(1.0)

    def test_gaussian_overflow_peaks_at_half_range(self):
        # positive exponent: mass concentrates at the wrap-around point
        prior = pm.build_prior(pm.PriorSpec(kind="gaussian_overflow"), 6)
        assert int(np.argmax(prior.values)) == 32
        assert prior.values.sum() == pytest.approx(1.0)

    def test_gaussian_overflow_decay_peaks_at_zero(self):
        prior = pm.build_prior(pm.PriorSpec(kind="gaussian_overflow", decay=True), 6)
        assert int(np.argmax(prior.values)) == 0

    def test_truncated_gaussian_peaks_at_zero(self):
        prior = pm.build_prior(pm.PriorSpec(kind="truncated_gaussian"), 6)
        assert int(np.argmax(prior.values)) == 0

    def test_truncated_gaussian_decay_peaks_at_center(self):
        prior = pm.build_prior(pm.PriorSpec(kind="truncated_gaussian", decay=True), 6)
        assert int(np.argmax(prior.values)) == 32


class TestExperimentConfig:
    def test_accepts_valid_grid(self):
        cfg = _tiny_config()
        assert cfg.n_values == (3, 4)
        assert cfg.q_values == (0.05, 0.2)

    def test_unknown_method_and_model(self):
        with pytest.raises(pm.ConfigError):
            _tiny_config(method="bayesian")
        with pytest.raises(pm.ConfigError):
            _tiny_config(response_model="correlated")

    def test_rate_range_depends_on_model(self):
        with pytest.raises(pm.ConfigError):
            _tiny_config(q_values=(0.5,))  # relaxation needs q < 0.5
        cfg = _tiny_config(q_values=(0.5,), response_model="random_tensor")
        assert cfg.q_values == (0.5,)

    def test_order_floor_depends_on_method(self):
        cfg = _tiny_config(w_values=(0,))
        assert cfg.w_values == (0,)
        with pytest.raises(pm.ConfigError):
            _tiny_config(method="full_neumann", w_values=(0, 1))

    def test_order_capped_by_smallest_n(self):
        with pytest.raises(pm.ConfigError):
            _tiny_config(w_values=(4,))  # min(n) is 3

    def test_qubit_cap(self):
        with pytest.raises(pm.ConfigError):
            _tiny_config(n_values=(16,))

    def test_seed_and_repetition_guards(self):
        with pytest.raises(pm.ConfigError):
            _tiny_config(seed=-1)
        with pytest.raises(pm.ConfigError):
            _tiny_config(repetitions=0)

    def test_target_checked_against_smallest_n(self):
        with pytest.raises(pm.ConfigError):
            _tiny_config(method="single_target", w_values=(1,), target=8)

    def test_json_roundtrip(self, tmp_path):
        cfg = _tiny_config(prior=pm.PriorSpec(kind="random_uniform", seed=3))
        path = tmp_path / "config.json"
        pm.save_config(cfg, path)
        assert pm.load_config(path) == cfg

    def test_unknown_keys_rejected(self, tmp_path):
        payload = _tiny_config().to_dict()
        payload["shots"] = 1000
        path = tmp_path / "config.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(pm.ConfigError):
            pm.load_config(path)

    def test_schema_version_enforced(self, tmp_path):
        payload = _tiny_config().to_dict()
        payload["schema"] = 2
        path = tmp_path / "config.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(pm.ConfigError):
            pm.load_config(path)

    def test_invalid_json_is_config_error(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{not json")
        with pytest.raises(pm.ConfigError):
            pm.load_config(path)

    def test_override_seed(self):
        cfg = _tiny_config()
        assert override_seed(cfg, None) is cfg
        assert override_seed(cfg, 99).seed == 99


class TestRunSweep:
    def test_row_count_and_ordering(self):
        cfg = _tiny_config(repetitions=2)
        reports = pm.run_sweep(cfg)
        assert len(reports) == 2 * 2 * 2 * 3  # n x q x rep x w
        keys = [
            (r.n, cfg.q_values.index(r.q), r.rep, r.w) for r in reports
        ]
        assert keys == sorted(keys)

    def test_deterministic_up_to_timing(self):
        cfg = _tiny_config(
            method="full_neumann",
            w_values=(1, 2),
            response_model="random_tensor",
            prior=pm.PriorSpec(kind="random_uniform"),
            repetitions=2,
        )
        first = [_strip_time(r) for r in pm.run_sweep(cfg)]
        second = [_strip_time(r) for r in pm.run_sweep(cfg)]
        assert first == second

    def test_parallel_matches_serial(self):
        cfg = _tiny_config(repetitions=2)
        serial = [_strip_time(r) for r in pm.run_sweep(cfg, parallel=1)]
        fanned = [_strip_time(r) for r in pm.run_sweep(cfg, parallel=2)]
        assert serial == fanned

    def test_zero_truncated_fields(self):
        reports = pm.run_sweep(_tiny_config())
        for r in reports:
            assert r.method == "zero_truncated"
            assert r.bound == pytest.approx(pm.truncation_bound(r.q, r.w))
            assert r.norm_s is None
            assert r.d_mitigated <= r.bound
            assert r.time_ms >= 0.0

    def test_random_tensor_zero_uses_loose_guide(self):
        cfg = _tiny_config(response_model="random_tensor", w_values=(1, 2))
        for r in pm.run_sweep(cfg):
            assert r.bound == pytest.approx(pm.approximate_model_guide(r.q, r.w))

    def test_full_neumann_fields_and_divergence_flag(self):
        cfg = pm.ExperimentConfig(
            n_values=(8,),
            q_values=(0.02, 0.5),
            w_values=(1, 2),
            method="full_neumann",
            prior=pm.PriorSpec(kind="random_uniform"),
            response_model="random_tensor",
            seed=5,
        )
        reports = pm.run_sweep(cfg)
        assert any(r.norm_s >= 1.0 for r in reports)  # q = 0.5 leaves the regime
        assert any(r.norm_s < 1.0 for r in reports)
        for r in reports:
            assert r.bound == pytest.approx(2.0 * r.q ** (r.w + 1))
            assert ("diverged" in r.flags) == (r.norm_s >= 1.0)

    def test_full_direct_has_no_bound(self):
        cfg = _tiny_config(method="full_direct", w_values=(1, 2))
        for r in pm.run_sweep(cfg):
            assert r.bound is None
            assert r.norm_s is None
            assert "lstsq" not in r.flags

    def test_single_target_tracks_one_entry(self):
        cfg = _tiny_config(
            method="single_target", w_values=(1, 2), target=3,
            response_model="random_tensor",
        )
        reports = pm.run_sweep(cfg)
        for r in reports:
            assert r.bound is None
            assert r.norm_s is not None
            assert r.d_mitigated >= 0.0

    def test_failing_cells_become_error_rows(self):
        # point mass target beyond 2^n fails at build time, cell by cell
        cfg = _tiny_config(prior=pm.PriorSpec(kind="point_mass", target=12), n_values=(3,))
        reports = pm.run_sweep(cfg)
        assert len(reports) == 2 * 3
        for r in reports:
            assert r.flags == "error:ConfigError"
            assert r.d_mitigated is None


class TestReportFormats:
    def test_report_dict_roundtrip(self):
        report = pm.MitigationReport(
            n=4, q=0.1, w=2, method="full_neumann", prior="uniform", seed=7, rep=0,
            d_uncorrected=0.2, d_mitigated=0.01, bound=0.002, norm_s=0.4,
            time_ms=1.5, flags="",
        )
        assert pm.MitigationReport.from_dict(report.to_dict()) == report

    def test_none_fields_roundtrip_through_empty_strings(self):
        report = pm.MitigationReport(
            n=4, q=0.1, w=2, method="full_direct", prior="uniform", seed=7, rep=0,
            d_uncorrected=0.2, d_mitigated=0.01, bound=None, norm_s=None,
            time_ms=None, flags="lstsq",
        )
        payload = {k: ("" if v is None else v) for k, v in report.to_dict().items()}
        assert pm.MitigationReport.from_dict(payload) == report

    def test_csv_schema(self):
        reports = pm.run_sweep(_tiny_config())
        text = pm.reports_text(reports, "csv")
        lines = text.strip().split("\n")
        assert lines[0] == ",".join(pm.CSV_COLUMNS)
        assert len(lines) == len(reports) + 1
        # float cells are full-precision reprs; inapplicable cells are empty
        first = lines[1].split(",")
        assert first[pm.CSV_COLUMNS.index("q")] == repr(0.05)
        assert first[pm.CSV_COLUMNS.index("norm_S")] == ""

    def test_csv_deterministic_excluding_time(self):
        cfg = _tiny_config()
        time_col = pm.CSV_COLUMNS.index("time_ms")

        def stripped(text):
            return [
                ",".join(v for i, v in enumerate(line.split(",")) if i != time_col)
                for line in text.strip().split("\n")
            ]

        a = pm.reports_text(pm.run_sweep(cfg), "csv")
        b = pm.reports_text(pm.run_sweep(cfg), "csv")
        assert stripped(a) == stripped(b)

    def test_json_roundtrip_through_file(self, tmp_path):
        reports = pm.run_sweep(_tiny_config())
        path = tmp_path / "reports.json"
        pm.emit(reports, "json", path)
        loaded = pm.load_reports_json(path)
        assert [_strip_time(r) for r in loaded] == [_strip_time(r) for r in reports]

    def test_unknown_format_rejected(self):
        with pytest.raises(pm.ConfigError):
            pm.reports_text([], "yaml")

    def test_emit_wraps_unwritable_paths(self, tmp_path):
        with pytest.raises(OSError):
            pm.emit([], "csv", tmp_path / "missing" / "out.csv")


class TestAuditBounds:
    def test_clean_sweep_has_no_violations(self):
        reports = pm.run_sweep(_tiny_config())
        violations, audited = pm.audit_bounds(reports)
        assert violations == []
        assert audited == len(reports)

    def test_violating_row_is_caught(self):
        bad = pm.MitigationReport(
            n=3, q=0.1, w=1, method="zero_truncated", prior="uniform", seed=0, rep=0,
            d_uncorrected=0.5, d_mitigated=0.2, bound=0.04, norm_s=None,
            time_ms=None, flags="",
        )
        violations, audited = pm.audit_bounds([bad])
        assert audited == 1
        assert violations == [bad]

    def test_unbounded_rows_are_skipped(self):
        row = pm.MitigationReport(
            n=3, q=0.1, w=1, method="full_direct", prior="uniform", seed=0, rep=0,
            d_uncorrected=0.5, d_mitigated=0.2, bound=None, norm_s=None,
            time_ms=None, flags="",
        )
        violations, audited = pm.audit_bounds([row])
        assert (violations, audited) == ([], 0)
