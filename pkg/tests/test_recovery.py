import itertools

import pytest
from hypothesis import given, settings, strategies as st

from quakebrief.ingest import DAY_MS, Document
from quakebrief.recovery import (
    FrequencySeries,
    RecoveryConfig,
    RecoveryFactor,
    RecoveryFactorResult,
    UnrecoveredError,
    aggregate_survey,
    analyze_posts,
    build_frequency_series,
    build_recovery_curve,
    default_recovery_config,
    detect_recovery_time,
)


def series(counts, factor="schools", start_day=0, t0=0):
    return FrequencySeries(factor, t0, start_day, list(counts))


def scan_oracle(counts, fraction=0.15, steady=3):
    """Independent linear-scan reimplementation of the detection rule."""
    if not counts:
        return None
    peak = max(counts)
    if peak == 0:
        return 0
    threshold = fraction * peak
    start = counts.index(peak)
    for d in range(start, len(counts) - steady + 1):
        if all(c < threshold for c in counts[d : d + steady]):
            return d
    return "unrecovered"


def post(day, body, url):
    return Document(url, "ev", "social", url, day * DAY_MS + 1000, "zh", None, body)


class TestBuildFrequencySeries:
    keywords = frozenset({"school", "schools"})

    def test_binning(self):
        posts = [post(1, "school closed one", "u1"), post(1, "school closed two", "u2"),
                 post(1, "school closed three", "u3"), post(2, "the school again", "u4")]
        out = build_frequency_series(posts, "schools", self.keywords, t0=0)
        assert out.start_day == 0
        assert out.counts == [0, 3, 1]

    def test_post_counts_once_per_factor(self):
        posts = [post(0, "school school school", "u1")]
        out = build_frequency_series(posts, "schools", self.keywords, t0=0)
        assert out.counts == [1]

    def test_pre_event_posts_in_negative_bins(self):
        posts = [post(-2, "school open as usual", "u1"), post(1, "school closed", "u2")]
        out = build_frequency_series(posts, "schools", self.keywords, t0=0)
        assert out.start_day == -2
        assert out.counts == [1, 0, 0, 1]
        assert out.post_event_counts() == [0, 1]

    def test_no_posts_gives_empty_series(self):
        out = build_frequency_series([], "schools", self.keywords, t0=0)
        assert out.counts == []

    def test_horizon_extends_with_zeros(self):
        posts = [post(0, "school closed", "u1")]
        out = build_frequency_series(posts, "schools", self.keywords, t0=0, horizon_day=4)
        assert out.counts == [1, 0, 0, 0, 0]


class TestDetectRecoveryTime:
    def test_derived_example(self):
        result = detect_recovery_time(series([5, 100, 60, 30, 10, 8, 7]))
        assert result.threshold_used == pytest.approx(15.0)
        assert result.t_r_days == 4.0
        assert scan_oracle([5, 100, 60, 30, 10, 8, 7]) == 4

    def test_all_zero_counts(self):
        result = detect_recovery_time(series([0, 0, 0]))
        assert result.t_r_days == 0.0
        assert result.t1 == result.t0

    def test_never_steady_raises(self):
        with pytest.raises(UnrecoveredError) as err:
            detect_recovery_time(series([0, 50, 40, 40, 40]))
        assert err.value.last_day == 4

    def test_pre_peak_quiet_days_do_not_trigger(self):
        # zeros before the surge must not count as recovery
        result = detect_recovery_time(series([0, 0, 0, 100, 1, 1, 1]))
        assert result.t_r_days == 4.0

    def test_empty_post_event_rejected(self):
        with pytest.raises(ValueError):
            detect_recovery_time(series([], start_day=0))

    def test_t1_timestamp_matches_day(self):
        result = detect_recovery_time(series([5, 100, 60, 30, 10, 8, 7], t0=123 * DAY_MS))
        assert result.t1 - result.t0 == 4 * DAY_MS

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.integers(min_value=0, max_value=5), min_size=1, max_size=10))
    def test_matches_scan_oracle(self, counts):
        expected = scan_oracle(counts)
        if expected == "unrecovered":
            with pytest.raises(UnrecoveredError):
                detect_recovery_time(series(counts))
        else:
            assert detect_recovery_time(series(counts)).t_r_days == float(expected)

    @given(st.lists(st.integers(min_value=0, max_value=5), min_size=1, max_size=10),
           st.integers(min_value=1, max_value=4))
    def test_monotone_in_steady_days(self, counts, steady):
        def t_r(sd):
            cfg = RecoveryConfig(default_recovery_config().factors, steady_days=sd)
            try:
                return detect_recovery_time(series(counts), cfg).t_r_days
            except UnrecoveredError:
                return float("inf")

        assert t_r(steady) <= t_r(steady + 1)

    @given(st.lists(st.integers(min_value=0, max_value=5), min_size=1, max_size=10),
           st.integers(min_value=2, max_value=7))
    def test_scale_invariant(self, counts, scale):
        def outcome(values):
            try:
                return detect_recovery_time(series(values)).t_r_days
            except UnrecoveredError:
                return "unrecovered"

        assert outcome(counts) == outcome([c * scale for c in counts])


class TestRecoveryCurve:
    def make_results(self, t_rs, names=None):
        names = names or [f.name for f in default_recovery_config().factors]
        return [RecoveryFactorResult(n, 0, int(t * DAY_MS), float(t), 1.0)
                for n, t in zip(names, t_rs)]

    def test_weighted_mean_example(self):
        curve = build_recovery_curve(self.make_results([2, 4, 4, 6, 4]), default_recovery_config())
        assert curve.aggregate_days == pytest.approx(4.0)

    def test_all_zero(self):
        curve = build_recovery_curve(self.make_results([0, 0, 0, 0, 0]), default_recovery_config())
        assert curve.aggregate_days == 0.0
        assert curve.q_at(0) == 1.0

    def test_missing_factor_rejected(self):
        with pytest.raises(ValueError, match="collapse"):
            build_recovery_curve(self.make_results([1, 2, 3, 4])[:4], default_recovery_config())

    def test_q_invariants(self):
        curve = build_recovery_curve(self.make_results([2, 4, 4, 6, 4]), default_recovery_config())
        assert curve.q_at(0) == pytest.approx(1.0 - 1.0)  # every factor still down
        values = [curve.q_at(t / 2) for t in range(0, 16)]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))  # non-decreasing
        assert curve.q_at(curve.max_t_r()) == pytest.approx(1.0)
        assert min(r.t_r_days for r in curve.results) <= curve.aggregate_days <= curve.max_t_r()

    def test_q0_equals_one_minus_impacted_weight(self):
        curve = build_recovery_curve(self.make_results([0, 3, 0, 2, 1]), default_recovery_config())
        assert curve.q_at(0) == pytest.approx(1.0 - 0.6)

    def test_curve_points_reach_one(self):
        curve = build_recovery_curve(self.make_results([2, 4, 4, 6, 4]), default_recovery_config())
        points = dict(curve.curve_points())
        assert points[6] == pytest.approx(1.0)


class TestAnalyzePosts:
    def test_shared_horizon_lets_quiet_factors_recover(self):
        posts = (
            [post(0, f"school closed number {i}", f"s{i}") for i in range(10)]
            + [post(d, f"road blocked again {d}-{i}", f"r{d}-{i}")
               for d in range(8) for i in range(max(0, 8 - d))]
        )
        cfg = RecoveryConfig([
            RecoveryFactor("schools", frozenset({"school"}), 0.5),
            RecoveryFactor("roads", frozenset({"road"}), 0.5),
        ])
        series_list, curve = analyze_posts(posts, t0=0, config=cfg)
        assert {s.factor for s in series_list} == {"schools", "roads"}
        assert curve.aggregate_days >= 0.0


class TestAggregateSurvey:
    def write(self, tmp_path, rows):
        path = tmp_path / "survey.csv"
        lines = ["aspect,affected,duration,unit"] + [",".join(str(c) for c in r) for r in rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def test_mean_days(self, tmp_path):
        path = self.write(tmp_path, [("power", "yes", 2, "days"), ("power", "yes", 4, "days")])
        results, config = aggregate_survey(path)
        assert results[0].t_r_days == pytest.approx(3.0)

    def test_hours_converted(self, tmp_path):
        path = self.write(tmp_path, [("power", "yes", 48, "hours")])
        results, _ = aggregate_survey(path)
        assert results[0].t_r_days == pytest.approx(2.0)

    def test_weeks_converted(self, tmp_path):
        path = self.write(tmp_path, [("school", "yes", 2, "weeks")])
        results, _ = aggregate_survey(path)
        assert results[0].t_r_days == pytest.approx(14.0)

    def test_unaffected_counts_zero(self, tmp_path):
        path = self.write(tmp_path, [("power", "no", "", ""), ("power", "yes", 4, "days")])
        results, _ = aggregate_survey(path)
        assert results[0].t_r_days == pytest.approx(2.0)

    def test_unknown_unit_reports_row(self, tmp_path):
        path = self.write(tmp_path, [("power", "yes", 2, "fortnights")])
        with pytest.raises(ValueError, match="row 2"):
            aggregate_survey(path)

    def test_aspect_mapping_merges(self, tmp_path):
        path = self.write(tmp_path, [("power", "yes", 2, "days"), ("utilities", "yes", 4, "days")])
        results, config = aggregate_survey(path, aspect_to_factor={"power": "lifelines", "utilities": "lifelines"})
        assert len(results) == 1
        assert results[0].factor == "lifelines"
        assert results[0].t_r_days == pytest.approx(3.0)

    def test_survey_results_feed_curve(self, tmp_path):
        path = self.write(tmp_path, [("power", "yes", 2, "days"), ("school", "yes", 4, "days")])
        results, config = aggregate_survey(path)
        curve = build_recovery_curve(results, config)
        assert curve.aggregate_days == pytest.approx(3.0)

    def test_bundled_fixture_loads(self):
        from quakebrief.config import bundled_data_dir

        results, config = aggregate_survey(bundled_data_dir() / "yaan2013" / "survey.csv")
        assert len(results) == 11
        curve = build_recovery_curve(results, config)
        assert curve.aggregate_days > 0


class TestRecoveryConfig:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            RecoveryConfig([RecoveryFactor("a", frozenset(), 0.5),
                            RecoveryFactor("b", frozenset(), 0.6)])

    def test_threshold_range(self):
        with pytest.raises(ValueError):
            RecoveryConfig(default_recovery_config().factors, threshold_fraction=1.0)
