"""Recovery-time estimation from keyword frequencies and survey responses.

The social-media route follows four steps: pick weighted recovery factors
with keyword lists, count matching posts per day, find for each factor the
first post-peak day where counts stay below a threshold fraction of the
maximum for a steady run of days, and aggregate the per-factor recovery
times into a weighted step curve.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import tokenize
from .ingest import DAY_MS, Document

logger = logging.getLogger(__name__)

SURVEY_ASPECTS = (
    "tag", "power", "utilities", "office", "school", "commute",
    "hospital", "retail", "telecom", "internet", "daily_life",
)

_UNIT_TO_DAYS = {
    "hour": 1.0 / 24.0, "hours": 1.0 / 24.0,
    "day": 1.0, "days": 1.0,
    "week": 7.0, "weeks": 7.0,
}


class UnrecoveredError(RuntimeError):
    """No steady sub-threshold window found within the observed series."""

    def __init__(self, factor: str, last_day: int):
        super().__init__(
            f"factor {factor!r} shows no steady sub-threshold window by day {last_day}; "
            "extend the collection window"
        )
        self.factor = factor
        self.last_day = last_day


@dataclass(frozen=True)
class RecoveryFactor:
    name: str
    keywords: frozenset[str]
    weight: float


@dataclass
class RecoveryConfig:
    factors: list[RecoveryFactor]
    threshold_fraction: float = 0.15
    steady_days: int = 3
    bin_days: int = 1

    def __post_init__(self):
        if not 0 < self.threshold_fraction < 1:
            raise ValueError(f"threshold_fraction must be in (0,1), got {self.threshold_fraction}")
        if self.steady_days < 1 or self.bin_days < 1:
            raise ValueError("steady_days and bin_days must be >= 1")
        total = sum(f.weight for f in self.factors)
        if any(f.weight <= 0 for f in self.factors) or abs(total - 1.0) > 1e-9:
            raise ValueError(f"factor weights must be positive and sum to 1 (got {total})")

    def factor(self, name: str) -> RecoveryFactor:
        for f in self.factors:
            if f.name == name:
                return f
        raise KeyError(name)


def default_recovery_config() -> RecoveryConfig:
    keywords = {
        "schools": {"school", "schools", "classes", "students"},
        "roads": {"road", "roads", "traffic", "highway", "bridge"},
        "houses": {"house", "houses", "home", "homes", "apartment"},
        "offices": {"office", "offices", "work", "workplace"},
        "collapse": {"collapse", "collapsed", "rubble", "debris"},
    }
    return RecoveryConfig(
        factors=[RecoveryFactor(name, frozenset(kw), 0.2) for name, kw in keywords.items()]
    )


@dataclass
class FrequencySeries:
    """Daily post counts for one factor, indexed by day offset from t0.

    `start_day` may be negative (pre-event baseline bins); day 0 is the bin
    containing t0.
    """

    factor: str
    t0: int  # milliseconds since epoch
    start_day: int
    counts: list[int]

    def post_event_counts(self) -> list[int]:
        if self.start_day >= 0:
            return self.counts
        return self.counts[-self.start_day:]


@dataclass(frozen=True)
class RecoveryFactorResult:
    factor: str
    t0: int
    t1: int
    t_r_days: float
    threshold_used: float


def build_frequency_series(
    posts: list[Document],
    factor_name: str,
    keywords: frozenset[str] | set[str],
    t0: int,
    config: RecoveryConfig | None = None,
    horizon_day: int | None = None,
) -> FrequencySeries:
    """Bin keyword-matching posts into whole days relative to t0.

    A post counts at most once per factor regardless of repeated keywords.
    `horizon_day` extends the series with trailing zero-count days so that
    factors observed over the same collection share one horizon.
    """
    config = config or default_recovery_config()
    bin_ms = config.bin_days * DAY_MS
    day_counts: dict[int, int] = {}
    any_day = []
    for post in posts:
        day = (post.published_at - t0) // bin_ms
        any_day.append(day)
        text = post.body if post.title is None else f"{post.title} {post.body}"
        if any(tok in keywords for tok in tokenize(text)):
            day_counts[day] = day_counts.get(day, 0) + 1
    if not any_day and horizon_day is None:
        return FrequencySeries(factor_name, t0, 0, [])
    start = min(0, min(any_day, default=0), min(day_counts, default=0))
    end = max(max(any_day, default=0), 0)
    if horizon_day is not None:
        end = max(end, horizon_day)
    counts = [day_counts.get(day, 0) for day in range(start, end + 1)]
    return FrequencySeries(factor_name, t0, start, counts)


def detect_recovery_time(series: FrequencySeries, config: RecoveryConfig | None = None) -> RecoveryFactorResult:
    """Apply the threshold-and-steady rule to a frequency series.

    threshold = threshold_fraction x max(post-event counts); t1 is the start
    of the earliest day d at or after the day of maximum whose next
    steady_days days all stay strictly below the threshold. A series with a
    zero maximum recovers immediately (t_r = 0).
    """
    config = config or default_recovery_config()
    post = series.post_event_counts()
    if not post:
        raise ValueError(f"factor {series.factor!r}: no post-event days observed")
    peak = max(post)
    if peak == 0:
        return RecoveryFactorResult(series.factor, series.t0, series.t0, 0.0, 0.0)
    threshold = config.threshold_fraction * peak
    day_of_max = post.index(peak)
    for day in range(day_of_max, len(post) - config.steady_days + 1):
        window = post[day : day + config.steady_days]
        if all(count < threshold for count in window):
            t1 = series.t0 + day * config.bin_days * DAY_MS
            return RecoveryFactorResult(series.factor, series.t0, t1, float(day * config.bin_days), threshold)
    raise UnrecoveredError(series.factor, len(post) - 1)


@dataclass
class RecoveryCurve:
    """Weighted step function of restored functionality over days."""

    results: list[RecoveryFactorResult]
    weights: dict[str, float]
    aggregate_days: float

    def q_at(self, t_days: float) -> float:
        lost = sum(
            self.weights[r.factor] for r in self.results if r.t_r_days > t_days
        )
        return 1.0 - lost

    def max_t_r(self) -> float:
        return max((r.t_r_days for r in self.results), default=0.0)

    def curve_points(self) -> list[tuple[int, float]]:
        horizon = int(-(-self.max_t_r() // 1))
        return [(day, self.q_at(day)) for day in range(horizon + 1)]


def build_recovery_curve(
    results: list[RecoveryFactorResult], config: RecoveryConfig
) -> RecoveryCurve:
    """Aggregate per-factor recovery times into Q(t) and a weighted mean."""
    by_name = {r.factor: r for r in results}
    missing = [f.name for f in config.factors if f.name not in by_name]
    if missing:
        raise ValueError(f"missing recovery results for factors: {', '.join(missing)}")
    ordered = [by_name[f.name] for f in config.factors]
    weights = {f.name: f.weight for f in config.factors}
    aggregate = sum(weights[r.factor] * r.t_r_days for r in ordered)
    return RecoveryCurve(ordered, weights, aggregate)


def analyze_posts(
    posts: list[Document], t0: int, config: RecoveryConfig | None = None
) -> tuple[list[FrequencySeries], RecoveryCurve]:
    """Full social-media route: series per factor over a shared horizon,
    detection, and the weighted curve."""
    config = config or default_recovery_config()
    horizon = 0
    post_days = [(p.published_at - t0) // (config.bin_days * DAY_MS) for p in posts]
    if post_days:
        horizon = max(max(post_days), 0)
    series = [
        build_frequency_series(posts, f.name, f.keywords, t0, config, horizon_day=horizon)
        for f in config.factors
    ]
    results = [detect_recovery_time(s, config) for s in series]
    return series, build_recovery_curve(results, config)


def aggregate_survey(
    path: str | Path,
    aspect_to_factor: dict[str, str] | None = None,
    t0: int = 0,
) -> tuple[list[RecoveryFactorResult], RecoveryConfig]:
    """Average survey durations per aspect and map them onto factors.

    The CSV has columns aspect, affected, duration, unit (one row per
    respondent-aspect). Unaffected responses contribute zero days. Factor
    recovery time is the mean of its aspects' means; the returned config
    weights the surveyed factors uniformly.
    """
    aspect_to_factor = aspect_to_factor or {a: a for a in SURVEY_ASPECTS}
    durations: dict[str, list[float]] = {}
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row_num, row in enumerate(reader, start=2):
            aspect = (row.get("aspect") or "").strip()
            if aspect not in aspect_to_factor:
                logger.warning("%s: row %d: aspect %r not mapped to a factor, skipped", path, row_num, aspect)
                continue
            affected = (row.get("affected") or "").strip().lower()
            if affected in ("no", "n", "false", "0"):
                days = 0.0
            else:
                unit = (row.get("unit") or "").strip().lower()
                if unit not in _UNIT_TO_DAYS:
                    raise ValueError(f"{path}: row {row_num}: unknown unit {unit!r}")
                days = float(row["duration"]) * _UNIT_TO_DAYS[unit]
            durations.setdefault(aspect, []).append(days)

    for aspect in aspect_to_factor:
        if aspect not in durations:
            logger.warning("%s: aspect %r has zero responses, excluded", path, aspect)

    factor_means: dict[str, list[float]] = {}
    for aspect, values in durations.items():
        factor_means.setdefault(aspect_to_factor[aspect], []).append(sum(values) / len(values))
    results = []
    for factor, means in sorted(factor_means.items()):
        t_r = sum(means) / len(means)
        results.append(
            RecoveryFactorResult(factor, t0, t0 + int(t_r * DAY_MS), t_r, 0.0)
        )
    if not results:
        raise ValueError(f"{path}: no usable survey responses")
    weight = 1.0 / len(results)
    config = RecoveryConfig(
        factors=[RecoveryFactor(r.factor, frozenset(), weight) for r in results]
    )
    return results, config
