"""Configuration-driven experiment runner.

Executes the full pipeline (load/synthesize -> split -> priors -> optional
defense -> attack -> scoring) deterministically under the configured seed,
and persists a JSON report plus a per-user CSV suitable for CDF plotting.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import attacks, mechanisms, metrics, pipeline, priors, triplets
from .config import SCHEMA, RunConfig, parse_value, validate_config
from .errors import ConfigError, DataError, StageError
from .model import (
    NULL_INDEX,
    AggregateSeries,
    GroundTruthMatrix,
    NoisyAggregateSeries,
    TimeFrame,
    aggregate,
    aggregate_profile,
    build_profile,
    normalize_columns,
)

log = logging.getLogger(__name__)


@dataclass
class AttackReport:
    """Everything a run produced; serializable to report.json/users.csv."""

    config: dict[str, str]
    goal: str
    metric: str
    errors: list[metrics.ErrorReport]
    outcomes: list[metrics.PrivacyOutcome]
    per_slot_prior: np.ndarray
    per_slot_posterior: np.ndarray
    summary: dict
    defense: dict | None

    def to_dict(self) -> dict:
        return {
            "config": dict(sorted(self.config.items())),
            "goal": self.goal,
            "metric": self.metric,
            "users": [
                {
                    "user_id": err.user_id,
                    "prior_error": err.prior_error,
                    "posterior_error": err.posterior_error,
                    "pl": outcome.pl,
                    "pg": outcome.pg,
                }
                for err, outcome in zip(self.errors, self.outcomes)
            ],
            "summary": self.summary,
            "per_slot": {
                "prior": [float(v) for v in self.per_slot_prior],
                "posterior": [float(v) for v in self.per_slot_posterior],
            },
            "defense": self.defense,
        }


@contextmanager
def _stage(name: str):
    try:
        yield
    except (ConfigError, StageError):
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _load_users(cfg: RunConfig) -> tuple[list[GroundTruthMatrix], TimeFrame]:
    source = cfg["dataset.source"]
    epoch_seconds = cfg["timeframe.epoch_seconds"]
    obs_weeks = cfg["split.observation_weeks"]
    inf_weeks = cfg["split.inference_weeks"]

    if source == "synth":
        if epoch_seconds != 3600:
            raise ConfigError("synthetic corpora are hourly; timeframe.epoch_seconds must be 3600")
        spec = pipeline.SynthModelSpec(
            model=cfg["synth.model"],
            user_count=cfg["synth.users"],
            roi_count=cfg["synth.rois"],
            weeks=cfg["synth.weeks"],
            regularity=cfg["synth.regularity"],
            seed=cfg.get("synth.seed", cfg.seed),
        )
        timeframe = TimeFrame.from_weeks(spec.weeks, obs_weeks, inf_weeks, epoch_seconds)
        return pipeline.synthesize(spec), timeframe

    timeframe = TimeFrame.from_weeks(cfg["timeframe.weeks"], obs_weeks, inf_weeks, epoch_seconds)
    if source == "ingest":
        if cfg["ingest.format"] == "points":
            grid = pipeline.GridSpec(
                min_lat=cfg["grid.min_lat"],
                max_lat=cfg["grid.max_lat"],
                min_lon=cfg["grid.min_lon"],
                max_lon=cfg["grid.max_lon"],
                rows=cfg["grid.rows"],
                cols=cfg["grid.cols"],
            )
            records = pipeline.read_point_csv(cfg["ingest.path"])
            result = pipeline.ingest(
                records, timeframe, grid.roi_count, grid=grid,
                start_timestamp=cfg.get("ingest.start", 0),
            )
        else:
            station_map = pipeline.read_station_map(cfg["ingest.stations"])
            records = pipeline.read_trip_csv(cfg["ingest.path"])
            result = pipeline.ingest(
                records, timeframe, cfg["ingest.rois"], station_map=station_map,
                start_timestamp=cfg.get("ingest.start", 0),
            )
        if not result.users:
            raise DataError("ingest produced no users")
        return result.users, timeframe

    matrices = triplets.read_triplets(
        cfg["triplets.path"], cfg["triplets.rois"], timeframe.total_epochs, binary=True
    )
    if not matrices:
        raise DataError("triplet file holds no users")
    users = [GroundTruthMatrix(uid, cells) for uid, cells in sorted(matrices.items())]
    return users, timeframe


def _build_prior(
    gt: GroundTruthMatrix, timeframe: TimeFrame, cfg: RunConfig
) -> priors.PriorMatrix:
    kind = cfg["prior.kind"]
    if kind == "freq_roi":
        return priors.freq_roi(gt, timeframe)
    seas = priors.SeasonalitySpec(cfg["prior.cycle"])
    if kind == "roi_seas":
        return priors.roi_seasonality(gt, timeframe, seas)
    if kind == "time_seas":
        return priors.time_seasonality(gt, timeframe, seas)
    return priors.last_season(gt, timeframe, seas)


def _probabilistic(prior: priors.PriorMatrix) -> priors.PriorMatrix:
    """The distribution form of a prior (assignment columns are normalized)."""
    if prior.kind == priors.PROBABILISTIC:
        return prior
    cells = normalize_columns(prior.cells, zero_to="null")
    return priors.PriorMatrix(
        prior.user_id, priors.PROBABILISTIC, cells, prior.observation_total
    )


def _project_cells(cells: np.ndarray, mode: str, delta: float) -> np.ndarray:
    if mode == "pop":
        return (cells >= delta).astype(np.float64)
    return np.ceil(cells)  # all


def _prior_estimates(
    user_priors: list[priors.PriorMatrix], cfg: RunConfig
) -> list[np.ndarray]:
    """Baseline (no-aggregate) estimates in the representation the goal scores."""
    goal = cfg["goal"]
    project = cfg["prior.project"]
    estimates = []
    for prior in user_priors:
        if goal == "profiling":
            estimates.append(_probabilistic(prior).cells)
        elif prior.kind == priors.ASSIGNMENT:
            estimates.append(prior.cells)
        elif project == "pop":
            estimates.append(priors.popular_rois(prior, cfg["prior.delta"]).cells)
        else:
            estimates.append(priors.all_rois(prior).cells)
    return estimates


def _attack_estimates(
    user_priors: list[priors.PriorMatrix],
    prior_estimates: list[np.ndarray],
    release: AggregateSeries | NoisyAggregateSeries,
    ordering: attacks.UserOrdering,
    cfg: RunConfig,
) -> list[np.ndarray]:
    """Posterior estimates after exploiting the (possibly noisy) release."""
    goal = cfg["goal"]
    attack = cfg["attack.kind"]
    if attack == "none":
        return prior_estimates

    if attack == "bayes":
        profile = aggregate_profile(release)
        posteriors = [attacks.bayes(_probabilistic(p), profile) for p in user_priors]
        if goal == "profiling":
            return [post.cells for post in posteriors]
        return [
            _project_cells(post.cells, cfg["attack.project"], cfg["prior.delta"])
            for post in posteriors
        ]

    if isinstance(release, NoisyAggregateSeries):
        counts = attacks.sanitize_counts(release, len(user_priors))
    else:
        counts = release
    strategy = attacks.max_roi if attack == "max_roi" else attacks.max_user
    posteriors = strategy(user_priors, counts, ordering)
    if goal == "profiling":
        return [attacks.assignment_to_profile(post).cells for post in posteriors]
    return [post.cells for post in posteriors]


def _zero_null_row(cells: np.ndarray) -> np.ndarray:
    out = np.array(cells)
    out[NULL_INDEX, :] = 0
    return out


def _released(agg: AggregateSeries, include_null: bool) -> AggregateSeries:
    if include_null:
        return agg
    return AggregateSeries(cells=_zero_null_row(agg.cells), user_count=agg.user_count)


def _noise_spec(cfg: RunConfig, users, window: range) -> mechanisms.NoiseSpec:
    mechanism = cfg["defense.mechanism"]
    kwargs = {"mechanism": mechanism, "epsilon": cfg["defense.epsilon"], "seed": cfg.seed}
    if mechanism == "scm":
        kwargs["scale_rule"] = cfg["defense.scale_rule"]
        if cfg["defense.scale_rule"] == "sensitivity":
            kwargs["delta_sensitivity"] = mechanisms.max_user_contribution(users, window)
    elif mechanism == "fpa":
        kwargs["k"] = cfg["defense.k"]
    else:
        kwargs["p"] = cfg["defense.p"]
    return mechanisms.NoiseSpec(**kwargs)


def _mean_row_mre(raw: np.ndarray, noisy: np.ndarray) -> float:
    """Average per-ROI MRE, skipping rows whose raw series is all zero."""
    rows = [
        metrics.mre(raw[r], noisy[r])
        for r in range(raw.shape[0])
        if raw[r].sum() > 0
    ]
    if not rows:
        raise DataError("released aggregate is entirely zero")
    return float(np.mean(rows))


def _quantile_cdf(values: np.ndarray) -> list[list[float]]:
    """CDF samples at the 1..100% quantiles of the user population."""
    fractions = np.arange(1, 101) / 100.0
    points = np.quantile(values, fractions)
    return [[float(v), float(f)] for v, f in zip(points, fractions)]


def run(cfg: RunConfig) -> AttackReport:
    """Execute one configured experiment and assemble its report."""
    goal = cfg["goal"]
    metric = metrics.JS_PROFILE if goal == "profiling" else metrics.F1_LOCALIZATION

    with _stage("data"):
        users, timeframe = _load_users(cfg)
    with _stage("filter"):
        minimum = cfg["filter.min_inference_activity"]
        if minimum > 0:
            users = [
                u for u in users if u.report_count(timeframe.inference_window) >= minimum
            ]
        if not users:
            raise DataError("no users left after the activity filter")
    with _stage("prior"):
        user_priors = [_build_prior(u, timeframe, cfg) for u in users]
        prior_est = _prior_estimates(user_priors, cfg)
    with _stage("aggregate"):
        window = timeframe.inference_window
        release = _released(aggregate(users, window), cfg["aggregate.include_null"])
        ordering = attacks.UserOrdering.from_ground_truths(users, timeframe)

    defense_info = None
    noisy_release = None
    with _stage("defense"):
        if cfg["defense.mechanism"] != "none":
            spec = _noise_spec(cfg, users, window)
            if spec.mechanism == mechanisms.SCM:
                noisy, account = mechanisms.scm_perturb(release, spec)
            elif spec.mechanism == mechanisms.FPA:
                noisy, account = mechanisms.fpa_perturb(release, spec)
            else:
                noisy, account = mechanisms.rr_perturb_and_estimate(users, window, spec)
            if not cfg["aggregate.include_null"]:
                noisy = NoisyAggregateSeries(
                    cells=_zero_null_row(noisy.cells),
                    provenance=noisy.provenance,
                    user_count=noisy.user_count,
                )
            noisy_release = noisy
            defense_info = {
                "mechanism": spec.mechanism,
                "epsilon": spec.epsilon,
                "scale_rule": spec.scale_rule,
                "k": spec.k,
                "p": spec.p,
                "delta_sensitivity": spec.delta_sensitivity,
                "privacy_account": {
                    "per_slot_epsilon": account.per_slot_epsilon,
                    "composed_epsilon": account.composed_epsilon,
                    "composition_note": account.composition_note,
                },
                "mre": _mean_row_mre(release.cells.astype(np.float64), noisy.cells),
            }

    with _stage("attack"):
        raw_post_est = _attack_estimates(user_priors, prior_est, release, ordering, cfg)
        if noisy_release is None:
            post_est = raw_post_est
        else:
            post_est = _attack_estimates(user_priors, prior_est, noisy_release, ordering, cfg)

    with _stage("score"):
        errors: list[metrics.ErrorReport] = []
        outcomes: list[metrics.PrivacyOutcome] = []
        prior_slots = np.zeros(len(window))
        post_slots = np.zeros(len(window))
        for i, user in enumerate(users):
            if goal == "profiling":
                truth = build_profile(user).cells[:, window.start : window.stop]
                score = metrics.profiling_error
            else:
                truth = user.window(window)
                score = metrics.localization_error
            prior_score = score(truth, prior_est[i])
            post_score = score(truth, post_est[i])
            errors.append(
                metrics.ErrorReport(
                    user_id=user.user_id,
                    metric=metric,
                    prior_error=prior_score.total,
                    posterior_error=post_score.total,
                    per_slot_errors=post_score.per_slot,
                )
            )
            pg = None
            if noisy_release is not None:
                raw_score = score(truth, raw_post_est[i])
                pg = metrics.privacy_gain(raw_score.total, post_score.total)
            outcomes.append(
                metrics.PrivacyOutcome(
                    user_id=user.user_id,
                    pl=metrics.privacy_loss(prior_score.total, post_score.total),
                    pg=pg,
                )
            )
            prior_slots += prior_score.per_slot
            post_slots += post_score.per_slot
        prior_slots /= len(users)
        post_slots /= len(users)

        prior_errors = np.array([e.prior_error for e in errors])
        post_errors = np.array([e.posterior_error for e in errors])
        summary = {
            "user_count": len(users),
            "prior_mean": float(prior_errors.mean()),
            "prior_median": float(np.median(prior_errors)),
            "posterior_mean": float(post_errors.mean()),
            "posterior_median": float(np.median(post_errors)),
            "pl_mean": float(np.mean([o.pl for o in outcomes])),
            "pg_mean": (
                float(np.mean([o.pg for o in outcomes]))
                if noisy_release is not None
                else None
            ),
            "cdf_prior": _quantile_cdf(prior_errors),
            "cdf_posterior": _quantile_cdf(post_errors),
        }

    return AttackReport(
        config=cfg.raw,
        goal=goal,
        metric=metric,
        errors=errors,
        outcomes=outcomes,
        per_slot_prior=prior_slots,
        per_slot_posterior=post_slots,
        summary=summary,
        defense=defense_info,
    )


def _users_csv(report: AttackReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["user_id", "prior_error", "posterior_error", "pl", "pg"])
    for err, outcome in zip(report.errors, report.outcomes):
        writer.writerow(
            [
                err.user_id,
                repr(err.prior_error),
                repr(err.posterior_error),
                repr(outcome.pl),
                "" if outcome.pg is None else repr(outcome.pg),
            ]
        )
    return buffer.getvalue()


def write_report(report: AttackReport, outdir: str | Path) -> list[Path]:
    """Persist report.json and users.csv; removes partial output on failure."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    contents = {
        "report.json": json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
        "users.csv": _users_csv(report),
    }
    written: list[Path] = []
    try:
        for name, content in contents.items():
            path = outdir / name
            path.write_text(content)
            written.append(path)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written


def sweep(cfg: RunConfig, axis: str, values: list[str]) -> list[tuple[object, AttackReport]]:
    """Re-run the base config once per axis value (shared seed)."""
    if axis not in SCHEMA:
        raise ConfigError(f"sweep axis must be a config key, got {axis!r}")
    if not values:
        raise ConfigError("sweep needs at least one value")
    results = []
    for raw_value in values:
        typed = parse_value(axis, raw_value)
        raw = dict(cfg.raw)
        raw[axis] = raw_value
        results.append((typed, run(validate_config(raw))))
    return results


def write_sweep(
    results: list[tuple[object, AttackReport]], axis: str, outdir: str | Path
) -> list[Path]:
    """One run directory per value plus the combined (value, PG, MRE) table."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    leaf = axis.split(".")[-1]
    for value, report in results:
        written.extend(write_report(report, outdir / f"{leaf}_{value}"))
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([axis, "mean_pg", "mre"])
    for value, report in results:
        pg = report.summary.get("pg_mean")
        mre = report.defense["mre"] if report.defense else None
        writer.writerow(
            [value, "" if pg is None else repr(pg), "" if mre is None else repr(mre)]
        )
    summary_path = outdir / "sweep_summary.csv"
    summary_path.write_text(buffer.getvalue())
    written.append(summary_path)
    return written


def empirical_cdf(values: np.ndarray) -> list[tuple[float, float]]:
    """Exact empirical CDF: one point per distinct value."""
    values = np.sort(np.asarray(values, dtype=np.float64))
    n = values.size
    points = []
    for i, v in enumerate(values, start=1):
        if i == n or values[i] != v:
            points.append((float(v), i / n))
    return points


def emit_cdf(report_dict: dict, outdir: str | Path) -> list[Path]:
    """Write the exact empirical error CDF per series (prior and attack)."""
    rows = report_dict.get("users", [])
    if not rows:
        raise DataError("report has no per-user rows")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    attack = report_dict.get("config", {}).get("attack.kind", "none")
    series = {
        "cdf_prior.csv": np.array([r["prior_error"] for r in rows]),
        f"cdf_{attack}.csv": np.array([r["posterior_error"] for r in rows]),
    }
    written = []
    for name, values in series.items():
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["error", "cumulative_fraction"])
        for value, fraction in empirical_cdf(values):
            writer.writerow([repr(value), repr(fraction)])
        path = outdir / name
        path.write_text(buffer.getvalue())
        written.append(path)
    return written
