"""Flat key-value experiment configuration.

Files hold `key = value` lines (``#`` comments allowed); keys are dotted,
unknown keys are rejected, and every value is type-checked against the
schema below.  The raw mapping is echoed verbatim into reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

GOALS = ("profiling", "localization")
SOURCES = ("synth", "ingest", "triplets")
PRIOR_KINDS = ("freq_roi", "roi_seas", "time_seas", "last_seas")
PROJECTIONS = ("none", "pop", "all")
ATTACKS = ("none", "bayes", "max_roi", "max_user")
DEFENSES = ("none", "scm", "fpa", "rr")
SCALE_RULES = ("unit", "horizon", "sensitivity", "full")
SEASONAL_PRIORS = ("roi_seas", "time_seas", "last_seas")


def _bool(raw: str) -> bool:
    if raw in ("true", "false"):
        return raw == "true"
    raise ValueError(f"expected true or false, got {raw!r}")


#: key -> (parser, allowed choices or None)
SCHEMA: dict[str, tuple] = {
    "seed": (int, None),
    "goal": (str, GOALS),
    "dataset.source": (str, SOURCES),
    "synth.model": (str, ("commuter", "cab")),
    "synth.users": (int, None),
    "synth.rois": (int, None),
    "synth.weeks": (int, None),
    "synth.regularity": (float, None),
    "synth.seed": (int, None),
    "ingest.path": (str, None),
    "ingest.format": (str, ("points", "trips")),
    "ingest.stations": (str, None),
    "ingest.start": (int, None),
    "ingest.rois": (int, None),
    "grid.min_lat": (float, None),
    "grid.max_lat": (float, None),
    "grid.min_lon": (float, None),
    "grid.max_lon": (float, None),
    "grid.rows": (int, None),
    "grid.cols": (int, None),
    "triplets.path": (str, None),
    "triplets.rois": (int, None),
    "timeframe.weeks": (int, None),
    "timeframe.epoch_seconds": (int, None),
    "split.observation_weeks": (int, None),
    "split.inference_weeks": (int, None),
    "prior.kind": (str, PRIOR_KINDS),
    "prior.cycle": (int, None),
    "prior.project": (str, PROJECTIONS),
    "prior.delta": (float, None),
    "attack.kind": (str, ATTACKS),
    "attack.project": (str, PROJECTIONS),
    "defense.mechanism": (str, DEFENSES),
    "defense.epsilon": (float, None),
    "defense.scale_rule": (str, SCALE_RULES),
    "defense.k": (int, None),
    "defense.p": (float, None),
    "aggregate.include_null": (_bool, None),
    "filter.min_inference_activity": (int, None),
}

DEFAULTS = {
    "seed": "0",
    "timeframe.epoch_seconds": "3600",
    "prior.project": "none",
    "prior.delta": "0.5",
    "attack.kind": "none",
    "attack.project": "none",
    "defense.mechanism": "none",
    "aggregate.include_null": "true",
    "filter.min_inference_activity": "0",
}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse `key = value` lines into a raw string mapping."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def parse_value(key: str, raw_value: str):
    """Type-check a single value against the schema (used by sweep too)."""
    if key not in SCHEMA:
        raise ConfigError(f"unknown config key {key!r}")
    parser, choices = SCHEMA[key]
    try:
        value = parser(raw_value)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    if choices is not None and value not in choices:
        raise ConfigError(f"{key}: expected one of {choices}, got {value!r}")
    return value


@dataclass
class RunConfig:
    """Validated configuration; `raw` keeps the exact strings for the echo."""

    raw: dict[str, str]
    values: dict[str, object]

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    @property
    def seed(self) -> int:
        return self.values["seed"]


def _require(values: dict, keys: list[str], context: str) -> None:
    missing = [k for k in keys if k not in values]
    if missing:
        raise ConfigError(f"{context} requires keys: {', '.join(missing)}")


def validate_config(raw: dict[str, str]) -> RunConfig:
    """Apply defaults, type-check every key and enforce cross-field rules."""
    merged = dict(DEFAULTS)
    merged.update(raw)
    values = {key: parse_value(key, value) for key, value in merged.items()}

    _require(values, ["goal", "dataset.source", "prior.kind"], "every run")
    _require(values, ["split.observation_weeks", "split.inference_weeks"], "every run")

    source = values["dataset.source"]
    if source == "synth":
        _require(
            values,
            ["synth.model", "synth.users", "synth.rois", "synth.weeks", "synth.regularity"],
            "dataset.source=synth",
        )
    elif source == "ingest":
        _require(values, ["ingest.path", "ingest.format", "timeframe.weeks"], "dataset.source=ingest")
        if values["ingest.format"] == "points":
            _require(
                values,
                ["grid.min_lat", "grid.max_lat", "grid.min_lon", "grid.max_lon", "grid.rows", "grid.cols"],
                "ingest.format=points",
            )
        else:
            _require(values, ["ingest.stations", "ingest.rois"], "ingest.format=trips")
    else:
        _require(values, ["triplets.path", "triplets.rois", "timeframe.weeks"], "dataset.source=triplets")

    if values["prior.kind"] in SEASONAL_PRIORS:
        _require(values, ["prior.cycle"], f"prior.kind={values['prior.kind']}")

    goal = values["goal"]
    prior_kind = values["prior.kind"]
    prior_project = values["prior.project"]
    attack = values["attack.kind"]
    attack_project = values["attack.project"]
    prior_is_assignment = prior_kind == "last_seas"

    if prior_project != "none" and prior_is_assignment:
        raise ConfigError("pop/all projections need a probabilistic prior")
    if goal == "profiling":
        if prior_project != "none" or attack_project != "none":
            raise ConfigError("profiling scores distributions; drop pop/all projections")
    else:
        if not prior_is_assignment and prior_project == "none":
            raise ConfigError(
                "localization with a probabilistic prior needs prior.project = pop or all"
            )
        if attack == "bayes" and attack_project == "none":
            raise ConfigError("localization with bayes needs attack.project = pop or all")
        if attack in ("none", "max_roi", "max_user") and attack_project != "none":
            raise ConfigError(f"attack.project does not apply to attack.kind={attack}")

    mechanism = values["defense.mechanism"]
    if mechanism != "none":
        _require(values, ["defense.epsilon"], f"defense.mechanism={mechanism}")
        if mechanism == "scm":
            _require(values, ["defense.scale_rule"], "defense.mechanism=scm")
        elif mechanism == "fpa":
            _require(values, ["defense.k"], "defense.mechanism=fpa")
        else:
            _require(values, ["defense.p"], "defense.mechanism=rr")

    return RunConfig(raw=dict(merged), values=values)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return validate_config(parse_config_text(text))
