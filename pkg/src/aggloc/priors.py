"""Adversarial prior knowledge built from observation-period ground truth.

Probabilistic priors (frequency and seasonality profiles) describe how likely
a user is to visit each ROI per inference epoch; assignment priors are binary
predictions.  Seasonal variants are parameterized by the cycle length c, so
daily/weekly/hourly flavours are the same code path with c in {24, 168, 1}.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvariantError
from .model import NULL_INDEX, NORMALIZATION_TOL, GroundTruthMatrix, TimeFrame, _freeze

log = logging.getLogger(__name__)

PROBABILISTIC = "probabilistic"
ASSIGNMENT = "assignment"

#: POP threshold used throughout the reference experiments
DEFAULT_POP_DELTA = 0.5


@dataclass(frozen=True)
class SeasonalitySpec:
    """Seasonality cycle length in epochs (24 = daily, 168 = weekly at 1h)."""

    cycle_epochs: int

    def __post_init__(self):
        if self.cycle_epochs <= 0:
            raise InvariantError("cycle_epochs must be positive")


@dataclass(frozen=True)
class PriorMatrix:
    """Adversary's per-user knowledge over the inference period.

    Probabilistic priors have column distributions (all-zero columns are
    permitted and mean "no information for this epoch"); assignment priors
    are binary.  `observation_total` is the number of presence marks in the
    window the prior was built from.
    """

    user_id: str
    kind: str
    cells: np.ndarray
    observation_total: int

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.float64)
        if self.kind == PROBABILISTIC:
            sums = cells.sum(axis=0)
            ok = (np.abs(sums - 1.0) <= NORMALIZATION_TOL) | (sums == 0.0)
            if ((cells < 0) | (cells > 1)).any() or not ok.all():
                raise InvariantError("probabilistic prior columns must be distributions or all-zero")
        elif self.kind == ASSIGNMENT:
            if not np.isin(cells, (0.0, 1.0)).all():
                raise InvariantError("assignment prior entries must be binary")
        else:
            raise InvariantError(f"unknown prior kind {self.kind!r}")
        object.__setattr__(self, "cells", _freeze(cells))


def _observation_cells(gt: GroundTruthMatrix, timeframe: TimeFrame) -> np.ndarray:
    window = timeframe.observation_window
    if len(window) == 0:
        raise InvariantError("empty observation window")
    return gt.window(window)


def freq_roi(gt: GroundTruthMatrix, timeframe: TimeFrame) -> PriorMatrix:
    """Frequent-ROI prior: one visit-frequency distribution copied to every epoch."""
    obs = _observation_cells(gt, timeframe)
    counts = obs.sum(axis=1, dtype=np.int64)
    total = int(counts.sum())
    distribution = counts / total
    cells = np.repeat(distribution[:, None], timeframe.inference_epochs, axis=1)
    return PriorMatrix(gt.user_id, PROBABILISTIC, cells, observation_total=total)


def _phases(epochs: np.ndarray, cycle: int) -> np.ndarray:
    # phases follow the absolute epoch index so observation and inference
    # windows line up even when they are not cycle-aligned
    return epochs % cycle


def _truncated_observation(timeframe: TimeFrame, cycle: int) -> np.ndarray:
    """Absolute epoch indexes of the last whole number of cycles in T-tilde."""
    n_obs = timeframe.observation_epochs
    if cycle > n_obs:
        raise InvariantError("seasonality cycle longer than the observation window")
    usable = (n_obs // cycle) * cycle
    return np.arange(n_obs - usable, n_obs)


def roi_seasonality(
    gt: GroundTruthMatrix, timeframe: TimeFrame, seas: SeasonalitySpec
) -> PriorMatrix:
    """Seasonal ROI profile: per phase-of-cycle visit distribution."""
    c = seas.cycle_epochs
    obs_epochs = _truncated_observation(timeframe, c)
    obs = gt.cells[:, obs_epochs]
    phase_of = _phases(obs_epochs, c)

    roi_count = gt.roi_count
    profile = np.zeros((roi_count, c), dtype=np.float64)
    for phase in range(c):
        cols = obs[:, phase_of == phase]
        counts = cols.sum(axis=1, dtype=np.int64)
        total = int(counts.sum())
        if total == 0:
            log.debug("user %s: no reports at phase %d of cycle %d", gt.user_id, phase, c)
            continue  # all-zero column; Bayesian updating treats it as uniform
        profile[:, phase] = counts / total

    inference_epochs = np.asarray(timeframe.inference_window)
    cells = profile[:, _phases(inference_epochs, c)]
    return PriorMatrix(
        gt.user_id, PROBABILISTIC, cells, observation_total=int(obs.sum())
    )


def time_seasonality(
    gt: GroundTruthMatrix, timeframe: TimeFrame, seas: SeasonalitySpec
) -> PriorMatrix:
    """Seasonal reporting-time prior: uniform over real ROIs at active phases.

    The adversary only knows *when* the user tends to report, so active
    phases spread mass uniformly over the non-null ROIs and inactive phases
    predict the user out of the system.
    """
    c = seas.cycle_epochs
    obs_epochs = _truncated_observation(timeframe, c)
    obs = gt.cells[:, obs_epochs]
    phase_of = _phases(obs_epochs, c)

    non_null_reports = obs[NULL_INDEX + 1 :, :].sum(axis=0)
    active = np.zeros(c, dtype=bool)
    for phase in range(c):
        active[phase] = bool(non_null_reports[phase_of == phase].sum() > 0)

    roi_count = gt.roi_count
    uniform = np.zeros(roi_count)
    uniform[NULL_INDEX + 1 :] = 1.0 / (roi_count - 1)
    null_unit = np.zeros(roi_count)
    null_unit[NULL_INDEX] = 1.0

    inference_epochs = np.asarray(timeframe.inference_window)
    cells = np.where(
        active[_phases(inference_epochs, c)][None, :], uniform[:, None], null_unit[:, None]
    )
    return PriorMatrix(
        gt.user_id, PROBABILISTIC, cells, observation_total=int(obs.sum())
    )


def popular_rois(prior: PriorMatrix, delta: float = DEFAULT_POP_DELTA) -> PriorMatrix:
    """Keep only favourite locations: 1 where the prior probability >= delta."""
    if prior.kind != PROBABILISTIC:
        raise InvariantError("popular_rois expects a probabilistic prior")
    if not (0.0 < delta <= 1.0):
        raise InvariantError("delta must lie in (0, 1]")
    cells = (prior.cells >= delta).astype(np.float64)
    return PriorMatrix(prior.user_id, ASSIGNMENT, cells, prior.observation_total)


def all_rois(prior: PriorMatrix) -> PriorMatrix:
    """Keep every visited location: ceiling of the prior probabilities."""
    if prior.kind != PROBABILISTIC:
        raise InvariantError("all_rois expects a probabilistic prior")
    cells = np.ceil(prior.cells)
    return PriorMatrix(prior.user_id, ASSIGNMENT, cells, prior.observation_total)


def last_season(
    gt: GroundTruthMatrix, timeframe: TimeFrame, seas: SeasonalitySpec
) -> PriorMatrix:
    """Sliding-window prior: copy the ground truth one cycle back in time."""
    c = seas.cycle_epochs
    window = timeframe.inference_window
    if window.start - c < 0:
        raise InvariantError("seasonality cycle reaches before the collection start")
    source = range(window.start - c, window.stop - c)
    cells = gt.window(source).astype(np.float64)
    return PriorMatrix(
        gt.user_id, ASSIGNMENT, cells, observation_total=int(cells.sum())
    )
