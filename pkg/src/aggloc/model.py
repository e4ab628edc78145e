"""Matrix data model: ground truth, mobility profiles and aggregate series.

All matrices are ROI x epoch, row 0 being the synthetic "null" ROI that marks
epochs without any location report.  Types are immutable after construction
(arrays are frozen read-only) so every operation here is a pure function that
is safe to call concurrently.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvariantError

log = logging.getLogger(__name__)

NULL_INDEX = 0

#: tolerance used everywhere a column must sum to one
NORMALIZATION_TOL = 1e-9


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def normalize_columns(cells: np.ndarray, zero_to: str = "error") -> np.ndarray:
    """Divide each column by its sum.

    `zero_to` selects what an all-zero column becomes: "error" raises,
    "uniform" spreads mass over all rows, "null" puts all mass on the null
    row, "zero" keeps the column at zero.
    """
    cells = np.asarray(cells, dtype=np.float64)
    sums = cells.sum(axis=0)
    zero = sums <= 0
    if zero.any() and zero_to == "error":
        raise InvariantError(f"{int(zero.sum())} column(s) sum to zero")
    safe = np.where(zero, 1.0, sums)
    out = cells / safe
    if zero.any():
        if zero_to == "uniform":
            out[:, zero] = 1.0 / cells.shape[0]
        elif zero_to == "null":
            out[:, zero] = 0.0
            out[NULL_INDEX, zero] = 1.0
        elif zero_to != "zero":
            raise ValueError(f"unknown zero_to mode {zero_to!r}")
    return out


@dataclass(frozen=True)
class RoiSpace:
    """The set of regions of interest; index 0 is always the null ROI."""

    labels: tuple[str, ...]
    null_index: int = NULL_INDEX

    def __post_init__(self):
        if len(self.labels) < 2:
            raise InvariantError("need at least the null ROI plus one real ROI")
        if len(set(self.labels)) != len(self.labels):
            raise InvariantError("ROI labels must be unique")
        if self.null_index != NULL_INDEX:
            raise InvariantError("null ROI is fixed at index 0")

    @property
    def roi_count(self) -> int:
        return len(self.labels)

    @classmethod
    def of_size(cls, roi_count: int, null_label: str = "null") -> "RoiSpace":
        """Generic labelled space of `roi_count` ROIs (null included)."""
        if roi_count < 2:
            raise InvariantError("roi_count must be >= 2 (null plus one real ROI)")
        width = len(str(roi_count - 1))
        labels = (null_label,) + tuple(
            f"roi{idx:0{width}d}" for idx in range(1, roi_count)
        )
        return cls(labels)


@dataclass(frozen=True)
class TimeFrame:
    """Collection period split into an observation prefix and inference suffix."""

    total_epochs: int
    observation_epochs: int
    inference_epochs: int
    epoch_seconds: int = 3600

    def __post_init__(self):
        for name in ("total_epochs", "observation_epochs", "inference_epochs", "epoch_seconds"):
            if getattr(self, name) <= 0:
                raise InvariantError(f"{name} must be positive")
        if self.observation_epochs + self.inference_epochs > self.total_epochs:
            raise InvariantError("observation + inference epochs exceed the total")

    @property
    def observation_window(self) -> range:
        return range(0, self.observation_epochs)

    @property
    def inference_window(self) -> range:
        return range(self.total_epochs - self.inference_epochs, self.total_epochs)

    @property
    def epochs_per_week(self) -> int:
        return (7 * 24 * 3600) // self.epoch_seconds

    @classmethod
    def from_weeks(
        cls,
        total_weeks: int,
        observation_weeks: int,
        inference_weeks: int,
        epoch_seconds: int = 3600,
    ) -> "TimeFrame":
        per_week = (7 * 24 * 3600) // epoch_seconds
        if per_week <= 0:
            raise InvariantError("epoch_seconds too large for a weekly split")
        return cls(
            total_epochs=total_weeks * per_week,
            observation_epochs=observation_weeks * per_week,
            inference_epochs=inference_weeks * per_week,
            epoch_seconds=epoch_seconds,
        )


@dataclass(frozen=True)
class GroundTruthMatrix:
    """Per-user binary presence matrix of shape (roi_count, total_epochs).

    Every column carries at least one mark; the null row is 1 exactly when
    the user reported nothing that epoch.  Multiple non-null marks per
    column are allowed (several reports within one epoch).
    """

    user_id: str
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.uint8)
        if cells.ndim != 2 or cells.shape[0] < 2:
            raise InvariantError("ground truth must be a (roi_count>=2, epochs) matrix")
        if not np.isin(cells, (0, 1)).all():
            raise InvariantError("ground truth entries must be binary")
        col_sums = cells.sum(axis=0)
        if (col_sums == 0).any():
            raise InvariantError(f"user {self.user_id}: column without any mark")
        non_null = cells[NULL_INDEX + 1 :, :].sum(axis=0)
        expected_null = (non_null == 0).astype(np.uint8)
        if not np.array_equal(cells[NULL_INDEX], expected_null):
            raise InvariantError(
                f"user {self.user_id}: null row must be 1 iff the column has no real mark"
            )
        object.__setattr__(self, "cells", _freeze(cells))

    @property
    def roi_count(self) -> int:
        return self.cells.shape[0]

    @property
    def total_epochs(self) -> int:
        return self.cells.shape[1]

    def window(self, epochs: range) -> np.ndarray:
        """Read-only view over a contiguous epoch range."""
        return self.cells[:, epochs.start : epochs.stop]

    def report_count(self, epochs: range | None = None) -> int:
        """Number of non-null marks, optionally restricted to a window."""
        cells = self.cells if epochs is None else self.window(epochs)
        return int(cells[NULL_INDEX + 1 :, :].sum())

    @classmethod
    def from_marks(
        cls,
        user_id: str,
        roi_count: int,
        total_epochs: int,
        marks: Iterable[tuple[int, int]],
    ) -> "GroundTruthMatrix":
        """Build from (roi_index, epoch) presence marks; null row is derived."""
        cells = np.zeros((roi_count, total_epochs), dtype=np.uint8)
        for roi, epoch in marks:
            if roi == NULL_INDEX:
                raise InvariantError("null marks are derived, not supplied")
            cells[roi, epoch] = 1
        empty = cells[NULL_INDEX + 1 :, :].sum(axis=0) == 0
        cells[NULL_INDEX, empty] = 1
        return cls(user_id=user_id, cells=cells)


@dataclass(frozen=True)
class MobilityProfile:
    """Column-stochastic per-user profile (probability of each ROI per epoch)."""

    user_id: str
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.float64)
        if ((cells < 0) | (cells > 1)).any():
            raise InvariantError("profile entries must lie in [0, 1]")
        if np.abs(cells.sum(axis=0) - 1.0).max() > NORMALIZATION_TOL:
            raise InvariantError("profile columns must sum to 1")
        object.__setattr__(self, "cells", _freeze(cells))


@dataclass(frozen=True)
class AggregateSeries:
    """Integer user counts per (ROI, epoch) over the inference period.

    Entries are bounded by the contributing population size.  True
    aggregation output additionally has column sums >= user_count (each user
    contributes at least the null mark); sanitized noisy counts re-enter
    through this type without that guarantee.
    """

    cells: np.ndarray
    user_count: int

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int64)
        if cells.ndim != 2:
            raise InvariantError("aggregate must be a 2-d matrix")
        if (cells < 0).any() or (cells > self.user_count).any():
            raise InvariantError("aggregate entries must lie in [0, user_count]")
        object.__setattr__(self, "cells", _freeze(cells))


@dataclass(frozen=True)
class AggregateProfile:
    """Column-stochastic population profile extracted from an aggregate."""

    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.float64)
        if np.abs(cells.sum(axis=0) - 1.0).max() > NORMALIZATION_TOL:
            raise InvariantError("aggregate profile columns must sum to 1")
        object.__setattr__(self, "cells", _freeze(cells))


@dataclass(frozen=True)
class NoisyAggregateSeries:
    """Real-valued perturbed aggregate; may be negative before sanitization."""

    cells: np.ndarray
    provenance: "object" = None  # NoiseSpec; kept loose to avoid an import cycle
    user_count: int = 0

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.float64)
        if cells.ndim != 2:
            raise InvariantError("noisy aggregate must be a 2-d matrix")
        object.__setattr__(self, "cells", _freeze(cells))


def build_profile(gt: GroundTruthMatrix) -> MobilityProfile:
    """Normalize each ground-truth column into a distribution over ROIs."""
    cells = normalize_columns(gt.cells, zero_to="error")
    return MobilityProfile(user_id=gt.user_id, cells=cells)


def aggregate(users: Sequence[GroundTruthMatrix], window: range) -> AggregateSeries:
    """Cell-wise sum of the users' presence marks over an epoch window."""
    if not users:
        raise InvariantError("aggregate needs at least one user")
    shape = users[0].cells.shape
    if any(u.cells.shape != shape for u in users):
        raise InvariantError("all users must share the ROI space and time frame")
    if window.start < 0 or window.stop > shape[1]:
        raise InvariantError("window outside the collection period")
    total = np.zeros((shape[0], len(window)), dtype=np.int64)
    for user in users:
        total += user.window(window)
    return AggregateSeries(cells=total, user_count=len(users))


def aggregate_profile(agg: AggregateSeries | NoisyAggregateSeries) -> AggregateProfile:
    """Column-normalize an aggregate, clamping noisy values to >= 0 first.

    Columns whose clamped sum is zero fall back to the uniform distribution
    so that downstream Bayesian updating stays well-defined.
    """
    cells = np.clip(np.asarray(agg.cells, dtype=np.float64), 0.0, None)
    degenerate = int((cells.sum(axis=0) <= 0).sum())
    if degenerate:
        log.debug("aggregate_profile: %d zero-sum column(s) mapped to uniform", degenerate)
    return AggregateProfile(cells=normalize_columns(cells, zero_to="uniform"))
