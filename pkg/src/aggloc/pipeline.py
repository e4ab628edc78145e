"""Raw-trace pre-processing and synthetic corpus generation.

Traces are bucketed into fixed-width epochs and either a lat/lon grid or a
station dictionary; duplicate reports within an epoch collapse to one mark
and silent epochs get the null mark.  The synthetic generators exist to
exhibit the regular-vs-irregular contrast the experiments measure, not to
model real cities.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DataError, InvariantError
from .model import GroundTruthMatrix, TimeFrame

log = logging.getLogger(__name__)

COMMUTER = "commuter"
CAB = "cab"

POINT_HEADER = ["user_id", "timestamp", "lat", "lon"]
TRIP_HEADER = ["user_id", "t_in", "station_in", "t_out", "station_out"]
STATION_HEADER = ["station_id", "roi_index"]


@dataclass(frozen=True)
class RawTraceRecord:
    """One location report: a station id or a lat/lon pair at a timestamp."""

    user_id: str
    timestamp: int
    station: str | None = None
    lat: float | None = None
    lon: float | None = None


@dataclass(frozen=True)
class GridSpec:
    """Rectangular lat/lon grid; cells are half-open [min, next) intervals."""

    min_lat: float
    max_lat: float
    min_lon: float
    max_lon: float
    rows: int
    cols: int

    def __post_init__(self):
        if self.max_lat <= self.min_lat or self.max_lon <= self.min_lon:
            raise InvariantError("grid max bounds must exceed min bounds")
        if self.rows <= 0 or self.cols <= 0:
            raise InvariantError("grid needs positive rows and cols")

    @property
    def roi_count(self) -> int:
        """Grid cells plus the null ROI."""
        return self.rows * self.cols + 1

    def roi_index(self, lat: float, lon: float) -> int | None:
        """Map a point to its ROI index (null offset applied); None if outside."""
        row = math.floor((lat - self.min_lat) / (self.max_lat - self.min_lat) * self.rows)
        col = math.floor((lon - self.min_lon) / (self.max_lon - self.min_lon) * self.cols)
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            return None
        return 1 + row * self.cols + col


@dataclass(frozen=True)
class SynthModelSpec:
    """Synthetic corpus parameters; roi_count includes the null ROI."""

    model: str
    user_count: int
    roi_count: int
    weeks: int
    regularity: float
    seed: int

    def __post_init__(self):
        if self.model not in (COMMUTER, CAB):
            raise InvariantError(f"unknown synthetic model {self.model!r}")
        if self.user_count <= 0 or self.roi_count < 2 or self.weeks <= 0:
            raise InvariantError("user_count, roi_count and weeks must be positive")
        if not (0.0 <= self.regularity <= 1.0):
            raise InvariantError("regularity must lie in [0, 1]")


@dataclass
class IngestResult:
    users: list[GroundTruthMatrix]
    skipped_out_of_range: int = 0
    skipped_unknown_station: int = 0
    skipped_outside_window: int = 0


def read_point_csv(path: str | Path) -> Iterator[RawTraceRecord]:
    """`user_id,timestamp,lat,lon` rows, one record each."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != POINT_HEADER:
            raise DataError(f"{path}: expected header {','.join(POINT_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                yield RawTraceRecord(
                    user_id=row[0], timestamp=int(row[1]), lat=float(row[2]), lon=float(row[3])
                )
            except (IndexError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc


def read_trip_csv(path: str | Path) -> Iterator[RawTraceRecord]:
    """Trip rows; each yields a record at both the touch-in and touch-out."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != TRIP_HEADER:
            raise DataError(f"{path}: expected header {','.join(TRIP_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                yield RawTraceRecord(user_id=row[0], timestamp=int(row[1]), station=row[2])
                yield RawTraceRecord(user_id=row[0], timestamp=int(row[3]), station=row[4])
            except (IndexError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc


def read_station_map(path: str | Path) -> dict[str, int]:
    """`station_id,roi_index` dictionary used to grid station-based traces."""
    mapping: dict[str, int] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != STATION_HEADER:
            raise DataError(f"{path}: expected header {','.join(STATION_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                mapping[row[0]] = int(row[1])
            except (IndexError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return mapping


def ingest(
    records: Iterable[RawTraceRecord],
    timeframe: TimeFrame,
    roi_count: int,
    grid: GridSpec | None = None,
    station_map: dict[str, int] | None = None,
    start_timestamp: int = 0,
) -> IngestResult:
    """Fold raw records into per-user ground-truth matrices.

    Locations are mapped through the grid (lat/lon records) or the station
    dictionary; epochs are floor((timestamp - start) / epoch_seconds).
    Duplicates collapse, silent epochs become null marks, and out-of-range
    records are skipped and counted.
    """
    if grid is None and station_map is None:
        raise InvariantError("ingest needs a grid or a station dictionary")
    marks: dict[str, set[tuple[int, int]]] = {}
    result = IngestResult(users=[])
    for record in records:
        epoch = (record.timestamp - start_timestamp) // timeframe.epoch_seconds
        if not (0 <= epoch < timeframe.total_epochs):
            result.skipped_outside_window += 1
            continue
        if record.station is not None:
            if station_map is None or record.station not in station_map:
                result.skipped_unknown_station += 1
                continue
            roi = station_map[record.station]
        else:
            roi = grid.roi_index(record.lat, record.lon) if grid else None
            if roi is None:
                result.skipped_out_of_range += 1
                continue
        if not (1 <= roi < roi_count):
            result.skipped_out_of_range += 1
            continue
        marks.setdefault(record.user_id, set()).add((roi, epoch))
    for user_id in sorted(marks):
        result.users.append(
            GroundTruthMatrix.from_marks(
                user_id, roi_count, timeframe.total_epochs, sorted(marks[user_id])
            )
        )
    skipped = (
        result.skipped_out_of_range
        + result.skipped_unknown_station
        + result.skipped_outside_window
    )
    if skipped:
        log.info(
            "ingest skipped %d record(s): %d out of range, %d unknown station, %d outside window",
            skipped,
            result.skipped_out_of_range,
            result.skipped_unknown_station,
            result.skipped_outside_window,
        )
    return result


def split(
    timeframe: TimeFrame, observation_weeks: int, inference_weeks: int
) -> tuple[range, range]:
    """Contiguous prefix/suffix epoch ranges for a weekly train/test split."""
    per_week = timeframe.epochs_per_week
    obs = observation_weeks * per_week
    inf = inference_weeks * per_week
    if observation_weeks <= 0 or inference_weeks <= 0:
        raise InvariantError("both split windows need at least one week")
    if obs + inf > timeframe.total_epochs:
        raise InvariantError("split weeks exceed the collection period")
    return range(0, obs), range(timeframe.total_epochs - inf, timeframe.total_epochs)


def top_users(users: Sequence[GroundTruthMatrix], n: int) -> list[GroundTruthMatrix]:
    """The n users with most non-null marks; ties go to the smaller id."""
    if n > len(users):
        raise InvariantError("cannot select more users than available")
    ranked = sorted(users, key=lambda u: (-u.report_count(), u.user_id))
    return ranked[:n]


def _commuter(spec: SynthModelSpec, index: int, rng: np.random.Generator) -> GroundTruthMatrix:
    n_epochs = spec.weeks * 168
    real_rois = spec.roi_count - 1
    home, work = 1 + rng.choice(real_rois, size=2, replace=False)
    morning = int(rng.integers(7, 10))
    evening = int(rng.integers(16, 20))
    outing_p = 0.5 * (1.0 - spec.regularity)  # regularity 1 => exactly periodic weeks

    marks = []
    for day in range(spec.weeks * 7):
        base = day * 24
        if day % 7 < 5:
            for hour, routine in ((morning, work), (evening, home)):
                if rng.random() < spec.regularity:
                    roi = routine
                else:
                    roi = 1 + int(rng.integers(real_rois))
                marks.append((int(roi), base + hour))
        elif rng.random() < outing_p:
            hour = int(rng.integers(10, 22))
            roi = 1 + int(rng.integers(real_rois))
            marks.append((roi, base + hour))
    width = len(str(spec.user_count - 1))
    return GroundTruthMatrix.from_marks(f"u{index:0{width}d}", spec.roi_count, n_epochs, marks)


def _grid_shape(real_rois: int) -> tuple[int, int]:
    rows = max(1, int(math.isqrt(real_rois)))
    while real_rois % rows:
        rows -= 1
    return rows, real_rois // rows


def _cab(spec: SynthModelSpec, index: int, rng: np.random.Generator) -> GroundTruthMatrix:
    n_epochs = spec.weeks * 168
    real_rois = spec.roi_count - 1
    rows, cols = _grid_shape(real_rois)
    r, c = int(rng.integers(rows)), int(rng.integers(cols))
    moves = ((0, 0), (-1, 0), (1, 0), (0, -1), (0, 1))
    last = 0
    marks = []
    for epoch in range(n_epochs):
        if rng.random() < 2.0 / 3.0:
            # persistent walk: prefer repeating the previous move
            if rng.random() < 0.6:
                move = last
            else:
                move = int(rng.integers(len(moves)))
            dr, dc = moves[move]
            if 0 <= r + dr < rows and 0 <= c + dc < cols:
                r, c = r + dr, c + dc
                last = move
            else:
                last = 0
            marks.append((1 + r * cols + c, epoch))
    width = len(str(spec.user_count - 1))
    return GroundTruthMatrix.from_marks(f"u{index:0{width}d}", spec.roi_count, n_epochs, marks)


def synthesize(spec: SynthModelSpec) -> list[GroundTruthMatrix]:
    """Deterministic synthetic corpus; one seed substream per user."""
    build = _commuter if spec.model == COMMUTER else _cab
    users = []
    for index in range(spec.user_count):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([spec.seed, index])))
        users.append(build(spec, index, rng))
    return users
