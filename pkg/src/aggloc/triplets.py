"""CSV triplet interchange for sparse matrices.

Schema: `entity_id,roi_index,epoch_index[,value]` with a mandatory header.
The value column is omitted for binary matrices (a listed cell is a 1).
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import DataError

BINARY_HEADER = ["entity_id", "roi_index", "epoch_index"]
VALUED_HEADER = BINARY_HEADER + ["value"]


def write_triplets(path: str | Path, matrices: Mapping[str, np.ndarray], binary: bool) -> None:
    """Write the non-zero cells of each entity's matrix."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BINARY_HEADER if binary else VALUED_HEADER)
        for entity_id, cells in matrices.items():
            rois, epochs = np.nonzero(cells)
            for roi, epoch in zip(rois.tolist(), epochs.tolist()):
                if binary:
                    writer.writerow([entity_id, roi, epoch])
                else:
                    writer.writerow([entity_id, roi, epoch, repr(float(cells[roi, epoch]))])


def read_triplets(
    path: str | Path, roi_count: int, epochs: int, binary: bool
) -> dict[str, np.ndarray]:
    """Read triplets back into dense per-entity matrices."""
    expected = BINARY_HEADER if binary else VALUED_HEADER
    matrices: dict[str, np.ndarray] = {}
    dtype = np.uint8 if binary else np.float64
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            raise DataError(f"{path}: expected header {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise DataError(f"{path}:{lineno}: wrong number of fields")
            entity_id, roi_s, epoch_s = row[0], row[1], row[2]
            try:
                roi, epoch = int(roi_s), int(epoch_s)
                value = 1.0 if binary else float(row[3])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            if not (0 <= roi < roi_count and 0 <= epoch < epochs):
                raise DataError(f"{path}:{lineno}: index out of range")
            cells = matrices.setdefault(entity_id, np.zeros((roi_count, epochs), dtype=dtype))
            cells[roi, epoch] = value
    return matrices
