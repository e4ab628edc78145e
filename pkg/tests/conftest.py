import numpy as np
import pytest

from aggloc.model import GroundTruthMatrix, TimeFrame


def make_gt(user_id, roi_count, epochs, marks):
    """Ground truth from (roi, epoch) non-null marks; null row derived."""
    return GroundTruthMatrix.from_marks(user_id, roi_count, epochs, marks)


def random_gt(rng, user_id, roi_count, epochs, density=0.3):
    """Random ground truth: each non-null cell is a mark with `density`."""
    cells = (rng.random((roi_count - 1, epochs)) < density).astype(np.uint8)
    marks = [(int(r) + 1, int(t)) for r, t in zip(*np.nonzero(cells))]
    return make_gt(user_id, roi_count, epochs, marks)


@pytest.fixture
def small_timeframe():
    return TimeFrame(total_epochs=12, observation_epochs=8, inference_epochs=4)
