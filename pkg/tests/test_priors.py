import numpy as np
import pytest

from aggloc.errors import InvariantError
from aggloc.model import NULL_INDEX, TimeFrame
from aggloc.priors import (
    ASSIGNMENT,
    PROBABILISTIC,
    PriorMatrix,
    SeasonalitySpec,
    all_rois,
    freq_roi,
    last_season,
    popular_rois,
    roi_seasonality,
    time_seasonality,
)

from conftest import make_gt, random_gt


class TestFreqRoi:
    def test_direct_frequency_distribution(self, small_timeframe):
        # ROI 1 twice and ROI 2 once in the observation window; null fills the rest
        gt = make_gt("u0", 3, 12, [(1, 0), (1, 1), (2, 2)])
        prior = freq_roi(gt, small_timeframe)
        assert prior.kind == PROBABILISTIC
        assert prior.observation_total == 8
        expected = np.array([5 / 8, 2 / 8, 1 / 8])
        assert np.allclose(prior.cells[:, 0], expected)

    def test_pure_marks_match_stated_example(self):
        tf = TimeFrame(total_epochs=5, observation_epochs=3, inference_epochs=2)
        gt = make_gt("u0", 3, 5, [(1, 0), (1, 1), (2, 2)])
        prior = freq_roi(gt, tf)
        assert np.allclose(prior.cells[:, 0], [0.0, 2 / 3, 1 / 3])

    def test_always_null_user(self, small_timeframe):
        gt = make_gt("u0", 3, 12, [])
        prior = freq_roi(gt, small_timeframe)
        assert np.allclose(prior.cells[NULL_INDEX], 1.0)
        assert np.allclose(prior.cells[1:], 0.0)

    def test_columns_identical(self, small_timeframe):
        rng = np.random.default_rng(0)
        gt = random_gt(rng, "u0", 5, 12)
        prior = freq_roi(gt, small_timeframe)
        assert (prior.cells == prior.cells[:, :1]).all()


class TestRoiSeasonality:
    def test_repeated_hour_becomes_unit_vector(self):
        # two observed days, ROI 1 at hour 9 both days, one inference day
        tf = TimeFrame(total_epochs=72, observation_epochs=48, inference_epochs=24)
        gt = make_gt("u0", 3, 72, [(1, 9), (1, 33), (1, 57)])
        prior = roi_seasonality(gt, tf, SeasonalitySpec(24))
        phase9 = prior.cells[:, 9]  # inference epoch 57 has phase 9
        assert phase9.tolist() == [0.0, 1.0, 0.0]

    def test_single_cycle_reduces_to_observed_slice(self):
        tf = TimeFrame(total_epochs=12, observation_epochs=8, inference_epochs=4)
        rng = np.random.default_rng(1)
        gt = random_gt(rng, "u0", 4, 12)
        prior = roi_seasonality(gt, tf, SeasonalitySpec(8))
        observed = gt.cells[:, :8].astype(float)
        observed = observed / observed.sum(axis=0)
        # inference epochs 8..11 map to phases 0..3
        assert np.allclose(prior.cells, observed[:, [0, 1, 2, 3]])

    def test_null_only_phase_is_null_unit(self):
        tf = TimeFrame(total_epochs=6, observation_epochs=4, inference_epochs=2)
        gt = make_gt("u0", 3, 6, [(1, 1), (1, 3)])
        prior = roi_seasonality(gt, tf, SeasonalitySpec(2))
        # phase 0 never sees a report: all marks are null there
        assert prior.cells[:, 0].tolist() == [1.0, 0.0, 0.0]

    def test_cycle_periodic_columns(self):
        tf = TimeFrame(total_epochs=96, observation_epochs=48, inference_epochs=48)
        rng = np.random.default_rng(2)
        gt = random_gt(rng, "u0", 4, 96, density=0.2)
        prior = roi_seasonality(gt, tf, SeasonalitySpec(24))
        assert np.array_equal(prior.cells[:, :24], prior.cells[:, 24:])

    def test_observation_truncated_to_whole_cycles(self):
        tf = TimeFrame(total_epochs=14, observation_epochs=10, inference_epochs=4)
        # mark inside the truncated-away prefix (epochs 0-1 when c=4)
        gt = make_gt("u0", 3, 14, [(1, 0), (2, 6)])
        prior = roi_seasonality(gt, tf, SeasonalitySpec(4))
        # phases counted over epochs [2, 10); epoch 0's mark must not appear
        assert prior.observation_total == 8
        assert (prior.cells[1] == 0).all()

    def test_cycle_longer_than_observation_rejected(self, small_timeframe):
        gt = make_gt("u0", 3, 12, [])
        with pytest.raises(InvariantError):
            roi_seasonality(gt, small_timeframe, SeasonalitySpec(9))


class TestTimeSeasonality:
    def test_daily_reporter_at_one_hour(self):
        tf = TimeFrame(total_epochs=72, observation_epochs=48, inference_epochs=24)
        gt = make_gt("u0", 4, 72, [(1, 8), (2, 32)])  # hour 8 both observed days
        prior = time_seasonality(gt, tf, SeasonalitySpec(24))
        active = prior.cells[:, 8]
        assert active[NULL_INDEX] == 0.0
        assert np.allclose(active[1:], 1 / 3)
        inactive = prior.cells[:, 9]
        assert inactive.tolist() == [1.0, 0.0, 0.0, 0.0]

    def test_never_reporting_user(self):
        tf = TimeFrame(total_epochs=12, observation_epochs=8, inference_epochs=4)
        gt = make_gt("u0", 3, 12, [])
        prior = time_seasonality(gt, tf, SeasonalitySpec(4))
        assert (prior.cells[NULL_INDEX] == 1.0).all()

    def test_non_null_entries_always_symmetric(self):
        tf = TimeFrame(total_epochs=24, observation_epochs=16, inference_epochs=8)
        rng = np.random.default_rng(3)
        for _ in range(10):
            gt = random_gt(rng, "u0", 5, 24, density=0.15)
            prior = time_seasonality(gt, tf, SeasonalitySpec(8))
            spread = prior.cells[1:].max(axis=0) - prior.cells[1:].min(axis=0)
            assert (spread == 0).all()


class TestProjections:
    def _prior(self, cells):
        return PriorMatrix("u0", PROBABILISTIC, np.asarray(cells, dtype=float), 4)

    def test_pop_threshold(self):
        prior = self._prior([[0.6], [0.4]])
        assert popular_rois(prior, 0.5).cells[:, 0].tolist() == [1.0, 0.0]

    def test_pop_boundary_is_inclusive(self):
        prior = self._prior([[0.5], [0.5]])
        assert popular_rois(prior, 0.5).cells[:, 0].tolist() == [1.0, 1.0]

    def test_pop_below_threshold_all_zero(self):
        prior = self._prior([[0.4], [0.3], [0.3]])
        assert popular_rois(prior, 0.5).cells.sum() == 0

    def test_pop_monotone_in_delta(self):
        rng = np.random.default_rng(4)
        cells = rng.dirichlet(np.ones(5), size=6).T
        prior = self._prior(cells)
        previous = None
        for delta in (0.1, 0.25, 0.5, 0.75, 1.0):
            current = popular_rois(prior, delta).cells
            if previous is not None:
                assert (current <= previous).all()
            previous = current

    def test_all_is_ceiling(self):
        prior = self._prior([[0.0001], [0.0], [0.9999]])
        assert all_rois(prior).cells[:, 0].tolist() == [1.0, 0.0, 1.0]

    def test_all_keeps_exact_one(self):
        prior = self._prior([[1.0], [0.0]])
        assert all_rois(prior).cells[:, 0].tolist() == [1.0, 0.0]

    def test_projections_need_probabilistic_input(self):
        assignment = PriorMatrix("u0", ASSIGNMENT, np.array([[1.0], [0.0]]), 1)
        with pytest.raises(InvariantError):
            popular_rois(assignment, 0.5)
        with pytest.raises(InvariantError):
            all_rois(assignment)


class TestLastSeason:
    def test_cycle_equals_inference_length(self):
        tf = TimeFrame(total_epochs=12, observation_epochs=8, inference_epochs=4)
        rng = np.random.default_rng(5)
        gt = random_gt(rng, "u0", 4, 12)
        prior = last_season(gt, tf, SeasonalitySpec(4))
        assert prior.kind == ASSIGNMENT
        assert np.array_equal(prior.cells, gt.cells[:, 4:8].astype(float))

    def test_static_user_predicted_everywhere(self):
        marks = [(1, t) for t in range(12)]
        gt = make_gt("u0", 3, 12, marks)
        tf = TimeFrame(total_epochs=12, observation_epochs=8, inference_epochs=4)
        prior = last_season(gt, tf, SeasonalitySpec(4))
        assert (prior.cells[1] == 1.0).all()

    def test_index_shift_oracle(self):
        tf = TimeFrame(total_epochs=96, observation_epochs=48, inference_epochs=48)
        rng = np.random.default_rng(6)
        gt = random_gt(rng, "u0", 5, 96, density=0.2)
        prior = last_season(gt, tf, SeasonalitySpec(24))
        for j, t in enumerate(tf.inference_window):
            assert np.array_equal(prior.cells[:, j], gt.cells[:, t - 24].astype(float))

    def test_window_underflow_rejected(self):
        tf = TimeFrame(total_epochs=12, observation_epochs=8, inference_epochs=4)
        gt = make_gt("u0", 3, 12, [])
        with pytest.raises(InvariantError):
            last_season(gt, tf, SeasonalitySpec(10))


def test_probabilistic_columns_are_distributions_or_zero(small_timeframe):
    rng = np.random.default_rng(7)
    for _ in range(10):
        gt = random_gt(rng, "u0", 5, 12, density=0.1)
        for prior in (
            freq_roi(gt, small_timeframe),
            roi_seasonality(gt, small_timeframe, SeasonalitySpec(4)),
            time_seasonality(gt, small_timeframe, SeasonalitySpec(4)),
        ):
            sums = prior.cells.sum(axis=0)
            assert ((np.abs(sums - 1) <= 1e-9) | (sums == 0)).all()
