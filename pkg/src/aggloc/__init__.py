"""Privacy quantification for aggregate location time-series.

Builds adversarial priors from observed mobility, runs inference attacks
against released (raw or differentially-private) aggregates and scores the
resulting privacy loss/gain per user.
"""

from .attacks import (
    PosteriorMatrix,
    UserOrdering,
    assignment_to_profile,
    bayes,
    max_roi,
    max_user,
    sanitize_counts,
)
from .mechanisms import (
    NoiseSpec,
    PrivacyAccount,
    fpa_keep_k,
    fpa_perturb,
    laplace_sample,
    rr_perturb_and_estimate,
    scm_perturb,
)
from .metrics import (
    ErrorReport,
    PrivacyOutcome,
    js_distance,
    kl_divergence,
    localization_error,
    mre,
    privacy_gain,
    privacy_loss,
    profiling_error,
)
from .model import (
    AggregateProfile,
    AggregateSeries,
    GroundTruthMatrix,
    MobilityProfile,
    NoisyAggregateSeries,
    RoiSpace,
    TimeFrame,
    aggregate,
    aggregate_profile,
    build_profile,
)
from .pipeline import (
    GridSpec,
    RawTraceRecord,
    SynthModelSpec,
    ingest,
    split,
    synthesize,
    top_users,
)
from .priors import (
    PriorMatrix,
    SeasonalitySpec,
    all_rois,
    freq_roi,
    last_season,
    popular_rois,
    roi_seasonality,
    time_seasonality,
)

__version__ = "0.1.0"
