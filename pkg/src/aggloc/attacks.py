"""Inference strategies fusing a prior with released aggregates.

Bayesian updating works per user against the aggregate profile; the two
greedy strategies work across the whole population against integer counts,
either picking the most probable users per ROI (capacity = the released
count) or walking users in order and granting them their positive-prior
ROIs while capacity remains.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import InvariantError
from .model import (
    NULL_INDEX,
    AggregateProfile,
    AggregateSeries,
    GroundTruthMatrix,
    NoisyAggregateSeries,
    TimeFrame,
    _freeze,
    normalize_columns,
)
from .priors import ASSIGNMENT, PROBABILISTIC, PriorMatrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PosteriorMatrix:
    """Adversary's inference output; probabilistic or binary per the attack."""

    user_id: str
    kind: str
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.float64)
        if self.kind not in (PROBABILISTIC, ASSIGNMENT):
            raise InvariantError(f"unknown posterior kind {self.kind!r}")
        object.__setattr__(self, "cells", _freeze(cells))


@dataclass(frozen=True)
class UserOrdering:
    """Deterministic user priority: most observed reports first, id breaks ties."""

    criterion: str
    user_ids: tuple[str, ...]

    @classmethod
    def from_ground_truths(
        cls, users: Sequence[GroundTruthMatrix], timeframe: TimeFrame
    ) -> "UserOrdering":
        window = timeframe.observation_window
        keyed = sorted(users, key=lambda u: (-u.report_count(window), u.user_id))
        return cls(criterion="total_reports_desc", user_ids=tuple(u.user_id for u in keyed))

    def order_for(self, user_ids: Sequence[str]) -> np.ndarray:
        """Indexes into `user_ids` sorted by this ordering."""
        position = {uid: i for i, uid in enumerate(self.user_ids)}
        try:
            ranked = sorted(range(len(user_ids)), key=lambda i: position[user_ids[i]])
        except KeyError as exc:
            raise InvariantError(f"user {exc.args[0]!r} missing from the ordering") from exc
        return np.asarray(ranked, dtype=np.int64)


def bayes(prior: PriorMatrix, agg_profile: AggregateProfile) -> PosteriorMatrix:
    """Bayesian update of one user's prior with the aggregate profile.

    Per epoch the posterior is the renormalized elementwise product of the
    prior and aggregate-profile columns.  All-zero prior columns carry no
    information and are treated as uniform; zero-evidence products fall back
    to the prior column unchanged.
    """
    if prior.kind != PROBABILISTIC:
        raise InvariantError("bayes expects a probabilistic prior")
    if prior.cells.shape != agg_profile.cells.shape:
        raise InvariantError("prior and aggregate profile shapes differ")

    p = np.array(prior.cells, dtype=np.float64)
    blank = p.sum(axis=0) == 0
    if blank.any():
        log.debug("user %s: %d uninformative prior column(s) treated as uniform",
                  prior.user_id, int(blank.sum()))
        p[:, blank] = 1.0 / p.shape[0]

    product = p * agg_profile.cells
    sums = product.sum(axis=0)
    dead = sums <= 0
    if dead.any():
        log.debug("user %s: %d zero-evidence column(s) fall back to the prior",
                  prior.user_id, int(dead.sum()))
    cells = np.where(dead[None, :], p, product / np.where(dead, 1.0, sums))
    return PosteriorMatrix(prior.user_id, PROBABILISTIC, cells)


def sanitize_counts(
    noisy: NoisyAggregateSeries, user_count: int
) -> AggregateSeries:
    """Round half-up and clamp to [0, user_count] for count-consuming attacks."""
    rounded = np.floor(noisy.cells + 0.5)
    cells = np.clip(rounded, 0, user_count).astype(np.int64)
    return AggregateSeries(cells=cells, user_count=user_count)


def _stack_priors(priors: Sequence[PriorMatrix], agg: AggregateSeries) -> np.ndarray:
    if len(priors) != agg.user_count:
        raise InvariantError("priors must cover every user counted in the aggregate")
    shape = priors[0].cells.shape
    if any(p.cells.shape != shape for p in priors):
        raise InvariantError("priors must share one shape")
    if shape != agg.cells.shape:
        raise InvariantError("prior and aggregate shapes differ")
    return np.ascontiguousarray(np.stack([p.cells for p in priors]), dtype=np.float64)


def _clamped_counts(agg: AggregateSeries) -> np.ndarray:
    counts = np.ascontiguousarray(agg.cells, dtype=np.int64)
    over = counts > agg.user_count
    if over.any():
        log.warning("clamping %d aggregate cell(s) above the population size", int(over.sum()))
        counts = np.minimum(counts, agg.user_count)
    return counts


def max_roi(
    priors: Sequence[PriorMatrix], agg: AggregateSeries, ordering: UserOrdering
) -> list[PosteriorMatrix]:
    """Fill each ROI with its released count of most-probable users."""
    stacked = _stack_priors(priors, agg)
    counts = _clamped_counts(agg)
    order = ordering.order_for([p.user_id for p in priors])
    out = np.zeros(stacked.shape, dtype=np.uint8)
    kernels.top_k_fill(stacked, counts, order, out)
    return [
        PosteriorMatrix(p.user_id, ASSIGNMENT, out[i]) for i, p in enumerate(priors)
    ]


def max_user(
    priors: Sequence[PriorMatrix], agg: AggregateSeries, ordering: UserOrdering
) -> list[PosteriorMatrix]:
    """Assign users, in priority order, to their positive-prior ROIs."""
    stacked = _stack_priors(priors, agg)
    counts = _clamped_counts(agg)
    order = ordering.order_for([p.user_id for p in priors])
    out = np.zeros(stacked.shape, dtype=np.uint8)
    unconsumed = kernels.capacity_fill(stacked, counts, order, out)
    if unconsumed:
        log.info("max_user left %d aggregate mark(s) unconsumed", unconsumed)
    return [
        PosteriorMatrix(p.user_id, ASSIGNMENT, out[i]) for i, p in enumerate(priors)
    ]


def assignment_to_profile(post: PosteriorMatrix) -> PosteriorMatrix:
    """Turn a binary assignment into per-epoch distributions.

    Columns without any assignment predict the user out of the system
    (all mass on the null ROI).
    """
    if post.kind != ASSIGNMENT:
        raise InvariantError("assignment_to_profile expects an assignment matrix")
    cells = normalize_columns(post.cells, zero_to="null")
    return PosteriorMatrix(post.user_id, PROBABILISTIC, cells)
