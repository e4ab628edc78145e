"""Scoring: divergences, F1 localization, adversarial error, PL/PG, MRE.

Logarithms are base 2 throughout, which bounds the Jensen-Shannon divergence
(and hence its square root, the distance actually used) by 1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvariantError

log = logging.getLogger(__name__)

JS_PROFILE = "js_profile"
F1_LOCALIZATION = "f1_localization"


@dataclass(frozen=True)
class SlotScore:
    """One estimate's error: the reported total plus the per-epoch curve."""

    total: float
    per_slot: np.ndarray


@dataclass(frozen=True)
class ErrorReport:
    """Per-user adversarial error before and after exploiting the aggregates."""

    user_id: str
    metric: str
    prior_error: float
    posterior_error: float
    per_slot_errors: np.ndarray

    def __post_init__(self):
        for value in (self.prior_error, self.posterior_error):
            if not (0.0 <= value <= 1.0):
                raise InvariantError("errors must lie in [0, 1]")


@dataclass(frozen=True)
class PrivacyOutcome:
    """Per-user privacy loss (raw release) and gain (noisy release, if any)."""

    user_id: str
    pl: float
    pg: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.pl <= 1.0):
            raise InvariantError("PL must lie in [0, 1]")
        if self.pg is not None and not (0.0 <= self.pg <= 1.0):
            raise InvariantError("PG must lie in [0, 1]")


def kl_divergence(w: np.ndarray, x: np.ndarray) -> float:
    """KL divergence in bits; +inf when x lacks support where w has mass."""
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if w.shape != x.shape:
        raise InvariantError("distributions must have equal length")
    mask = w > 0
    if (x[mask] == 0).any():
        return math.inf
    return float(np.sum(w[mask] * np.log2(w[mask] / x[mask])))


def js_divergence_columns(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Column-wise JS divergence of two stacked distribution matrices."""
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if w.shape != x.shape:
        raise InvariantError("matrices must have equal shape")
    z = 0.5 * (w + x)
    with np.errstate(divide="ignore", invalid="ignore"):
        left = np.where(w > 0, w * (np.log2(np.where(w > 0, w, 1.0)) - np.log2(np.where(z > 0, z, 1.0))), 0.0)
        right = np.where(x > 0, x * (np.log2(np.where(x > 0, x, 1.0)) - np.log2(np.where(z > 0, z, 1.0))), 0.0)
    divergence = 0.5 * left.sum(axis=0) + 0.5 * right.sum(axis=0)
    return np.clip(divergence, 0.0, 1.0)


def js_distance(w: np.ndarray, x: np.ndarray) -> float:
    """Jensen-Shannon distance (the metric): sqrt of the JS divergence."""
    w = np.asarray(w, dtype=np.float64).reshape(-1, 1)
    x = np.asarray(x, dtype=np.float64).reshape(-1, 1)
    return float(np.sqrt(js_divergence_columns(w, x)[0]))


def profiling_error(truth_profile: np.ndarray, estimate: np.ndarray) -> SlotScore:
    """Mean per-epoch JS distance between truth and estimated profiles.

    All-zero estimate columns (no information) are scored against the
    uniform distribution.
    """
    truth = np.asarray(truth_profile, dtype=np.float64)
    estimate = np.array(estimate, dtype=np.float64)
    if truth.shape != estimate.shape:
        raise InvariantError("profile shapes differ")
    blank = estimate.sum(axis=0) == 0
    if blank.any():
        log.debug("profiling_error: %d blank column(s) scored as uniform", int(blank.sum()))
        estimate[:, blank] = 1.0 / estimate.shape[0]
    per_slot = np.sqrt(js_divergence_columns(truth, estimate))
    return SlotScore(total=float(per_slot.mean()), per_slot=per_slot)


def _f1_error(tp: np.ndarray, fp: np.ndarray, fn: np.ndarray):
    # zero denominator means neither matrix has a positive: a perfect match
    denominator = 2 * tp + fp + fn
    f1 = np.where(denominator > 0, 2 * tp / np.where(denominator > 0, denominator, 1), 1.0)
    return 1.0 - f1


def localization_error(truth: np.ndarray, estimate: np.ndarray) -> SlotScore:
    """1 - F1 of the predicted presence marks, counted over all cells.

    F1 is 0 (error 1) when there are no true positives but some mistake;
    a prediction identical to the truth scores error 0.  The per-slot curve
    applies the same convention column by column.
    """
    truth = np.asarray(truth)
    estimate = np.asarray(estimate)
    if truth.shape != estimate.shape:
        raise InvariantError("matrix shapes differ")
    if not np.isin(truth, (0, 1)).all() or not np.isin(estimate, (0, 1)).all():
        raise InvariantError("localization inputs must be binary")
    t = truth.astype(bool)
    e = estimate.astype(bool)
    tp = (t & e).sum(axis=0)
    fp = (~t & e).sum(axis=0)
    fn = (t & ~e).sum(axis=0)
    per_slot = _f1_error(tp.astype(np.float64), fp.astype(np.float64), fn.astype(np.float64))
    total = float(_f1_error(
        np.float64(tp.sum()), np.float64(fp.sum()), np.float64(fn.sum())
    ))
    return SlotScore(total=total, per_slot=per_slot)


def privacy_loss(err_prior: float, err_posterior: float) -> float:
    """Normalized error reduction the aggregates gave the adversary."""
    if err_prior != 0 and err_posterior < err_prior:
        return abs(err_posterior - err_prior) / err_prior
    return 0.0


def privacy_gain(err_raw: float, err_noisy: float) -> float:
    """Normalized error increase a noisy release caused versus the raw one."""
    if err_raw != 1 and err_noisy > err_raw:
        return (err_noisy - err_raw) / (1.0 - err_raw)
    return 0.0


def mre(y: np.ndarray, y_noisy: np.ndarray, beta_fraction: float = 0.001) -> float:
    """Mean relative error with a sanity bound for very small counts.

    beta = beta_fraction * sum(y); each point's deviation is divided by
    max(beta, y_i).
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    y_noisy = np.asarray(y_noisy, dtype=np.float64).ravel()
    if y.size == 0:
        raise InvariantError("mre needs a non-empty series")
    if y.shape != y_noisy.shape:
        raise InvariantError("series lengths differ")
    beta = beta_fraction * float(y.sum())
    return float(np.mean(np.abs(y_noisy - y) / np.maximum(beta, y)))
