"""Differential-privacy defenses for aggregate time-series.

Output perturbation (per-cell Laplace counters and Fourier-domain noise) and
input perturbation (randomized response with debiased estimation).  Every
mechanism is a pure function of (input, NoiseSpec): noise streams are derived
per ROI row (or per user, for randomized response) from the seed with a
counter-based scheme, so results are identical however the work is split
across threads.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvariantError
from .model import AggregateSeries, GroundTruthMatrix, NoisyAggregateSeries

log = logging.getLogger(__name__)

SCM = "scm"
FPA = "fpa"
RR = "rr"

SCALE_RULES = ("unit", "horizon", "sensitivity", "full")

# stream tags keep the per-mechanism substreams disjoint under one seed
_STREAM_TAG = {SCM: 1, FPA: 2, RR: 3}


@dataclass(frozen=True)
class NoiseSpec:
    """Mechanism identifier plus its parameters and a deterministic seed."""

    mechanism: str
    epsilon: float
    seed: int
    scale_rule: str | None = None
    k: int | None = None
    p: float | None = None
    delta_sensitivity: int | None = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise InvariantError("epsilon must be positive")
        if self.mechanism == SCM:
            if self.scale_rule not in SCALE_RULES:
                raise InvariantError(f"scm needs scale_rule in {SCALE_RULES}")
            if self.scale_rule == "sensitivity":
                if self.delta_sensitivity is None or self.delta_sensitivity < 1:
                    raise InvariantError("sensitivity rule needs delta_sensitivity >= 1")
            if self.k is not None or self.p is not None:
                raise InvariantError("scm takes no k or p parameter")
        elif self.mechanism == FPA:
            if self.k is None or self.k < 1:
                raise InvariantError("fpa needs a positive k")
            if self.scale_rule is not None or self.p is not None:
                raise InvariantError("fpa takes no scale_rule or p parameter")
        elif self.mechanism == RR:
            if self.p is None or not (0.0 < self.p < 1.0):
                raise InvariantError("rr needs p in (0, 1)")
            if self.scale_rule is not None or self.k is not None:
                raise InvariantError("rr takes no scale_rule or k parameter")
        else:
            raise InvariantError(f"unknown mechanism {self.mechanism!r}")


@dataclass(frozen=True)
class PrivacyAccount:
    """Guarantee bookkeeping: per-slot budget, composed total and a note."""

    per_slot_epsilon: float
    composed_epsilon: float
    composition_note: str

    def __post_init__(self):
        if self.composed_epsilon < self.per_slot_epsilon:
            raise InvariantError("composed guarantee cannot be below the per-slot one")


def substream(seed: int, mechanism: str, index: int) -> np.random.Generator:
    """Derive the deterministic noise stream for one row/user of a mechanism."""
    sequence = np.random.SeedSequence([seed, _STREAM_TAG[mechanism], index])
    return np.random.Generator(np.random.Philox(sequence))


def laplace_sample(scale: float, rng: np.random.Generator) -> float:
    """One Laplace(0, scale) draw via the inverse CDF of a uniform."""
    return float(laplace_noise(scale, 1, rng)[0])


def laplace_noise(scale: float, size, rng: np.random.Generator) -> np.ndarray:
    """Laplace(0, scale) draws; density (1/2b) exp(-|x|/b)."""
    if scale <= 0:
        raise InvariantError("laplace scale must be positive")
    u = rng.random(size) - 0.5
    magnitude = np.maximum(1.0 - 2.0 * np.abs(u), np.finfo(np.float64).tiny)
    return -scale * np.sign(u) * np.log(magnitude)


def max_user_contribution(users: Sequence[GroundTruthMatrix], window: range) -> int:
    """Empirical sensitivity: most non-null marks any user has in the window."""
    delta = max(u.report_count(window) for u in users)
    return max(delta, 1)


def _scm_scale(spec: NoiseSpec, n_rois: int, n_epochs: int) -> float:
    if spec.scale_rule == "unit":
        return 1.0 / spec.epsilon
    if spec.scale_rule == "horizon":
        return n_epochs / spec.epsilon
    if spec.scale_rule == "sensitivity":
        return spec.delta_sensitivity / spec.epsilon
    return n_rois * n_epochs / spec.epsilon  # full


_SCM_NOTES = {
    "unit": "Lap(1/eps) per cell: event-level, composes to |S|*|T'|*eps overall",
    "horizon": "Lap(|T'|/eps) per cell: eps per ROI series, composes to |S|*eps overall",
    "sensitivity": "Lap(delta/eps) per cell: eps overall at the empirical user sensitivity delta",
    "full": "Lap(|S|*|T'|/eps) per cell: eps overall, worst-case sensitivity",
}


def _account(composed: float, n_epochs: int, note: str) -> PrivacyAccount:
    return PrivacyAccount(
        per_slot_epsilon=composed / n_epochs,
        composed_epsilon=composed,
        composition_note=note,
    )


def scm_perturb(
    agg: AggregateSeries, spec: NoiseSpec
) -> tuple[NoisyAggregateSeries, PrivacyAccount]:
    """Simple counter mechanism: fresh independent Laplace noise per cell."""
    if spec.mechanism != SCM:
        raise InvariantError("spec is not an scm NoiseSpec")
    n_rois, n_epochs = agg.cells.shape
    scale = _scm_scale(spec, n_rois, n_epochs)
    noisy = np.empty((n_rois, n_epochs), dtype=np.float64)
    for row in range(n_rois):
        rng = substream(spec.seed, SCM, row)
        noisy[row] = agg.cells[row] + laplace_noise(scale, n_epochs, rng)
    composed = {
        "unit": n_rois * n_epochs * spec.epsilon,
        "horizon": n_rois * spec.epsilon,
        "sensitivity": spec.epsilon,
        "full": spec.epsilon,
    }[spec.scale_rule]
    account = _account(composed, n_epochs, _SCM_NOTES[spec.scale_rule])
    return (
        NoisyAggregateSeries(cells=noisy, provenance=spec, user_count=agg.user_count),
        account,
    )


def fpa_keep_k(series: np.ndarray, k: int) -> np.ndarray:
    """Project a real series onto its first k Fourier coefficients.

    Realized on the real-input DFT so the transform is a true projection:
    applying it twice equals applying it once, and k >= len//2 + 1 is the
    identity.
    """
    series = np.asarray(series, dtype=np.float64)
    n = series.shape[-1]
    if not (1 <= k <= n):
        raise InvariantError("k must lie in [1, series length]")
    spectrum = np.fft.rfft(series)
    spectrum[..., min(k, spectrum.shape[-1]) :] = 0.0
    return np.fft.irfft(spectrum, n=n)


def fpa_perturb(
    agg: AggregateSeries, spec: NoiseSpec
) -> tuple[NoisyAggregateSeries, PrivacyAccount]:
    """Fourier perturbation: noise the first k coefficients of each ROI series."""
    if spec.mechanism != FPA:
        raise InvariantError("spec is not an fpa NoiseSpec")
    n_rois, n_epochs = agg.cells.shape
    if not (1 <= spec.k <= n_epochs):
        raise InvariantError("k must lie in [1, |T'|]")
    scale = math.sqrt(spec.k * n_epochs) / spec.epsilon
    noisy = np.empty((n_rois, n_epochs), dtype=np.float64)
    for row in range(n_rois):
        rng = substream(spec.seed, FPA, row)
        spectrum = np.fft.rfft(agg.cells[row].astype(np.float64))
        kept = min(spec.k, spectrum.shape[0])
        noise = laplace_noise(scale, kept, rng) + 1j * laplace_noise(scale, kept, rng)
        spectrum[:kept] += noise
        spectrum[kept:] = 0.0
        noisy[row] = np.fft.irfft(spectrum, n=n_epochs)
    account = _account(
        n_rois * spec.epsilon,
        n_epochs,
        "eps-DP per ROI series (first k coefficients noised on both parts), "
        "composes to |S|*eps overall",
    )
    return (
        NoisyAggregateSeries(cells=noisy, provenance=spec, user_count=agg.user_count),
        account,
    )


def rr_perturb_and_estimate(
    users: Sequence[GroundTruthMatrix], window: range, spec: NoiseSpec
) -> tuple[NoisyAggregateSeries, PrivacyAccount]:
    """Randomized response: each user answers yes/truth per (ROI, epoch).

    With probability p the answer is "yes" regardless of the truth, else the
    true presence bit.  The aggregator debiases the per-cell yes-proportions
    into an estimate of the true counts (which may come out negative).
    """
    if spec.mechanism != RR:
        raise InvariantError("spec is not an rr NoiseSpec")
    if not users:
        raise InvariantError("rr needs at least one user")
    p = spec.p
    n_rois = users[0].roi_count
    n_epochs = len(window)
    yes = np.zeros((n_rois, n_epochs), dtype=np.int64)
    for index, user in enumerate(users):
        rng = substream(spec.seed, RR, index)
        draws = rng.random((n_rois, n_epochs))
        truth = user.window(window).astype(bool)
        yes += (draws < p) | ((draws >= p) & truth)
    total = len(users)
    p_yes = yes / total
    estimate = total * (p_yes - p) / (1.0 - p)
    per_slot = math.log((n_rois - (n_rois - 1) * p) / p)
    account = PrivacyAccount(
        per_slot_epsilon=per_slot,
        composed_epsilon=n_epochs * per_slot,
        composition_note=(
            "per-slot eps = ln((|S|-(|S|-1)p)/p), composes to |T'| times that overall"
        ),
    )
    return (
        NoisyAggregateSeries(cells=estimate, provenance=spec, user_count=total),
        account,
    )
