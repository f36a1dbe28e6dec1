"""Synthetic label distributions whose statistic means are exactly linear-logistic.

A distribution is a random Dirichlet prior over a support of labelings, a
full-row-rank matrix mapping features to statistic logits, and its
pseudo-inverse.  Each point draws its own outcome probabilities from the
prior, computes the implied statistic means q, and places the feature
vector at the pre-image of logit(q), so the identity q(x) = sigmoid(Wx)
holds by construction and a linear-logistic estimator is well-specified.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import evaluation
from .fmeasure import BetaParam, LabelVec, StatVec, all_labelings, label_stats_matrix
from .losses import logit_link
from .training import Dataset

__all__ = [
    "SamplePoint",
    "SynthDistribution",
    "SynthSample",
    "bayes_f_accuracy",
    "build_distribution",
    "sample_batch",
    "sample_point",
    "to_dataset",
]

_PINV_RESIDUAL_TOL = 1e-8
_BUILD_ATTEMPTS = 5

SUPPORTS = ("full", "exclusive")


@dataclass(frozen=True)
class SynthDistribution:
    """Frozen description of one synthetic task; all sampling derives from seed."""

    s: int
    d: int
    seed: int
    support: str
    concentration: np.ndarray
    support_bits: np.ndarray
    support_stats: np.ndarray
    logit_map: np.ndarray
    logit_map_pinv: np.ndarray

    def __post_init__(self) -> None:
        for name in ("concentration", "support_bits", "support_stats",
                     "logit_map", "logit_map_pinv"):
            arr = getattr(self, name)
            arr.flags.writeable = False

    @property
    def n_outcomes(self) -> int:
        return self.support_bits.shape[0]


def _support_bits(s: int, support: str) -> np.ndarray:
    if support == "full":
        return all_labelings(s)
    if support == "exclusive":
        # empty labeling plus the s one-hot labelings: tags never co-occur,
        # which starves independent per-tag marginals of signal
        bits = np.zeros((s + 1, s), dtype=np.uint8)
        bits[1:] = np.eye(s, dtype=np.uint8)
        return bits
    raise ValueError(f"support must be one of {SUPPORTS}, got {support!r}")


def build_distribution(
    seed: int, s: int = 6, d: int = 100, support: str = "full"
) -> SynthDistribution:
    """Draw the prior and the logit map; retries if the map is rank-deficient.

    The map W is (s^2+1) x d with uniform [0,1] entries, so it needs
    d >= s^2+1 to have full row rank; its pseudo-inverse W^T (W W^T)^{-1}
    comes from a symmetric solve and is verified to satisfy
    W @ pinv = identity within a small residual.
    """
    rows = s * s + 1
    if rows > d:
        raise ValueError(f"need d >= s^2+1 = {rows} features, got d={d}")
    bits = _support_bits(s, support)
    stats = label_stats_matrix(bits)
    rng = np.random.default_rng(seed)
    concentration = rng.uniform(0.1, 1.0, size=bits.shape[0])
    for _ in range(_BUILD_ATTEMPTS):
        logit_map = rng.uniform(0.0, 1.0, size=(rows, d))
        gram = logit_map @ logit_map.T
        try:
            factor = cho_factor(gram)
        except np.linalg.LinAlgError:
            continue
        pinv = cho_solve(factor, logit_map).T
        residual = np.max(np.abs(logit_map @ pinv - np.eye(rows)))
        if residual <= _PINV_RESIDUAL_TOL:
            return SynthDistribution(
                s=s,
                d=d,
                seed=seed,
                support=support,
                concentration=concentration,
                support_bits=bits,
                support_stats=stats,
                logit_map=logit_map,
                logit_map_pinv=pinv,
            )
    raise ValueError("could not draw a full-row-rank logit map")


@dataclass(frozen=True)
class SamplePoint:
    """One draw: features, sampled labeling, outcome probabilities, true means."""

    features: np.ndarray
    labeling: LabelVec
    outcome_probs: np.ndarray
    stat_probs: StatVec


def _point_rng(dist: SynthDistribution, index: int, stream: int) -> np.random.Generator:
    # one child stream per (stream, index): draws are order-independent
    return np.random.default_rng(
        np.random.SeedSequence(entropy=dist.seed, spawn_key=(stream, index))
    )


def sample_point(dist: SynthDistribution, index: int, stream: int = 0) -> SamplePoint:
    """Draw point `index` of the given stream; deterministic in (seed, stream, index).

    Per point: outcome probabilities from the Dirichlet prior via
    per-component Gamma draws, statistic means q as their mixture, features
    as the pseudo-inverse image of logit(q), and a labeling sampled from
    the outcome probabilities.
    """
    rng = _point_rng(dist, index, stream)
    gamma = rng.standard_gamma(dist.concentration)
    p = gamma / gamma.sum()
    q = dist.support_stats.T @ p
    x = dist.logit_map_pinv @ logit_link(q)
    outcome = int(rng.choice(dist.n_outcomes, p=p))
    return SamplePoint(
        features=x,
        labeling=LabelVec(tuple(int(b) for b in dist.support_bits[outcome])),
        outcome_probs=p,
        stat_probs=StatVec(dist.s, q),
    )


@dataclass(frozen=True)
class SynthSample:
    """A batch of draws with the per-point true statistic means kept alongside."""

    features: np.ndarray
    labels: tuple[LabelVec, ...]
    stat_probs: np.ndarray

    @property
    def m(self) -> int:
        return len(self.labels)


def sample_batch(dist: SynthDistribution, n: int, stream: int = 0) -> SynthSample:
    """Draw points 0..n-1 of a stream as one batch."""
    if n < 1:
        raise ValueError("batch size must be >= 1")
    features = np.empty((n, dist.d))
    stat_probs = np.empty((n, dist.s * dist.s + 1))
    labels = []
    for i in range(n):
        point = sample_point(dist, i, stream)
        features[i] = point.features
        stat_probs[i] = point.stat_probs.entries
        labels.append(point.labeling)
    return SynthSample(features=features, labels=tuple(labels), stat_probs=stat_probs)


def to_dataset(dist: SynthDistribution, sample: SynthSample) -> Dataset:
    from scipy import sparse

    return Dataset(
        s=dist.s,
        d=dist.d,
        features=sparse.csr_matrix(sample.features),
        labels=sample.labels,
    )


def bayes_f_accuracy(dist: SynthDistribution, stat_probs: np.ndarray | Iterable[StatVec],
                     beta: BetaParam) -> float:
    """Mean expected F-beta of the optimal decoder on points with known means."""
    if not isinstance(stat_probs, np.ndarray):
        stat_probs = np.stack([sv.entries for sv in stat_probs])
    return evaluation.bayes_f(stat_probs, dist.s, beta)
