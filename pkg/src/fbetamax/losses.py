"""Strictly proper binary losses, their links, and pointwise regrets.

A binary class-probability loss here is a margin loss phi(y, u) with
y in {+1, -1} together with an invertible link gamma so that the expected
loss under P(y=+1) = q is minimized at u = gamma(q).  Only the logistic
instance ships, but everything downstream goes through a BinaryLossSpec
so another strictly proper loss can be dropped in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

__all__ = [
    "LOGISTIC",
    "PROB_CLIP",
    "BinaryLossSpec",
    "logistic_gradient",
    "logistic_loss",
    "logit_link",
    "pointwise_binary_regret",
    "sigmoid",
]

# probabilities are clipped into [PROB_CLIP, 1 - PROB_CLIP] before the link
PROB_CLIP = 1e-12


def _check_margin_inputs(y, u) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if not np.all(np.isfinite(u)):
        raise ValueError("scores must be finite")
    if not np.all((y == 1.0) | (y == -1.0)):
        raise ValueError("binary labels must be +1 or -1")
    return y, u


def logistic_loss(y, u):
    """ln(1 + exp(-y*u)) for y in {+1,-1}, overflow-safe for any magnitude of u.

    Evaluated as max(0, -z) + log1p(exp(-|z|)) with z = y*u.  Accepts scalars
    or broadcastable arrays and returns a matching scalar or array.
    """
    y, u = _check_margin_inputs(y, u)
    z = y * u
    val = np.maximum(0.0, -z) + np.log1p(np.exp(-np.abs(z)))
    return val.item() if val.ndim == 0 else val


def logistic_gradient(y, u):
    """d/du of logistic_loss: -y * sigmoid(-y*u)."""
    y, u = _check_margin_inputs(y, u)
    val = -y * expit(-y * u)
    return val.item() if val.ndim == 0 else val


def sigmoid(u):
    """Inverse of the logit link: 1 / (1 + exp(-u)), computed stably."""
    val = expit(np.asarray(u, dtype=np.float64))
    return val.item() if val.ndim == 0 else val


def logit_link(p):
    """ln(p / (1-p)) after clipping p into [PROB_CLIP, 1 - PROB_CLIP]."""
    p = np.clip(np.asarray(p, dtype=np.float64), PROB_CLIP, 1.0 - PROB_CLIP)
    val = np.log(p) - np.log1p(-p)
    return val.item() if val.ndim == 0 else val


@dataclass(frozen=True)
class BinaryLossSpec:
    """A strictly proper composite binary loss.

    strong_properness is the modulus lambda in
    pointwise regret >= (lambda / 2) * (inverse_link(u) - q)^2; it feeds the
    regret transfer bound and is 4 for the logistic loss.
    """

    name: str
    loss: Callable
    gradient: Callable
    link: Callable
    inverse_link: Callable
    strong_properness: float | None = None


LOGISTIC = BinaryLossSpec(
    name="logistic",
    loss=logistic_loss,
    gradient=logistic_gradient,
    link=logit_link,
    inverse_link=sigmoid,
    strong_properness=4.0,
)


def pointwise_binary_regret(q, u, spec: BinaryLossSpec = LOGISTIC):
    """Excess expected loss of score u at class-1 probability q.

    q * (phi(+1,u) - phi(+1,gamma(q))) + (1-q) * (phi(-1,u) - phi(-1,gamma(q))).
    For the logistic loss this is the KL divergence from Bernoulli(q) to
    Bernoulli(sigmoid(u)).  Non-negative up to clipping effects of order
    PROB_CLIP at the boundary.
    """
    q = np.asarray(q, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    best = spec.link(q)
    val = q * (spec.loss(1.0, u) - spec.loss(1.0, best)) + (1.0 - q) * (
        spec.loss(-1.0, u) - spec.loss(-1.0, best)
    )
    return val.item() if np.ndim(val) == 0 else val
