"""Regularized linear estimation of the per-coordinate class probabilities.

Every active statistic coordinate gets its own binary logistic model over
the shared sparse features; the count-zero baseline additionally reuses the
same solver for multinomial blocks.  Solvers run full-batch limited-memory
quasi-Newton with analytic gradients, so results are deterministic for a
fixed dataset and configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import minimize
from scipy.special import expit, logsumexp

from .decoding import decode_rows
from .fmeasure import BetaParam, LabelVec, StatIndex, StatVec
from .surrogate import SurrogateConfig, binary_targets

__all__ = [
    "Dataset",
    "LinearModel",
    "MultinomialFit",
    "SubproblemReport",
    "TrainConfig",
    "fit_binary_logistic",
    "multinomial_prob_rows",
    "train_multinomial",
    "train_surrogate",
]


@dataclass(frozen=True)
class Dataset:
    """A multi-label sample: sparse features plus one labeling per row."""

    s: int
    d: int
    features: sparse.csr_matrix
    labels: tuple[LabelVec, ...]

    def __post_init__(self) -> None:
        if self.s < 1 or self.d < 1:
            raise ValueError("s and d must be >= 1")
        feats = sparse.csr_matrix(self.features, dtype=np.float64)
        if feats.shape != (len(self.labels), self.d):
            raise ValueError(
                f"feature matrix is {feats.shape}, expected ({len(self.labels)}, {self.d})"
            )
        if any(y.s != self.s for y in self.labels):
            raise ValueError("every labeling must cover all s tags")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def m(self) -> int:
        return len(self.labels)

    @cached_property
    def observed_counts(self) -> frozenset[int]:
        """Active-tag counts that occur in the sample, including 0."""
        return frozenset(y.popcount for y in self.labels)


@dataclass(frozen=True)
class TrainConfig:
    """Solver settings shared by every subproblem.

    reg_lambda scales an L2 penalty of reg_lambda/2 * ||w||^2 on the
    non-bias weights, on top of the mean (not summed) loss.  The bias is
    fit by default; disable it when the target scores are known to be
    linear through the origin.
    """

    reg_lambda: float = 1e-4
    max_iters: int = 500
    grad_tol: float = 1e-6
    bias: bool = True

    def __post_init__(self) -> None:
        if not np.isfinite(self.reg_lambda) or self.reg_lambda < 0.0:
            raise ValueError("reg_lambda must be a finite non-negative real")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.grad_tol > 0.0:
            raise ValueError("grad_tol must be positive")


@dataclass(frozen=True)
class SubproblemReport:
    """Terminal state of one convex solve; converged means the gradient test passed."""

    name: str
    objective: float
    grad_norm: float
    iterations: int
    converged: bool


def _as_feature_matrix(X, d: int) -> sparse.csr_matrix:
    if sparse.issparse(X):
        X = X.tocsr()
    else:
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[None, :]
        X = sparse.csr_matrix(arr)
    if X.shape[1] != d:
        raise ValueError(f"features have {X.shape[1]} columns, model expects {d}")
    return X


def fit_binary_logistic(
    X: sparse.csr_matrix, targets: np.ndarray, cfg: TrainConfig, name: str = "binary"
) -> tuple[np.ndarray, SubproblemReport]:
    """Minimize mean logistic loss + reg_lambda/2 * ||w||^2 over w (and bias).

    targets are 0/1 per row.  Returns a length-(d+1) weight vector whose
    last entry is the bias (zero when the bias is disabled) and the solver
    report.  The data are consumed through sparse products only.
    """
    m, d = X.shape
    if m == 0:
        raise ValueError("cannot train on an empty dataset")
    a = np.asarray(targets, dtype=np.float64)
    if a.shape != (m,):
        raise ValueError("one binary target per row is required")
    t = 2.0 * a - 1.0
    Xt = X.T.tocsr()

    def objective(wb: np.ndarray):
        w = wb[:d]
        b = wb[d] if cfg.bias else 0.0
        z = X @ w + b
        zt = t * z
        loss = float(np.mean(np.maximum(0.0, -zt) + np.log1p(np.exp(-np.abs(zt)))))
        obj = loss + 0.5 * cfg.reg_lambda * float(w @ w)
        r = (expit(z) - a) / m
        gw = Xt @ r + cfg.reg_lambda * w
        if cfg.bias:
            return obj, np.concatenate([gw, [r.sum()]])
        return obj, gw

    dim = d + 1 if cfg.bias else d
    res = minimize(
        objective,
        np.zeros(dim),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": cfg.max_iters, "gtol": cfg.grad_tol, "ftol": 1e-12},
    )
    weights = np.zeros(d + 1)
    weights[:d] = res.x[:d]
    if cfg.bias:
        weights[d] = res.x[d]
    grad_norm = float(np.max(np.abs(res.jac)))
    report = SubproblemReport(
        name=name,
        objective=float(res.fun),
        grad_norm=grad_norm,
        iterations=int(res.nit),
        converged=grad_norm <= cfg.grad_tol,
    )
    return weights, report


@dataclass(frozen=True)
class LinearModel:
    """One linear scorer per active statistic coordinate.

    weights has one row per active coordinate, each of length d+1 with the
    bias last.  Scores at inactive coordinates are -inf so the inverse link
    sends them to probability exactly 0.
    """

    s: int
    d: int
    beta: BetaParam
    active_indices: tuple[StatIndex, ...]
    weights: np.ndarray
    bias: bool
    reg_lambda: float
    reports: tuple[SubproblemReport, ...] = ()

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=np.float64)
        expected = (len(self.active_indices), self.d + 1)
        if weights.shape != expected:
            raise ValueError(f"weights must have shape {expected}, got {weights.shape}")
        if not np.all(np.isfinite(weights)):
            raise ValueError("model weights must be finite")
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "active_indices", tuple(self.active_indices))

    @cached_property
    def active_flats(self) -> np.ndarray:
        flats = np.array([ix.flat(self.s) for ix in self.active_indices], dtype=np.intp)
        flats.flags.writeable = False
        return flats

    def score_rows(self, X) -> np.ndarray:
        """(m, n_active) raw scores for a feature matrix."""
        X = _as_feature_matrix(X, self.d)
        return X @ self.weights[:, : self.d].T + self.weights[:, self.d]

    def stat_prob_rows(self, X) -> np.ndarray:
        """(m, s^2+1) estimated means; inactive coordinates are exactly 0."""
        X = _as_feature_matrix(X, self.d)
        out = np.zeros((X.shape[0], self.s * self.s + 1))
        out[:, self.active_flats] = expit(self.score_rows(X))
        return out

    def predict_rows(self, X) -> np.ndarray:
        """(m, s) decoded labelings as a bit matrix."""
        bits, _ = decode_rows(self.stat_prob_rows(X), self.s, self.beta)
        return bits

    def predict_scores(self, x) -> StatVec:
        """Scores for a single feature row; -inf marks inactive coordinates."""
        scores = self.score_rows(x)[0]
        entries = np.full(self.s * self.s + 1, -np.inf)
        entries[self.active_flats] = scores
        return StatVec(self.s, entries)

    def predict_stat_probs(self, x) -> StatVec:
        """Estimated statistic means for a single feature row."""
        entries = np.zeros(self.s * self.s + 1)
        entries[self.active_flats] = expit(self.score_rows(x)[0])
        return StatVec(self.s, entries)

    def predict(self, x) -> LabelVec:
        bits = self.predict_rows(x)
        return LabelVec(tuple(int(b) for b in bits[0]))


def train_surrogate(data: Dataset, cfg: TrainConfig, scfg: SurrogateConfig) -> LinearModel:
    """Fit one binary logistic model per active coordinate of scfg."""
    if data.m == 0:
        raise ValueError("cannot train on an empty dataset")
    if data.s != scfg.s:
        raise ValueError("dataset and surrogate config disagree on the tag count")
    weights = np.empty((len(scfg.active_indices), data.d + 1))
    reports = []
    for row, index in enumerate(scfg.active_indices):
        targets = binary_targets(data, index)
        weights[row], report = fit_binary_logistic(
            data.features, targets, cfg, name=str(index)
        )
        reports.append(report)
    return LinearModel(
        s=data.s,
        d=data.d,
        beta=scfg.beta,
        active_indices=scfg.active_indices,
        weights=weights,
        bias=cfg.bias,
        reg_lambda=cfg.reg_lambda,
        reports=tuple(reports),
    )


@dataclass(frozen=True)
class MultinomialFit:
    """Weights of a C-class softmax block: shape (C, d+1), bias last."""

    weights: np.ndarray
    report: SubproblemReport


def train_multinomial(
    data: Dataset, class_of: Sequence[int], n_classes: int, cfg: TrainConfig, name: str = "multinomial"
) -> MultinomialFit:
    """Fit a softmax block: mean cross-entropy + reg_lambda/2 * ||W||^2 (biases free)."""
    if data.m == 0:
        raise ValueError("cannot train on an empty dataset")
    if n_classes < 2:
        raise ValueError("a multinomial block needs at least two classes")
    labels = np.asarray(class_of, dtype=np.intp)
    if labels.shape != (data.m,):
        raise ValueError("one class per row is required")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError(f"class indices must lie in 0..{n_classes - 1}")
    X = data.features
    m, d = X.shape
    Xt = X.T.tocsr()
    rows = np.arange(m)

    def objective(flat: np.ndarray):
        W = flat.reshape(n_classes, d + 1)
        Z = X @ W[:, :d].T
        if cfg.bias:
            Z = Z + W[:, d]
        lse = logsumexp(Z, axis=1)
        loss = float(np.mean(lse - Z[rows, labels]))
        obj = loss + 0.5 * cfg.reg_lambda * float(np.sum(W[:, :d] * W[:, :d]))
        P = np.exp(Z - lse[:, None])
        P[rows, labels] -= 1.0
        P /= m
        G = np.empty_like(W)
        G[:, :d] = (Xt @ P).T + cfg.reg_lambda * W[:, :d]
        G[:, d] = P.sum(axis=0) if cfg.bias else 0.0
        return obj, G.ravel()

    res = minimize(
        objective,
        np.zeros(n_classes * (d + 1)),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": cfg.max_iters, "gtol": cfg.grad_tol, "ftol": 1e-12},
    )
    W = res.x.reshape(n_classes, d + 1).copy()
    if not cfg.bias:
        W[:, d] = 0.0
    grad_norm = float(np.max(np.abs(res.jac)))
    report = SubproblemReport(
        name=name,
        objective=float(res.fun),
        grad_norm=grad_norm,
        iterations=int(res.nit),
        converged=grad_norm <= cfg.grad_tol,
    )
    return MultinomialFit(weights=W, report=report)


def multinomial_prob_rows(weights: np.ndarray, X, bias: bool = True) -> np.ndarray:
    """(m, C) softmax probabilities of a fitted multinomial block."""
    weights = np.asarray(weights, dtype=np.float64)
    d = weights.shape[1] - 1
    X = _as_feature_matrix(X, d)
    Z = X @ weights[:, :d].T
    if bias:
        Z = Z + weights[:, d]
    Z -= logsumexp(Z, axis=1)[:, None]
    return np.exp(Z)
