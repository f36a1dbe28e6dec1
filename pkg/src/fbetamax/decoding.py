"""Plug-in decoding: from estimated statistic means to a labeling.

The decoder minimizes <q, loss_coeffs(yhat)> over all 2^s labelings.  For a
fixed active count l the objective is a sum of per-tag terms, so the best
size-l labeling keeps the l smallest entries of one column of a precomputed
(tags x counts) score table; comparing the s column optima and the empty
labeling solves the full problem in O(s^3).  A direct enumeration oracle is
kept alongside for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fmeasure import BetaParam, LabelVec, StatVec, all_labelings, loss_coeffs_matrix

__all__ = [
    "MAX_BRUTE_S",
    "PROB_TOL",
    "DecodeInput",
    "decode_brute",
    "decode_fast",
    "decode_rows",
]

# entries of an estimated mean vector may overshoot [0, 1] by at most this
PROB_TOL = 1e-9

# enumeration guard: 2^20 candidates is the largest the oracle will scan
MAX_BRUTE_S = 20

_BRUTE_CACHE_MAX_S = 12
_BRUTE_CHUNK = 1 << 14


@dataclass(frozen=True)
class DecodeInput:
    """Estimated statistic means plus the beta they will be decoded under."""

    probs: StatVec
    beta: BetaParam

    def __post_init__(self) -> None:
        entries = self.probs.entries
        if not np.all(np.isfinite(entries)):
            raise ValueError("estimated means must be finite")
        if entries.min() < -PROB_TOL or entries.max() > 1.0 + PROB_TOL:
            raise ValueError(
                f"estimated means must lie in [0, 1] up to {PROB_TOL:g}; "
                f"saw range [{entries.min():g}, {entries.max():g}]"
            )


def _coeff_table(s: int, beta: BetaParam) -> np.ndarray:
    """(counts x sizes) table -(1+beta^2) / (beta^2 * k + l) for k, l in 1..s."""
    ks = np.arange(1, s + 1, dtype=np.float64)
    ls = np.arange(1, s + 1, dtype=np.float64)
    return -(1.0 + beta.beta_sq) / (beta.beta_sq * ks[:, None] + ls[None, :])


def decode_rows(prob_rows: np.ndarray, s: int, beta: BetaParam) -> tuple[np.ndarray, np.ndarray]:
    """Decode a batch of estimated mean vectors.

    prob_rows is (m, s^2+1); returns (bits, objectives) where bits is an
    (m, s) 0/1 matrix and objectives the attained minima of
    <q, loss_coeffs(yhat)>.  Ties resolve toward fewer active tags and,
    within a size, toward smaller tag indices.
    """
    P = np.asarray(prob_rows, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != s * s + 1:
        raise ValueError(f"expected shape (m, {s * s + 1}), got {P.shape}")
    if not np.all(np.isfinite(P)):
        raise ValueError("estimated means must be finite")
    if P.min() < -PROB_TOL or P.max() > 1.0 + PROB_TOL:
        raise ValueError(f"estimated means must lie in [0, 1] up to {PROB_TOL:g}")
    m = P.shape[0]
    Q = P[:, 1:].reshape(m, s, s)
    T = Q @ _coeff_table(s, beta)
    # stable sort keeps the smallest tag first among tied per-tag scores
    order = np.argsort(T, axis=1, kind="stable")
    best_by_size = np.cumsum(np.take_along_axis(T, order, axis=1), axis=1)
    diag = np.arange(s)
    # column l-1 after the cumsum holds the optimum over labelings of size l
    objectives = np.concatenate([-P[:, :1], best_by_size[:, diag, diag]], axis=1)
    # argmin takes the first minimum, i.e. the smallest size among exact ties
    choice = np.argmin(objectives, axis=1)
    bits = np.zeros((m, s), dtype=np.uint8)
    for size in range(1, s + 1):
        rows = np.flatnonzero(choice == size)
        if rows.size:
            bits[rows[:, None], order[rows, :size, size - 1]] = 1
    return bits, objectives[np.arange(m), choice]


def decode_fast(inp: DecodeInput) -> LabelVec:
    """Minimize <q, loss_coeffs(yhat)> over all labelings in O(s^3)."""
    s = inp.probs.s
    bits, _ = decode_rows(inp.probs.entries[None, :], s, inp.beta)
    return LabelVec(tuple(int(b) for b in bits[0]))


@lru_cache(maxsize=64)
def _enumeration_tables(s: int, beta_value: float):
    """All candidate labelings with their coefficient rows and tie keys."""
    bits = all_labelings(s)
    coeffs = loss_coeffs_matrix(bits, BetaParam(beta_value))
    pop = bits.sum(axis=1).astype(np.int64)
    # lexicographic rank of the bit tuple: tag 1 is the most significant
    lex = (bits.astype(np.int64) * (1 << (s - 1 - np.arange(s, dtype=np.int64)))).sum(axis=1)
    tie = pop * (1 << s) + lex
    return bits, coeffs, tie


def _tie_keys(bits: np.ndarray, s: int) -> np.ndarray:
    pop = bits.sum(axis=1).astype(np.int64)
    lex = (bits.astype(np.int64) * (1 << (s - 1 - np.arange(s, dtype=np.int64)))).sum(axis=1)
    return pop * (1 << s) + lex


def decode_brute(inp: DecodeInput) -> LabelVec:
    """Enumeration oracle for decode_fast; refuses s > MAX_BRUTE_S.

    Scans every labeling and evaluates <q, loss_coeffs(yhat)> straight from
    the coefficient definition.  Exact ties resolve toward smaller popcount,
    then toward the lexicographically smallest bit tuple.
    """
    s = inp.probs.s
    if s > MAX_BRUTE_S:
        raise ValueError(f"brute-force decoding is limited to s <= {MAX_BRUTE_S}")
    q = inp.probs.entries
    if s <= _BRUTE_CACHE_MAX_S:
        bits, coeffs, tie = _enumeration_tables(s, inp.beta.beta)
        objs = coeffs @ q
        cand = np.flatnonzero(objs == objs.min())
        winner = cand[np.argmin(tie[cand])]
        return LabelVec(tuple(int(b) for b in bits[winner]))

    best_obj = np.inf
    best_tie = -1
    best_bits: np.ndarray | None = None
    tags = np.arange(s, dtype=np.int64)
    for start in range(0, 1 << s, _BRUTE_CHUNK):
        codes = np.arange(start, min(start + _BRUTE_CHUNK, 1 << s), dtype=np.int64)
        bits = ((codes[:, None] >> tags[None, :]) & 1).astype(np.uint8)
        objs = loss_coeffs_matrix(bits, inp.beta) @ q
        tie = _tie_keys(bits, s)
        cand = np.flatnonzero(objs == objs.min())
        local = cand[np.argmin(tie[cand])]
        if objs[local] < best_obj or (objs[local] == best_obj and tie[local] < best_tie):
            best_obj = float(objs[local])
            best_tie = int(tie[local])
            best_bits = bits[local].copy()
    assert best_bits is not None
    return LabelVec(tuple(int(b) for b in best_bits))
