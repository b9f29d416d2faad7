"""Contributing-dimension signatures, relation matrices, and diversity counts.

A signature marks, per pruned dimension, whether a sample deviates from
the group centroid by strictly more than the threshold beta (1) or not
(0). Two samples are "same-structure" exactly when their signature bit
vectors are identical; this is the cosine==1 criterion with the zero
vector pair defined as equal, which keeps the relation an equivalence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class CdsRelation:
    """Pairwise same-structure matrix over a sample group."""

    matrix: np.ndarray  # (m, m) uint8, symmetric, unit diagonal
    group: np.ndarray   # the sample indices the rows/cols refer to

    @property
    def m(self) -> int:
        return self.matrix.shape[0]


class BetaUnattainableError(ValueError):
    """Requested ones-ratio cannot be met even at beta = 0."""

    def __init__(self, ratio: float, max_ratio: float):
        self.ratio = ratio
        self.max_ratio = max_ratio
        super().__init__(
            f"ones-ratio {ratio} unattainable: exact centroid ties cap the "
            f"ratio at {max_ratio:.6f} even for beta = 0"
        )


def class_centroid(reduced) -> np.ndarray:
    """Per-dimension mean of a group's reduced features (the prototype)."""
    X = np.asarray(reduced, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a non-empty m x k matrix")
    return X.mean(axis=0)


def cds_signatures(reduced, centroid, beta: float) -> np.ndarray:
    """Binary signature per sample: bit j is 1 iff |x_ij - mu_j| > beta.

    Strict inequality; deviations exactly equal to beta map to 0.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    X = np.asarray(reduced, dtype=np.float64)
    mu = np.asarray(centroid, dtype=np.float64)
    if X.ndim != 2 or mu.shape != (X.shape[1],):
        raise ValueError(
            f"centroid length {mu.shape} does not match feature width {X.shape}"
        )
    return (np.abs(X - mu) > beta).astype(np.uint8)


def signature_groups(signatures) -> np.ndarray:
    """Group id per sample; equal ids mean identical bit vectors."""
    sig = np.ascontiguousarray(signatures, dtype=np.uint8)
    if sig.ndim != 2:
        raise ValueError("signatures must be an m x k binary matrix")
    if sig.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    _, inverse = np.unique(sig, axis=0, return_inverse=True)
    return inverse.astype(np.int64)


def cds_relation(signatures, group=None) -> CdsRelation:
    """Relation matrix R with R[i][j] = 1 iff signatures i and j are identical."""
    sig = np.asarray(signatures, dtype=np.uint8)
    ids = signature_groups(sig)
    R = (ids[:, None] == ids[None, :]).astype(np.uint8)
    if group is None:
        group = np.arange(sig.shape[0], dtype=np.int64)
    return CdsRelation(matrix=R, group=np.asarray(group, dtype=np.int64))


def _subset_rows(signatures, subset):
    sig = np.asarray(signatures, dtype=np.uint8)
    idx = np.asarray(subset, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= sig.shape[0]):
        raise IndexError(f"subset index out of range [0, {sig.shape[0]})")
    return sig[idx] if idx.size else sig[:0]


def psi_count(signatures, subset) -> int:
    """Number of distinct signature types among the subset (0 for empty)."""
    rows = _subset_rows(signatures, subset)
    if rows.shape[0] == 0:
        return 0
    return int(np.unique(rows, axis=0).shape[0])


def cds_histogram(signatures, subset) -> dict[str, int]:
    """Count per distinct signature, keyed by its bit string ("0101...")."""
    rows = _subset_rows(signatures, subset)
    counts: dict[str, int] = {}
    for row in rows:
        key = "".join("1" if b else "0" for b in row)
        counts[key] = counts.get(key, 0) + 1
    return counts


def histogram_records(histogram: dict[str, int]) -> list[dict]:
    """JSON-ready records, largest count first (ties by bit string)."""
    items = sorted(histogram.items(), key=lambda kv: (-kv[1], kv[0]))
    return [{"bits": bits, "count": count} for bits, count in items]


def suggest_beta(reduced, centroid, ratio: float = 0.9) -> float:
    """Largest beta keeping the overall ones-fraction of signatures >= ratio.

    The ones-fraction is a nonincreasing step function of beta that drops
    at each distinct deviation value, so the answer is the predecessor
    float of the first deviation value v where the fraction falls below
    ratio: the returned beta satisfies the bound and its float successor
    does not.
    """
    if not 0 < ratio <= 1:
        raise ValueError(f"ratio must lie in (0, 1], got {ratio}")
    X = np.asarray(reduced, dtype=np.float64)
    mu = np.asarray(centroid, dtype=np.float64)
    dev = np.abs(X - mu).ravel()
    N = dev.size
    if N == 0:
        raise ValueError("need at least one deviation value")

    dev_sorted = np.sort(dev)
    # ones(beta) = #{dev > beta}; for each distinct value v, evaluate at beta=v
    values, first = np.unique(dev_sorted, return_index=True)
    for v, start in zip(values, first):
        # deviations strictly greater than v = everything past its last occurrence
        count_gt = N - int(np.searchsorted(dev_sorted, v, side="right"))
        if count_gt < ratio * N:
            if v <= 0.0:
                raise BetaUnattainableError(ratio, count_gt / N)
            return float(np.nextafter(v, -np.inf))
    # unreachable: the largest deviation always fails the bound for ratio > 0
    raise AssertionError("no infeasible deviation value found")
