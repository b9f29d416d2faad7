"""PCA fitting and dimension selection (none / most / least relevant).

"Relevance" of a principal direction is its explained-variance rank. The
covariance divisor is n (not n-1) and eigenvector signs follow a fixed
convention so repeated fits are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODES = ("none", "most", "least")


@dataclass
class PcaModel:
    mean: np.ndarray        # (K,)
    components: np.ndarray  # (K, K), rows are principal directions, variance-descending
    variances: np.ndarray   # (K,), >= 0, sorted descending

    @property
    def K(self) -> int:
        return self.mean.shape[0]

    def explained_variance_ratio(self) -> np.ndarray:
        total = self.variances.sum()
        if total <= 0:
            return np.zeros_like(self.variances)
        return self.variances / total


@dataclass
class ReducedFeatures:
    matrix: np.ndarray  # (n, k)
    mode: str
    k: int


def fit_pca(features) -> PcaModel:
    """Fit PCA on `features` (n x K) with covariance divisor n.

    Directions come from the SVD of the centered data; sign convention:
    the largest-magnitude coordinate of each component is positive (first
    such coordinate on magnitude ties).
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"features must be a matrix, got ndim={X.ndim}")
    n, K = X.shape
    if n == 0:
        raise ValueError("cannot fit PCA on an empty matrix")

    mean = X.mean(axis=0)
    centered = X - mean
    # full_matrices so components span all K directions even when n < K
    _, svals, vt = np.linalg.svd(centered, full_matrices=True)
    variances = np.zeros(K)
    variances[: svals.size] = (svals ** 2) / n
    variances = np.maximum(variances, 0.0)

    # svals come out descending; stable re-sort keeps tie order deterministic
    order = np.argsort(-variances, kind="stable")
    variances = variances[order]
    components = vt[order]

    lead = np.argmax(np.abs(components), axis=1)
    flip = components[np.arange(K), lead] < 0
    components[flip] *= -1.0

    return PcaModel(mean=mean, components=components, variances=variances)


def select_dimensions(model: PcaModel, features, mode: str, k: int) -> ReducedFeatures:
    """Project onto the k most/least relevant directions, or pass through.

    mode "none" returns the features untouched and requires k == K;
    "most" keeps the k top-variance directions, "least" the k
    bottom-variance ones (still ordered by descending variance).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    X = np.asarray(features, dtype=np.float64)
    K = model.K
    if X.ndim != 2 or X.shape[1] != K:
        raise ValueError(f"features must be n x {K}")

    if mode == "none":
        if k != K:
            raise ValueError(f"mode 'none' forces k == K ({K}), got k={k}")
        return ReducedFeatures(matrix=X, mode=mode, k=K)

    if not 1 <= k <= K:
        raise ValueError(f"k must lie in [1, {K}], got {k}")
    rows = model.components[:k] if mode == "most" else model.components[K - k:]
    projected = (X - model.mean) @ rows.T
    return ReducedFeatures(matrix=projected, mode=mode, k=k)
