"""Baseline coreset selectors for one sample group, plus similarity kernels.

Every selector is deterministic: equal scores break toward the lowest
index, and Random is seeded. All return a :class:`Coreset` of exactly
min(b, m) distinct group-local indices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensorio import Coreset

KERNELS = ("shifted-euclidean", "cosine-shifted", "inner-product-shifted")


@dataclass
class SimilarityMatrix:
    matrix: np.ndarray  # (m, m), symmetric, nonnegative
    kernel: str

    @property
    def m(self) -> int:
        return self.matrix.shape[0]


def pairwise_distances(vectors) -> np.ndarray:
    """Dense Euclidean distance matrix (exact zeros on the diagonal)."""
    V = np.asarray(vectors, dtype=np.float64)
    sq = np.sum(V * V, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (V @ V.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    d = np.sqrt(d2)
    # exact symmetry so argmax tie-breaks are order independent
    return (d + d.T) / 2.0


def similarity_matrix(vectors, kernel: str = "shifted-euclidean") -> SimilarityMatrix:
    """Nonnegative similarity matrix over row vectors.

    shifted-euclidean:     s_ij = d_max - d_ij with d_max the largest pairwise
                           Euclidean distance
    cosine-shifted:        s_ij = (1 + cos(v_i, v_j)) / 2, zero vectors count
                           as cosine 0
    inner-product-shifted: s_ij = <v_i, v_j> - min over all pairs
    """
    V = np.asarray(vectors, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] == 0:
        raise ValueError("need a non-empty m x g matrix")
    if not np.all(np.isfinite(V)):
        raise ValueError("non-finite input vectors")

    if kernel == "shifted-euclidean":
        d = pairwise_distances(V)
        s = d.max() - d
    elif kernel == "cosine-shifted":
        norms = np.linalg.norm(V, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        unit = V / safe[:, None]
        cos = unit @ unit.T
        zero = norms == 0
        cos[zero, :] = 0.0
        cos[:, zero] = 0.0
        np.clip(cos, -1.0, 1.0, out=cos)
        s = (1.0 + cos) / 2.0
    elif kernel == "inner-product-shifted":
        g = V @ V.T
        s = g - g.min()
    else:
        raise ValueError(f"kernel must be one of {KERNELS}, got {kernel!r}")
    s = (s + s.T) / 2.0
    np.maximum(s, 0.0, out=s)
    return SimilarityMatrix(matrix=s, kernel=kernel)


def gradient_proxy(probs, labels, features=None, mode: str = "bias") -> np.ndarray:
    """Last-layer gradient surrogate per sample.

    bias mode: p_i - onehot(y_i). full mode: flatten((p_i - onehot(y_i))
    outer f_i) followed by the bias part, width C*(k+1).
    """
    P = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if P.ndim != 2 or y.shape != (P.shape[0],):
        raise ValueError("probs must be m x C with aligned labels")
    m, C = P.shape
    if m and (y.min() < 0 or y.max() >= C):
        raise ValueError(f"labels out of range [0, {C})")
    if m and np.abs(P.sum(axis=1) - 1.0).max() > 1e-5:
        raise ValueError("probs rows must sum to 1 within 1e-5")

    residual = P.copy()
    residual[np.arange(m), y] -= 1.0
    if mode == "bias":
        return residual
    if mode != "full":
        raise ValueError(f"mode must be 'bias' or 'full', got {mode!r}")
    if features is None:
        raise ValueError("full mode needs features")
    F = np.asarray(features, dtype=np.float64)
    if F.shape[0] != m:
        raise ValueError("features row count mismatch")
    outer = residual[:, :, None] * F[:, None, :]   # (m, C, k)
    return np.concatenate([outer.reshape(m, -1), residual], axis=1)


def select_random(m: int, b: int, seed: int) -> Coreset:
    """Uniform sample of min(b, m) distinct indices, deterministic per seed."""
    if b < 0:
        raise ValueError(f"budget must be >= 0, got {b}")
    take = min(b, m)
    rng = np.random.default_rng(seed)
    idx = rng.choice(m, size=take, replace=False)
    return Coreset(indices=idx, provenance={"method": "random", "seed": seed})


def select_kcenter(reduced, b: int, centroid) -> Coreset:
    """Farthest-first coverage; seeded at the sample closest to the centroid."""
    X = np.asarray(reduced, dtype=np.float64)
    m = X.shape[0]
    if m == 0:
        raise ValueError("empty group")
    if b < 1:
        raise ValueError(f"budget must be >= 1, got {b}")
    take = min(b, m)

    mu = np.asarray(centroid, dtype=np.float64)
    d = pairwise_distances(X)
    first = int(np.argmin(np.linalg.norm(X - mu, axis=1)))
    selected = [first]
    min_dist = d[first].copy()
    while len(selected) < take:
        min_dist[selected] = -np.inf   # never re-pick
        nxt = int(np.argmax(min_dist))
        selected.append(nxt)
        min_dist = np.minimum(min_dist, d[nxt])
    return Coreset(indices=np.array(selected), provenance={"method": "kcg"})


def select_least_confidence(probs, b: int) -> Coreset:
    """The b samples whose top predicted probability is smallest."""
    P = np.asarray(probs, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] == 0:
        raise ValueError("probs required (m x C)")
    if b < 0:
        raise ValueError(f"budget must be >= 0, got {b}")
    maxp = P.max(axis=1)
    order = np.argsort(maxp, kind="stable")
    return Coreset(indices=order[: min(b, P.shape[0])], provenance={"method": "lc"})


def _facility_weights(sim: np.ndarray, selected: np.ndarray) -> np.ndarray:
    """Cluster sizes: each sample counts toward its most similar selected
    element, ties to the lowest-index selected one."""
    sel_sorted = np.sort(selected)
    owner_pos = np.argmax(sim[:, sel_sorted], axis=1)   # first max = lowest index
    owner = sel_sorted[owner_pos]
    counts = {int(j): 0 for j in selected}
    for j in owner:
        counts[int(j)] += 1
    return np.array([counts[int(j)] for j in selected], dtype=np.float64)


def select_craig(sim: SimilarityMatrix, b: int) -> Coreset:
    """Greedy facility-location maximization from the empty set.

    Marginal gain of e given S is sum_i max(0, s(i,e) - max_{j in S} s(i,j));
    weights are the sizes of the induced nearest-facility clusters.
    """
    S = sim.matrix
    m = S.shape[0]
    if m == 0:
        raise ValueError("empty group")
    if b < 1:
        raise ValueError(f"budget must be >= 1, got {b}")
    take = min(b, m)

    selected: list[int] = []
    cur_max = np.zeros(m)
    available = np.ones(m, dtype=bool)
    for _ in range(take):
        gains = np.maximum(S - cur_max[:, None], 0.0).sum(axis=0)
        gains[~available] = -np.inf
        e = int(np.argmax(gains))
        selected.append(e)
        available[e] = False
        cur_max = np.maximum(cur_max, S[:, e])

    idx = np.array(selected)
    return Coreset(indices=idx, weights=_facility_weights(S, idx),
                   provenance={"method": "craig"})


def select_graphcut(sim: SimilarityMatrix, b: int, lam: float = 2.0) -> Coreset:
    """Greedy graph-cut selection: representativeness minus lam * redundancy."""
    S = sim.matrix
    m = S.shape[0]
    if m == 0:
        raise ValueError("empty group")
    if b < 1:
        raise ValueError(f"budget must be >= 1, got {b}")
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    take = min(b, m)

    row_sums = S.sum(axis=1)
    penalty = np.zeros(m)
    available = np.ones(m, dtype=bool)
    selected: list[int] = []
    for _ in range(take):
        scores = row_sums - lam * penalty
        scores[~available] = -np.inf
        e = int(np.argmax(scores))
        selected.append(e)
        available[e] = False
        penalty += S[:, e]
    return Coreset(indices=np.array(selected), provenance={"method": "gc"})


def select_moderate(reduced, b: int, centroid) -> Coreset:
    """Samples whose centroid distance is closest to the group median distance."""
    X = np.asarray(reduced, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("empty group")
    if b < 0:
        raise ValueError(f"budget must be >= 0, got {b}")
    mu = np.asarray(centroid, dtype=np.float64)
    d = np.linalg.norm(X - mu, axis=1)
    med = np.median(d)
    order = np.argsort(np.abs(d - med), kind="stable")
    return Coreset(indices=order[: min(b, X.shape[0])], provenance={"method": "mds"})
