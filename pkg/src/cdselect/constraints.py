"""Diversity-constrained selection: hard two-stage pipeline and soft greedy.

The hard constraint bins a group by centroid distance, splits each bin
into same-signature clusters, spreads the budget across those clusters,
and runs a baseline selector inside each. The soft constraint reweights
the greedy objective of CRAIG / Graph Cut with the relation matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cds import CdsRelation, cds_signatures, signature_groups
from .selectors import (
    SimilarityMatrix,
    select_kcenter,
    select_least_confidence,
    select_moderate,
    select_random,
    similarity_matrix,
)
from .tensorio import Coreset

HARD_BASELINES = ("random", "kcg", "lc", "mds")


@dataclass
class Stage1Clusters:
    """Distance-shell partition: bin h holds samples with d in [h*a, (h+1)*a)."""

    bins: dict[int, np.ndarray]
    alpha: float

    def sizes(self) -> dict[int, int]:
        return {h: len(v) for h, v in self.bins.items()}


@dataclass
class BudgetAllocation:
    pairs: list[tuple[int, int]]  # (cluster id, allocated budget)

    def total(self) -> int:
        return sum(b for _, b in self.pairs)

    def validate(self, sizes, budget: int) -> None:
        by_id = dict(self.pairs)
        for cid, alloc in self.pairs:
            if alloc < 0:
                raise ValueError(f"negative allocation for cluster {cid}")
            if alloc > sizes[cid]:
                raise ValueError(
                    f"cluster {cid} allocated {alloc} > size {sizes[cid]}"
                )
        if len(by_id) != len(self.pairs):
            raise ValueError("duplicate cluster ids in allocation")
        if self.total() != budget:
            raise ValueError(f"allocation total {self.total()} != budget {budget}")


def per_class_budget(fraction: float, class_size: int) -> int:
    """Resolve a fractional budget within one class: round, but never 0."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if class_size < 1:
        raise ValueError(f"class size must be >= 1, got {class_size}")
    return max(1, int(np.floor(fraction * class_size + 0.5)))


def stage1_cluster(reduced, centroid, alpha: float = 0.5) -> Stage1Clusters:
    """Assign each sample to distance bin floor(d(x, centroid) / alpha)."""
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    X = np.asarray(reduced, dtype=np.float64)
    mu = np.asarray(centroid, dtype=np.float64)
    d = np.linalg.norm(X - mu, axis=1)
    keys = np.floor(d / alpha).astype(np.int64)
    bins = {int(h): np.flatnonzero(keys == h) for h in np.unique(keys)}
    return Stage1Clusters(bins=bins, alpha=alpha)


def allocate_proportional(cluster_sizes, b: int) -> BudgetAllocation:
    """Largest-remainder split of b proportional to cluster sizes.

    Ties on the remainder go to the larger cluster, then the lower id;
    allocations are capped at cluster size (caps only bind through
    residual grants, which skip full clusters).
    """
    sizes = [int(s) for s in cluster_sizes]
    total = sum(sizes)
    if b > total:
        raise ValueError(f"budget {b} exceeds total size {total}")
    if total == 0:
        return BudgetAllocation(pairs=[(i, 0) for i in range(len(sizes))])

    alloc = [(b * s) // total for s in sizes]
    remainder = [(b * s) % total for s in sizes]
    residual = b - sum(alloc)
    for i in sorted(range(len(sizes)), key=lambda i: (-remainder[i], -sizes[i], i)):
        if residual == 0:
            break
        if alloc[i] < sizes[i]:
            alloc[i] += 1
            residual -= 1
    assert residual == 0
    return BudgetAllocation(pairs=list(enumerate(alloc)))


def allocate_even(cds_group_sizes, b: int) -> BudgetAllocation:
    """Round-robin split: one slot per non-full group per pass, largest first."""
    sizes = [int(s) for s in cds_group_sizes]
    if b > sum(sizes):
        raise ValueError(f"budget {b} exceeds total size {sum(sizes)}")
    order = sorted(range(len(sizes)), key=lambda i: (-sizes[i], i))
    alloc = [0] * len(sizes)
    granted = 0
    while granted < b:
        for i in order:
            if granted == b:
                break
            if alloc[i] < sizes[i]:
                alloc[i] += 1
                granted += 1
    return BudgetAllocation(pairs=list(enumerate(alloc)))


def _subgroup_seed(seed: int, bin_id: int, group_key: int) -> int:
    ss = np.random.SeedSequence([int(seed), int(bin_id), int(group_key)])
    return int(ss.generate_state(1)[0])


def hard_cds_select(
    reduced,
    centroid,
    baseline: str,
    b: int,
    alpha: float = 0.5,
    beta: float = 1e-4,
    *,
    probs=None,
    sim_vectors=None,
    kernel: str = "shifted-euclidean",
    lam: float = 2.0,
    seed: int = 0,
    force: bool = False,
) -> Coreset:
    """Two-stage constrained selection over one group.

    Distance bins get proportional budgets; same-signature clusters inside
    each bin get round-robin budgets; `baseline` runs inside each cluster.
    Greedy submodular baselines (craig/gc) are rejected unless `force`,
    since the soft constraint is the intended pairing for them.
    """
    X = np.asarray(reduced, dtype=np.float64)
    m = X.shape[0]
    if b > m:
        raise ValueError(f"budget {b} exceeds group size {m}")
    if baseline not in HARD_BASELINES:
        if baseline in ("craig", "gc") and force:
            pass
        else:
            raise ValueError(
                f"hard constraint supports baselines {HARD_BASELINES}; "
                f"got {baseline!r} (use force to override)"
            )
    if baseline == "lc" and probs is None:
        raise ValueError("baseline 'lc' needs predicted probabilities")
    if baseline in ("craig", "gc") and sim_vectors is None:
        sim_vectors = X

    mu = np.asarray(centroid, dtype=np.float64)
    clusters = stage1_cluster(X, mu, alpha)
    bin_ids = sorted(clusters.bins)
    bin_sizes = [len(clusters.bins[h]) for h in bin_ids]
    bin_alloc = allocate_proportional(bin_sizes, b)
    bin_alloc.validate(bin_sizes, b)

    sig = cds_signatures(X, mu, beta)
    gids = signature_groups(sig)

    chosen: list[np.ndarray] = []
    for (pos, bin_budget), h in zip(bin_alloc.pairs, bin_ids):
        if bin_budget == 0:
            continue
        members = clusters.bins[h]
        keys = np.unique(gids[members])
        groups = [members[gids[members] == key] for key in keys]
        even = allocate_even([len(g) for g in groups], bin_budget)
        even.validate([len(g) for g in groups], bin_budget)
        for (gpos, sub_b), key, rows in zip(even.pairs, keys, groups):
            if sub_b == 0:
                continue
            local = _run_baseline(
                baseline, X, rows, mu, sub_b, probs=probs,
                sim_vectors=sim_vectors, kernel=kernel, lam=lam,
                seed=_subgroup_seed(seed, h, int(key)),
            )
            chosen.append(rows[local])

    indices = np.concatenate(chosen) if chosen else np.zeros(0, dtype=np.int64)
    return Coreset(
        indices=indices,
        provenance={"method": baseline, "constraint": "hard", "alpha": alpha,
                    "beta": beta, "seed": seed},
    )


def _run_baseline(baseline, X, rows, centroid, sub_b, *, probs, sim_vectors,
                  kernel, lam, seed) -> np.ndarray:
    if baseline == "random":
        return select_random(len(rows), sub_b, seed).indices
    if baseline == "kcg":
        return select_kcenter(X[rows], sub_b, centroid).indices
    if baseline == "lc":
        return select_least_confidence(probs[rows], sub_b).indices
    if baseline == "mds":
        return select_moderate(X[rows], sub_b, centroid).indices
    sim = similarity_matrix(np.asarray(sim_vectors)[rows], kernel)
    if baseline == "craig":
        from .selectors import select_craig
        return select_craig(sim, sub_b).indices
    if baseline == "gc":
        from .selectors import select_graphcut
        return select_graphcut(sim, sub_b, lam).indices
    raise ValueError(f"unknown baseline {baseline!r}")


def _check_soft_inputs(sim: SimilarityMatrix, relation: CdsRelation, b: int):
    S = sim.matrix
    R = relation.matrix
    if R.shape != S.shape:
        raise ValueError(
            f"relation shape {R.shape} does not match similarity {S.shape}"
        )
    if b < 1:
        raise ValueError(f"budget must be >= 1, got {b}")
    return S, R.astype(np.float64)


def soft_craig_select(sim: SimilarityMatrix, relation: CdsRelation, b: int) -> Coreset:
    """Facility-location greedy with marginal gains damped by 1/(same-CDS+1).

    At each step the candidate score is gain(e|S) / (sum_{j in S} R_ej + 1),
    so candidates sharing their signature with many selected samples lose
    priority. With an all-distinct relation this is exactly plain CRAIG.
    """
    S, R = _check_soft_inputs(sim, relation, b)
    m = S.shape[0]
    take = min(b, m)

    from .selectors import _facility_weights

    selected: list[int] = []
    cur_max = np.zeros(m)
    same_count = np.zeros(m)
    available = np.ones(m, dtype=bool)
    for _ in range(take):
        gains = np.maximum(S - cur_max[:, None], 0.0).sum(axis=0)
        scores = gains / (same_count + 1.0)
        scores[~available] = -np.inf
        e = int(np.argmax(scores))
        selected.append(e)
        available[e] = False
        cur_max = np.maximum(cur_max, S[:, e])
        same_count += R[:, e]

    idx = np.array(selected)
    return Coreset(indices=idx, weights=_facility_weights(S, idx),
                   provenance={"method": "craig", "constraint": "soft"})


def soft_graphcut_select(
    sim: SimilarityMatrix, relation: CdsRelation, b: int, lam: float = 2.0
) -> Coreset:
    """Graph-cut greedy whose redundancy penalty doubles for same-CDS pairs."""
    S, R = _check_soft_inputs(sim, relation, b)
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    m = S.shape[0]
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
        # per-pair factor H: 2 when same signature, 1 otherwise
        penalty += S[:, e] * (1.0 + R[:, e])

    return Coreset(indices=np.array(selected),
                   provenance={"method": "gc", "constraint": "soft", "lambda": lam})
