"""Synthetic mixtures, proxy evaluation, brute-force oracles, and the
sampling-strategy analysis (more D-CDS / more S-CDS / more Random).

Everything here is desk scale: datasets are Gaussian mixtures, the
evaluation proxy is a nearest-centroid classifier, and the oracles
enumerate subsets exhaustively on tiny instances.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .cds import (
    cds_histogram,
    cds_relation,
    cds_signatures,
    class_centroid,
    psi_count,
    signature_groups,
    suggest_beta,
)
from .constraints import (
    BudgetAllocation,
    allocate_even,
    allocate_proportional,
    hard_cds_select,
    per_class_budget,
    soft_craig_select,
    soft_graphcut_select,
    stage1_cluster,
)
from .selectors import (
    SimilarityMatrix,
    select_craig,
    select_graphcut,
    select_kcenter,
    select_least_confidence,
    select_moderate,
    select_random,
    similarity_matrix,
)
from .tensorio import Coreset, Dataset

BASE_METHODS = ("random", "kcg", "lc", "craig", "gc", "mds")
STRATEGY_METHODS = ("more_dcds", "more_scds", "more_random")
SOFT_BASES = ("craig", "gc")
HARD_BASES = ("random", "kcg", "lc", "mds")


@dataclass
class MixtureSpec:
    C: int
    n_per_class: int
    dims: int
    separation: float
    noise: float
    seed: int = 0

    def validate(self) -> None:
        if self.C < 1 or self.n_per_class < 1 or self.dims < 1:
            raise ValueError("C, n_per_class, dims must all be >= 1")
        if self.separation <= 0 or self.noise <= 0:
            raise ValueError("separation and noise must be > 0")


# Desk-scale mixture used by the strategy benchmark.
STANDARD_MIXTURE = MixtureSpec(
    C=5, n_per_class=500, dims=16, separation=0.65, noise=1.0, seed=0
)

FEATURE_MAPS = ("relu-bias",)

_BIAS_SEED_OFFSET = 77003


def rectified_embedding(dataset: Dataset, seed: int, scale: float = 0.9) -> Dataset:
    """Apply relu(x + b) with a per-seed random bias b to every feature.

    Rectification is what gives the CDS groups asymmetric means: a group
    whose signature zeroes a dimension sits strictly below the class mean
    there, so concentrating the budget in one group biases the fitted
    centroid. On raw Gaussian features every group is reflection-symmetric
    about the class mean and that bias cancels, which hides the effect the
    strategy benchmark measures. The bias must be drawn once per mixture
    seed and shared by train and test.
    """
    bias = np.random.default_rng(seed + _BIAS_SEED_OFFSET).standard_normal(
        dataset.features.shape[1]
    ) * scale
    return Dataset(
        features=np.maximum(dataset.features + bias, 0.0),
        labels=dataset.labels,
        C=dataset.C,
        probs=dataset.probs,
    )


def gen_gaussian_mixture(spec: MixtureSpec) -> Dataset:
    """Deterministic Gaussian mixture with grouped labels and softmax probs.

    Centers are standard normal scaled by `separation`; each sample is its
    center plus isotropic noise. Probabilities are softmax(-distance to
    every center), giving label-correlated but imperfect confidences.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    centers = rng.standard_normal((spec.C, spec.dims)) * spec.separation
    blocks = [
        centers[c] + rng.standard_normal((spec.n_per_class, spec.dims)) * spec.noise
        for c in range(spec.C)
    ]
    features = np.concatenate(blocks, axis=0)
    labels = np.repeat(np.arange(spec.C, dtype=np.int64), spec.n_per_class)

    diff = features[:, None, :] - centers[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    logits = -dist
    logits -= logits.max(axis=1, keepdims=True)
    expd = np.exp(logits)
    probs = expd / expd.sum(axis=1, keepdims=True)

    ds = Dataset(features=features, labels=labels, C=spec.C, probs=probs)
    ds.validate()
    return ds


def split_mixture(
    spec: MixtureSpec, train_per_class: int, test_per_class: int
) -> tuple[Dataset, Dataset]:
    """One mixture draw split into train/test halves sharing the same centers."""
    if train_per_class < 1 or test_per_class < 1:
        raise ValueError("both split sizes must be >= 1")
    total = train_per_class + test_per_class
    full = gen_gaussian_mixture(replace(spec, n_per_class=total))

    def part(offset: int, count: int) -> Dataset:
        rows = np.concatenate(
            [np.arange(c * total + offset, c * total + offset + count)
             for c in range(spec.C)]
        )
        return Dataset(
            features=full.features[rows],
            labels=full.labels[rows],
            C=spec.C,
            probs=full.probs[rows],
        )

    return part(0, train_per_class), part(train_per_class, test_per_class)


def nearest_centroid_accuracy(dataset: Dataset, coreset: Coreset, test: Dataset) -> float:
    """Fit per-class centroids on the coreset, score accuracy on `test`.

    Selection weights are ignored; the proxy measures coverage only.
    Classes absent from the coreset can never be predicted, so their test
    samples count as errors.
    """
    idx = np.asarray(coreset.indices, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("empty coreset cannot be evaluated")
    feats = dataset.features[idx]
    labs = dataset.labels[idx]
    classes = np.unique(labs)
    centroids = np.stack([feats[labs == c].mean(axis=0) for c in classes])

    diff = test.features[:, None, :] - centroids[None, :, :]
    d2 = (diff * diff).sum(axis=2)
    pred = classes[np.argmin(d2, axis=1)]
    return float(np.mean(pred == test.labels))


def _check_instance(m: int, b: int) -> int:
    take = min(b, m)
    if m > 20 or math.comb(m, take) > 200_000:
        raise ValueError(f"instance too large for exhaustive search (m={m}, b={b})")
    return take


def brute_force_facility_opt(sim: SimilarityMatrix, b: int):
    """Exhaustive max of T(S) = sum_i max_{j in S} s(i, j) over size-b subsets."""
    S = sim.matrix
    m = S.shape[0]
    take = _check_instance(m, b)
    best_val = -np.inf
    best = None
    for subset in itertools.combinations(range(m), take):
        val = S[:, subset].max(axis=1).sum()
        if val > best_val:
            best_val = val
            best = subset
    return float(best_val), best


def brute_force_kcenter_opt(points, b: int):
    """Exhaustive min covering radius over size-b center subsets."""
    X = np.asarray(points, dtype=np.float64)
    m = X.shape[0]
    take = _check_instance(m, b)
    diff = X[:, None, :] - X[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=2))
    best_r = np.inf
    best = None
    for subset in itertools.combinations(range(m), take):
        r = d[:, subset].min(axis=1).max()
        if r < best_r:
            best_r = r
            best = subset
    return float(best_r), best


def _allocate_fill_largest(sizes, b: int) -> BudgetAllocation:
    # largest cluster first, overflow to the next largest
    sizes = [int(s) for s in sizes]
    if b > sum(sizes):
        raise ValueError(f"budget {b} exceeds total size {sum(sizes)}")
    alloc = [0] * len(sizes)
    remaining = b
    for i in sorted(range(len(sizes)), key=lambda i: (-sizes[i], i)):
        if remaining == 0:
            break
        alloc[i] = min(remaining, sizes[i])
        remaining -= alloc[i]
    return BudgetAllocation(pairs=list(enumerate(alloc)))


def _bin_seed(seed: int, bin_id: int, group_key: int) -> int:
    ss = np.random.SeedSequence([int(seed), int(bin_id), int(group_key)])
    return int(ss.generate_state(1)[0])


def _two_stage_random(X, b, alpha, beta, seed, stage2) -> np.ndarray:
    """Shared scaffold for the S-CDS and bin-only analysis strategies."""
    centroid = class_centroid(X)
    clusters = stage1_cluster(X, centroid, alpha)
    bin_ids = sorted(clusters.bins)
    bin_alloc = allocate_proportional([len(clusters.bins[h]) for h in bin_ids], b)

    gids = None
    if stage2 is not None:
        gids = signature_groups(cds_signatures(X, centroid, beta))

    chosen = []
    for (_, bin_budget), h in zip(bin_alloc.pairs, bin_ids):
        if bin_budget == 0:
            continue
        members = clusters.bins[h]
        if stage2 is None:
            local = select_random(len(members), bin_budget, _bin_seed(seed, h, 0))
            chosen.append(members[local.indices])
            continue
        keys = np.unique(gids[members])
        groups = [members[gids[members] == key] for key in keys]
        sub = stage2([len(g) for g in groups], bin_budget)
        for (_, sub_b), key, rows in zip(sub.pairs, keys, groups):
            if sub_b == 0:
                continue
            local = select_random(len(rows), sub_b, _bin_seed(seed, h, int(key)))
            chosen.append(rows[local.indices])
    return np.concatenate(chosen) if chosen else np.zeros(0, dtype=np.int64)


def strategy_more_dcds(features, b: int, alpha: float, beta: float, seed: int) -> Coreset:
    """Spread the per-bin budget across as many CDS groups as possible."""
    X = np.asarray(features, dtype=np.float64)
    cs = hard_cds_select(X, class_centroid(X), "random", b,
                         alpha=alpha, beta=beta, seed=seed)
    cs.provenance["method"] = "more_dcds"
    return cs


def strategy_more_scds(features, b: int, alpha: float, beta: float, seed: int) -> Coreset:
    """Concentrate the per-bin budget in the largest CDS groups."""
    X = np.asarray(features, dtype=np.float64)
    idx = _two_stage_random(X, b, alpha, beta, seed, _allocate_fill_largest)
    return Coreset(indices=idx, provenance={"method": "more_scds", "alpha": alpha,
                                            "beta": beta, "seed": seed})


def strategy_more_random(features, b: int, alpha: float, seed: int) -> Coreset:
    """Distance bins with proportional budgets, random inside each bin."""
    X = np.asarray(features, dtype=np.float64)
    idx = _two_stage_random(X, b, alpha, None, seed, None)
    return Coreset(indices=idx, provenance={"method": "more_random", "alpha": alpha,
                                            "seed": seed})


@dataclass
class ExperimentConfig:
    mixture: MixtureSpec = field(default_factory=lambda: replace(STANDARD_MIXTURE))
    methods: tuple = STRATEGY_METHODS
    budgets: tuple = (0.01, 0.05)
    seeds: tuple = tuple(range(20))
    alpha: float = 1.0
    beta: float | None = 1.1  # None: per-class suggest_beta at beta_ratio
    beta_ratio: float = 0.9
    test_per_class: int = 500
    kernel: str = "shifted-euclidean"
    lam: float = 2.0
    feature_map: str | None = "relu-bias"
    bias_scale: float = 0.9

    def validate(self) -> None:
        if self.feature_map is not None and self.feature_map not in FEATURE_MAPS:
            raise ValueError(f"unknown feature map {self.feature_map!r}")


@dataclass
class ExperimentResult:
    method: str
    constraint: str
    budget: float
    seed: int
    accuracy: float
    psi: int
    wall_ms: float
    histograms: list = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "method": self.method,
            "constraint": self.constraint,
            "budget": self.budget,
            "seed": self.seed,
            "accuracy": self.accuracy,
            "psi": self.psi,
            "wall_ms": self.wall_ms,
        }


def parse_method_id(method: str) -> tuple[str, str]:
    """Split ids like "gc+soft" into (base, constraint); validate the pairing."""
    if method in STRATEGY_METHODS:
        return method, "none"
    base, _, constraint = method.partition("+")
    constraint = constraint or "none"
    if base not in BASE_METHODS or constraint not in ("none", "hard", "soft"):
        raise ValueError(f"invalid method id {method!r}")
    if constraint == "soft" and base not in SOFT_BASES:
        raise ValueError(f"soft constraint needs a greedy base, got {base!r}")
    if constraint == "hard" and base not in HARD_BASES:
        raise ValueError(f"hard constraint does not pair with {base!r}")
    return base, constraint


def _select_one_class(base, constraint, ctx, b_c, class_seed, config):
    if base == "more_dcds":
        return strategy_more_dcds(ctx.X, b_c, config.alpha, ctx.beta, class_seed).indices
    if base == "more_scds":
        return strategy_more_scds(ctx.X, b_c, config.alpha, ctx.beta, class_seed).indices
    if base == "more_random":
        return strategy_more_random(ctx.X, b_c, config.alpha, class_seed).indices
    if constraint == "hard":
        return hard_cds_select(
            ctx.X, ctx.centroid, base, b_c, alpha=config.alpha, beta=ctx.beta,
            probs=ctx.probs, seed=class_seed,
        ).indices
    if constraint == "soft":
        if base == "craig":
            return soft_craig_select(ctx.sim, ctx.rel, b_c).indices
        return soft_graphcut_select(ctx.sim, ctx.rel, b_c, config.lam).indices
    if base == "random":
        return select_random(ctx.X.shape[0], b_c, class_seed).indices
    if base == "kcg":
        return select_kcenter(ctx.X, b_c, ctx.centroid).indices
    if base == "lc":
        return select_least_confidence(ctx.probs, b_c).indices
    if base == "craig":
        return select_craig(ctx.sim, b_c).indices
    if base == "gc":
        return select_graphcut(ctx.sim, b_c, config.lam).indices
    return select_moderate(ctx.X, b_c, ctx.centroid).indices


class _ClassContext:
    """Per-class tensors shared by every method in the grid."""

    def __init__(self, X, probs, beta, need_sim, kernel):
        self.X = X
        self.centroid = class_centroid(X)
        self.probs = probs
        self.beta = beta
        self.sig = cds_signatures(X, self.centroid, beta)
        self.sim = similarity_matrix(X, kernel) if need_sim else None
        self.rel = cds_relation(self.sig) if need_sim else None


def run_experiment(config: ExperimentConfig) -> list[ExperimentResult]:
    """Run the method x budget x seed grid; deterministic apart from wall_ms."""
    config.validate()
    parsed = [parse_method_id(m) for m in config.methods]
    need_sim = any(
        base in ("craig", "gc") for base, _ in parsed
    )

    results: list[ExperimentResult] = []
    for seed in config.seeds:
        train, test = split_mixture(
            replace(config.mixture, seed=int(seed)),
            config.mixture.n_per_class,
            config.test_per_class,
        )
        if config.feature_map == "relu-bias":
            train = rectified_embedding(train, int(seed), config.bias_scale)
            test = rectified_embedding(test, int(seed), config.bias_scale)
        contexts = []
        for c in range(train.C):
            rows = train.class_indices(c)
            X = train.features[rows]
            probs = train.probs[rows] if train.probs is not None else None
            beta = (config.beta if config.beta is not None
                    else suggest_beta(X, class_centroid(X), config.beta_ratio))
            contexts.append((rows, _ClassContext(X, probs, beta, need_sim, config.kernel)))

        for method, (base, constraint) in zip(config.methods, parsed):
            for frac in config.budgets:
                t0 = time.perf_counter()
                global_idx = []
                psi = 0
                hists = []
                for c, (rows, ctx) in enumerate(contexts):
                    b_c = per_class_budget(frac, len(rows))
                    class_seed = int(
                        np.random.SeedSequence([int(seed), c]).generate_state(1)[0]
                    )
                    local = _select_one_class(base, constraint, ctx, b_c,
                                              class_seed, config)
                    psi += psi_count(ctx.sig, local)
                    hists.append(cds_histogram(ctx.sig, local))
                    global_idx.append(rows[local])
                wall_ms = (time.perf_counter() - t0) * 1000.0
                coreset = Coreset(indices=np.concatenate(global_idx))
                acc = nearest_centroid_accuracy(train, coreset, test)
                results.append(ExperimentResult(
                    method=method, constraint=constraint, budget=float(frac),
                    seed=int(seed), accuracy=acc, psi=int(psi),
                    wall_ms=wall_ms, histograms=hists,
                ))
    return results


def write_records(results: list[ExperimentResult], path) -> None:
    """One JSON record per grid cell, stable key order."""
    with open(path, "w", encoding="utf-8") as fh:
        for res in results:
            fh.write(json.dumps(res.to_record(), sort_keys=True) + "\n")


def read_records(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
