"""End-to-end selection pipeline behind the CLI.

Balanced mode runs per class: PCA fit on the class, class centroid,
selection inside the class, outputs merged. Imbalanced mode runs once
globally with the dataset centroid. Both emit a coreset plus a report
with per-group psi and CDS histograms.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .cds import (
    cds_histogram,
    cds_relation,
    cds_signatures,
    class_centroid,
    histogram_records,
    psi_count,
)
from .constraints import (
    HARD_BASELINES,
    allocate_proportional,
    hard_cds_select,
    per_class_budget,
    soft_craig_select,
    soft_graphcut_select,
    stage1_cluster,
)
from .reduce import MODES, fit_pca, select_dimensions
from .selectors import (
    KERNELS,
    gradient_proxy,
    select_craig,
    select_graphcut,
    select_kcenter,
    select_least_confidence,
    select_moderate,
    select_random,
    similarity_matrix,
)
from .tensorio import Coreset, Dataset

METHODS = ("random", "kcg", "lc", "craig", "gc", "mds")
CONSTRAINTS = ("none", "hard", "soft")
SOFT_METHODS = ("craig", "gc")


class ConfigError(ValueError):
    """Invalid configuration (CLI exit code 2)."""


@dataclass
class Budget:
    fraction: float | None = None
    count: int | None = None

    @classmethod
    def parse(cls, text: str) -> "Budget":
        """"0.1" (has . or e) means a fraction; "50" means a sample count."""
        text = text.strip()
        if any(ch in text for ch in ".eE"):
            try:
                frac = float(text)
            except ValueError:
                raise ConfigError(f"cannot parse budget {text!r}")
            if not 0 < frac <= 1:
                raise ConfigError(f"fractional budget must be in (0, 1], got {frac}")
            return cls(fraction=frac)
        try:
            count = int(text)
        except ValueError:
            raise ConfigError(f"cannot parse budget {text!r}")
        if count < 1:
            raise ConfigError(f"budget count must be >= 1, got {count}")
        return cls(count=count)

    def value(self):
        return self.fraction if self.fraction is not None else self.count


@dataclass
class SelectorConfig:
    method: str = "random"
    constraint: str = "none"
    budget: Budget = None
    pca_mode: str = "most"
    pca_k: int = 10
    beta: float = 1e-4
    alpha: float = 0.5
    lam: float = 2.0
    balanced: bool = True
    kernel: str = "shifted-euclidean"
    seed: int = 0
    force: bool = False

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if self.constraint not in CONSTRAINTS:
            raise ConfigError(f"unknown constraint {self.constraint!r}")
        if self.constraint == "soft" and self.method not in SOFT_METHODS:
            raise ConfigError(
                f"soft constraint pairs with {SOFT_METHODS}, not {self.method!r}"
            )
        if (self.constraint == "hard" and self.method not in HARD_BASELINES
                and not self.force):
            raise ConfigError(
                f"hard constraint pairs with {HARD_BASELINES}; "
                f"got {self.method!r} (pass --force to override)"
            )
        if self.budget is None:
            raise ConfigError("budget is required")
        if self.pca_mode not in MODES:
            raise ConfigError(f"unknown pca mode {self.pca_mode!r}")
        if self.pca_mode != "none" and self.pca_k < 1:
            raise ConfigError(f"pca_k must be >= 1, got {self.pca_k}")
        if self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if self.kernel not in KERNELS:
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")

    def provenance(self) -> dict:
        return {
            "method": self.method,
            "constraint": self.constraint,
            "budget": self.budget.value(),
            "beta": self.beta,
            "alpha": self.alpha,
            "lambda": self.lam,
            "pca_mode": self.pca_mode,
            "pca_k": self.pca_k,
            "seed": self.seed,
        }


def _reduce_group(features, cfg: SelectorConfig):
    if cfg.pca_mode == "none":
        return np.asarray(features, dtype=np.float64)
    K = features.shape[1]
    if cfg.pca_k > K:
        raise ConfigError(f"pca_k {cfg.pca_k} exceeds feature width {K}")
    model = fit_pca(features)
    return select_dimensions(model, features, cfg.pca_mode, cfg.pca_k).matrix


def _sim_vectors(reduced, probs, labels, C):
    # gradient-space similarity when confidences exist, feature-space otherwise
    if probs is None:
        return reduced
    return gradient_proxy(probs, labels, reduced, mode="full")


def _class_seed(seed: int, group: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(group)]).generate_state(1)[0])


def _select_group(reduced, centroid, probs, labels, C, b, cfg, seed) -> Coreset:
    method, constraint = cfg.method, cfg.constraint
    if method == "lc" and probs is None:
        raise ConfigError("method 'lc' needs --probs (predicted probabilities)")

    if constraint == "hard":
        return hard_cds_select(
            reduced, centroid, method, b, alpha=cfg.alpha, beta=cfg.beta,
            probs=probs, sim_vectors=_sim_vectors(reduced, probs, labels, C),
            kernel=cfg.kernel, lam=cfg.lam, seed=seed, force=cfg.force,
        )
    if constraint == "soft":
        sig = cds_signatures(reduced, centroid, cfg.beta)
        rel = cds_relation(sig)
        sim = similarity_matrix(_sim_vectors(reduced, probs, labels, C), cfg.kernel)
        if method == "craig":
            return soft_craig_select(sim, rel, b)
        return soft_graphcut_select(sim, rel, b, cfg.lam)

    if method == "random":
        return select_random(reduced.shape[0], b, seed)
    if method == "kcg":
        return select_kcenter(reduced, b, centroid)
    if method == "lc":
        return select_least_confidence(probs, b)
    if method == "mds":
        return select_moderate(reduced, b, centroid)
    sim = similarity_matrix(_sim_vectors(reduced, probs, labels, C), cfg.kernel)
    if method == "craig":
        return select_craig(sim, b)
    return select_graphcut(sim, b, cfg.lam)


def _balanced_counts(budget: Budget, sizes: list[int]) -> list[int]:
    """Per-class budgets; every class gets at least one sample."""
    if budget.fraction is not None:
        return [per_class_budget(budget.fraction, n) for n in sizes]
    b = budget.count
    if b < len(sizes):
        raise ConfigError(
            f"budget {b} cannot cover {len(sizes)} classes (balanced mode)"
        )
    if b > sum(sizes):
        raise ConfigError(f"budget {b} exceeds dataset size {sum(sizes)}")
    alloc = [a for _, a in allocate_proportional(sizes, b).pairs]
    # lift empty classes, taking slots from the currently largest allocation
    for i, a in enumerate(alloc):
        if a == 0:
            donor = max(range(len(alloc)), key=lambda j: (alloc[j], -j))
            alloc[donor] -= 1
            alloc[i] = 1
    return alloc


def run_selection(dataset: Dataset, cfg: SelectorConfig) -> tuple[Coreset, dict]:
    cfg.validate()
    t0 = time.perf_counter()

    if cfg.balanced:
        groups = [(c, dataset.class_indices(c)) for c in range(dataset.C)]
        sizes = [len(rows) for _, rows in groups]
        for c, n in zip(range(dataset.C), sizes):
            if n == 0:
                raise ConfigError(f"class {c} has no samples; balanced mode needs all")
        counts = _balanced_counts(cfg.budget, sizes)
    else:
        groups = [(None, np.arange(dataset.n))]
        if cfg.budget.fraction is not None:
            counts = [per_class_budget(cfg.budget.fraction, dataset.n)]
        else:
            if cfg.budget.count > dataset.n:
                raise ConfigError(
                    f"budget {cfg.budget.count} exceeds dataset size {dataset.n}"
                )
            counts = [cfg.budget.count]

    all_idx = []
    all_weights = []
    records = []
    for (label, rows), b in zip(groups, counts):
        feats = dataset.features[rows]
        probs = dataset.probs[rows] if dataset.probs is not None else None
        labs = dataset.labels[rows]
        reduced = _reduce_group(feats, cfg)
        centroid = class_centroid(reduced)
        seed = _class_seed(cfg.seed, dataset.C if label is None else label)
        local = _select_group(reduced, centroid, probs, labs, dataset.C, b, cfg, seed)

        sig = cds_signatures(reduced, centroid, cfg.beta)
        records.append({
            "class": label,
            "n": int(len(rows)),
            "budget": int(b),
            "psi": psi_count(sig, local.indices),
            "histogram": histogram_records(cds_histogram(sig, local.indices)),
        })
        all_idx.append(rows[local.indices])
        all_weights.append(local.weights)

    weights = None
    if all(w is not None for w in all_weights):
        weights = np.concatenate(all_weights)
    coreset = Coreset(
        indices=np.concatenate(all_idx),
        weights=weights,
        provenance=cfg.provenance(),
    )
    report = {
        "per_class": records,
        "wall_ms": (time.perf_counter() - t0) * 1000.0,
    }
    return coreset, report


def run_analysis(dataset: Dataset, coreset: Coreset, cfg: SelectorConfig) -> dict:
    """Per-group psi, CDS histogram, and distance-bin occupancy of a coreset."""
    t0 = time.perf_counter()
    idx = np.asarray(coreset.indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= dataset.n):
        raise IndexError("coreset index out of range for this dataset")
    if len(np.unique(idx)) != len(idx):
        raise IndexError("coreset indices must be distinct")

    if cfg.balanced:
        groups = [(c, dataset.class_indices(c)) for c in range(dataset.C)]
    else:
        groups = [(None, np.arange(dataset.n))]

    records = []
    for label, rows in groups:
        if len(rows) == 0:
            continue
        feats = dataset.features[rows]
        reduced = _reduce_group(feats, cfg)
        centroid = class_centroid(reduced)
        sig = cds_signatures(reduced, centroid, cfg.beta)

        mask = np.isin(idx, rows)
        local = np.searchsorted(rows, idx[mask])
        clusters = stage1_cluster(reduced, centroid, cfg.alpha)
        occupancy = [
            {"bin": h, "count": int(np.isin(clusters.bins[h], local).sum())}
            for h in sorted(clusters.bins)
        ]
        records.append({
            "class": label,
            "n": int(len(rows)),
            "budget": int(len(local)),
            "psi": psi_count(sig, local),
            "histogram": histogram_records(cds_histogram(sig, local)),
            "bins": occupancy,
        })

    return {"per_class": records, "wall_ms": (time.perf_counter() - t0) * 1000.0}
