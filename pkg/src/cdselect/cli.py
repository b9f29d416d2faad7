"""Command-line interface: validate, select, analyze, suggest-beta, bench.

Exit codes: 0 success, 2 configuration problems, 3 IO or data problems.
"""

from __future__ import annotations

import csv
import functools
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from .cds import class_centroid, suggest_beta
from .constraints import HARD_BASELINES
from .harness import (
    STANDARD_MIXTURE,
    STRATEGY_METHODS,
    ExperimentConfig,
    brute_force_facility_opt,
    brute_force_kcenter_opt,
    run_experiment,
    write_records,
)
from .pipeline import (
    CONSTRAINTS,
    METHODS,
    Budget,
    ConfigError,
    SelectorConfig,
    run_analysis,
    run_selection,
)
from .reduce import MODES
from .selectors import (
    KERNELS,
    SimilarityMatrix,
    select_craig,
    select_kcenter,
    similarity_matrix,
)
from .tensorio import (
    DatasetValidationError,
    TensorFormatError,
    load_dataset,
    read_coreset,
    write_coreset,
)


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    # order matters: the format errors subclass ValueError but mean exit 3
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (TensorFormatError, DatasetValidationError) as exc:
            _fail(str(exc), 3)
        except (OSError, json.JSONDecodeError) as exc:
            _fail(str(exc), 3)
        except IndexError as exc:
            _fail(str(exc), 3)
        except ValueError as exc:
            _fail(str(exc), 2)

    return wrapper


def _dump_json(payload, path=None) -> None:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"
    if path is None:
        click.echo(text, nl=False)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


@click.group()
def main():
    """Coreset selection with CDS diversity constraints."""


dataset_options = [
    click.option("--features", "features_path", required=True,
                 type=click.Path(), help="features tensor (.cdsf or .csv)"),
    click.option("--labels", "labels_path", required=True,
                 type=click.Path(), help="labels tensor"),
    click.option("--probs", "probs_path", default=None,
                 type=click.Path(), help="predicted probabilities tensor"),
]

pca_options = [
    click.option("--pca", "pca_mode", type=click.Choice(MODES), default="most",
                 show_default=True, help="dimension pruning mode"),
    click.option("--pca-k", type=int, default=10, show_default=True,
                 help="pruned dimension count"),
]


def _add(options):
    def deco(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return deco


@main.command()
@_add(dataset_options)
@_guarded
def validate(features_path, labels_path, probs_path):
    """Load a dataset and report its shape summary."""
    ds = load_dataset(features_path, labels_path, probs_path)
    _dump_json({"n": ds.n, "K": ds.K, "C": ds.C,
                "probs": ds.probs is not None})


@main.command()
@_add(dataset_options)
@click.option("--method", type=click.Choice(METHODS), default="random",
              show_default=True)
@click.option("--constraint", type=click.Choice(CONSTRAINTS), default="none",
              show_default=True)
@click.option("--budget", required=True,
              help="fraction like 0.1, or an absolute count like 50")
@_add(pca_options)
@click.option("--beta", type=float, default=1e-4, show_default=True)
@click.option("--alpha", type=float, default=0.5, show_default=True)
@click.option("--lambda", "lam", type=float, default=2.0, show_default=True)
@click.option("--balanced/--imbalanced", "balanced", default=True,
              help="per-class pipeline vs one global pipeline")
@click.option("--kernel", type=click.Choice(KERNELS),
              default="shifted-euclidean", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="coreset JSON output")
@click.option("--report", "report_path", default=None, type=click.Path(),
              help="report JSON output")
@click.option("--force", is_flag=True, default=False,
              help="allow hard constraint with craig/gc")
@_guarded
def select(features_path, labels_path, probs_path, method, constraint, budget,
           pca_mode, pca_k, beta, alpha, lam, balanced, kernel, seed,
           out_path, report_path, force):
    """Select a coreset and write it as JSON."""
    ds = load_dataset(features_path, labels_path, probs_path)
    cfg = SelectorConfig(
        method=method, constraint=constraint, budget=Budget.parse(budget),
        pca_mode=pca_mode, pca_k=pca_k, beta=beta, alpha=alpha, lam=lam,
        balanced=balanced, kernel=kernel, seed=seed, force=force,
    )
    coreset, report = run_selection(ds, cfg)
    coreset.validate(ds.n, len(coreset.indices))
    write_coreset(coreset, out_path)
    if report_path is not None:
        _dump_json(report, report_path)
    psi_total = sum(rec["psi"] for rec in report["per_class"])
    click.echo(
        f"selected {len(coreset.indices)} of {ds.n} samples "
        f"(psi {psi_total}) -> {out_path}"
    )


@main.command()
@_add(dataset_options)
@click.option("--coreset", "coreset_path", required=True, type=click.Path())
@_add(pca_options)
@click.option("--beta", type=float, default=1e-4, show_default=True)
@click.option("--alpha", type=float, default=0.5, show_default=True)
@click.option("--balanced/--imbalanced", "balanced", default=True)
@click.option("--report", "report_path", default=None, type=click.Path(),
              help="write the report JSON here instead of stdout")
@click.option("--figures", "figures_dir", default=None, type=click.Path(),
              help="directory for rendered histogram/occupancy figures")
@_guarded
def analyze(features_path, labels_path, probs_path, coreset_path, pca_mode,
            pca_k, beta, alpha, balanced, report_path, figures_dir):
    """Per-class psi, CDS histograms, and bin occupancy for a coreset."""
    ds = load_dataset(features_path, labels_path, probs_path)
    coreset = read_coreset(coreset_path)
    cfg = SelectorConfig(
        budget=Budget(count=max(1, len(coreset.indices))),
        pca_mode=pca_mode, pca_k=pca_k, beta=beta, alpha=alpha,
        balanced=balanced,
    )
    report = run_analysis(ds, coreset, cfg)
    _dump_json(report, report_path)
    if report_path is not None:
        click.echo(f"report -> {report_path}")
    if figures_dir is not None:
        from . import figures

        out = Path(figures_dir)
        out.mkdir(parents=True, exist_ok=True)
        for rec in report["per_class"]:
            name = "all" if rec["class"] is None else f"class{rec['class']}"
            figures.histogram_figure(
                rec["histogram"], out / f"cds_histogram_{name}.png",
                title=f"CDS histogram ({name}, psi={rec['psi']})",
            )
        figures.bins_figure(report["per_class"], out / "bin_occupancy.png")
        click.echo(f"figures -> {out}")


@main.command("suggest-beta")
@_add(dataset_options)
@_add(pca_options)
@click.option("--ratio", type=float, default=0.9, show_default=True,
              help="target fraction of ones in the signature matrix")
@click.option("--balanced/--imbalanced", "balanced", default=True)
@_guarded
def suggest_beta_cmd(features_path, labels_path, probs_path, pca_mode, pca_k,
                     ratio, balanced):
    """Per-class beta suggestion plus the 3-point search grid around it."""
    from .pipeline import _reduce_group

    ds = load_dataset(features_path, labels_path, probs_path)
    cfg = SelectorConfig(budget=Budget(count=1), pca_mode=pca_mode, pca_k=pca_k)
    if balanced:
        groups = [(c, ds.class_indices(c)) for c in range(ds.C)]
    else:
        groups = [(None, np.arange(ds.n))]
    records = []
    for label, rows in groups:
        reduced = _reduce_group(ds.features[rows], cfg)
        beta = suggest_beta(reduced, class_centroid(reduced), ratio)
        records.append({
            "class": label,
            "beta": beta,
            "grid": [10.0 * beta, beta, 0.1 * beta],
        })
    _dump_json({"per_class": records, "ratio": ratio})


def _facility_value(sim: SimilarityMatrix, indices) -> float:
    return float(sim.matrix[:, indices].max(axis=1).sum())


def _covering_radius(points, indices) -> float:
    X = np.asarray(points, dtype=np.float64)
    diff = X[:, None, :] - X[indices][None, :, :]
    return float(np.sqrt((diff * diff).sum(axis=2)).min(axis=1).max())


def _bench_oracles(instances: int, seed: int) -> int:
    rng = np.random.default_rng(seed)
    facility_bad = 0
    kcenter_bad = 0
    bound = 1.0 - 1.0 / math.e
    for i in range(instances):
        m = int(rng.integers(4, 13))
        b = int(rng.integers(1, 5))
        pts = rng.standard_normal((m, int(rng.integers(1, 4))))
        if i % 2 == 0:
            sim = similarity_matrix(pts, KERNELS[i % 3])
        else:
            raw = rng.uniform(0.0, 1.0, size=(m, m))
            sim = SimilarityMatrix(matrix=(raw + raw.T) / 2.0, kernel="custom")

        greedy_val = _facility_value(sim, select_craig(sim, b).indices)
        opt_val, _ = brute_force_facility_opt(sim, b)
        if greedy_val < bound * opt_val - 1e-9:
            facility_bad += 1

        radius = _covering_radius(pts, select_kcenter(pts, b, pts.mean(axis=0)).indices)
        opt_radius, _ = brute_force_kcenter_opt(pts, b)
        if radius > 2.0 * opt_radius + 1e-9:
            kcenter_bad += 1

    click.echo(f"facility-location greedy vs oracle: {instances} instances, "
               f"{facility_bad} below the (1-1/e) bound")
    click.echo(f"k-center greedy vs oracle: {instances} instances, "
               f"{kcenter_bad} beyond the 2x bound")
    click.echo(f"violations: {facility_bad + kcenter_bad}")
    return facility_bad + kcenter_bad


def _bench_figure3a(seeds: int, budgets, alpha: float, out_dir: str) -> None:
    from . import figures

    config = ExperimentConfig(
        mixture=STANDARD_MIXTURE,
        methods=STRATEGY_METHODS,
        budgets=tuple(budgets),
        seeds=tuple(range(seeds)),
        alpha=alpha,
    )
    results = run_experiment(config)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_records(results, out / "records.jsonl")
    with open(out / "results.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "constraint", "budget", "seed",
                         "accuracy", "psi"])
        for res in results:
            writer.writerow([res.method, res.constraint, res.budget,
                             res.seed, res.accuracy, res.psi])
    figures.strategy_curve_figure(results, out / "figure3a.png")

    def stats(method, budget):
        accs = [r.accuracy for r in results
                if r.method == method and r.budget == budget]
        return float(np.mean(accs)), float(np.std(accs))

    gaps = []
    for budget in config.budgets:
        mr, sr = stats("more_random", budget)
        rows = []
        for method in ("more_dcds", "more_scds"):
            mm, ss = stats(method, budget)
            rows.append(f"{method} {mm:.4f}±{ss:.4f} ({mm - mr:+.4f} vs random)")
        click.echo(f"budget {100 * budget:g}%: more_random {mr:.4f}±{sr:.4f} | "
                   + " | ".join(rows))
        gaps.append(stats("more_dcds", budget)[0] - stats("more_scds", budget)[0])
    click.echo(f"mean accuracy gap (more_dcds - more_scds): {np.mean(gaps):+.4f}")
    click.echo(f"outputs -> {out}")


@main.command()
@click.argument("suite", type=click.Choice(["oracles", "figure3a"]))
@click.option("--seeds", type=int, default=20, show_default=True,
              help="seed count for the figure3a grid")
@click.option("--instances", type=int, default=50, show_default=True,
              help="fuzz instance count for the oracles suite")
@click.option("--budgets", type=float, multiple=True,
              default=(0.01, 0.02, 0.05, 0.1), show_default=True)
@click.option("--alpha", type=float, default=1.0, show_default=True,
              help="bin width for the figure3a strategies")
@click.option("--seed", type=int, default=0, show_default=True,
              help="fuzz seed for the oracles suite")
@click.option("--out-dir", type=click.Path(), default="bench_out",
              show_default=True)
@_guarded
def bench(suite, seeds, instances, budgets, alpha, seed, out_dir):
    """Greedy-vs-oracle checks, or the sampling-strategy comparison."""
    if suite == "oracles":
        violations = _bench_oracles(instances, seed)
        if violations:
            sys.exit(1)
        return
    _bench_figure3a(seeds, budgets, alpha, out_dir)


if __name__ == "__main__":
    main()
