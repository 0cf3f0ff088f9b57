"""Experiment orchestration: single runs, loss-weight grid search, ablations,
epoch sweeps, and trade-off plots.

Per-dataset defaults follow the published hyperparameter table: loss weights
(α, β, γ, λ), classifier learning rate, and epoch budget. Every artifact a
command emits (reports, histories, checkpoints, plots) lands under the
experiment's output directory and is regenerable from config + checkpoint.
"""

from __future__ import annotations

import csv
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import synthetic
from .analysis import claim3_report, save_claim3_artifacts
from .data import (Graph, load_dataset_dir, restrict_to_edges, split_edges)
from .evaluation import (ClassifierConfig, MetricsReport, evaluate_link,
                         evaluate_node)
from .losses import LossWeights
from .models import TensorGraph
from .trainer import TrainConfig, fit, load_checkpoint, sample_eval_view
from .utils import derive_seed, write_json

# Published per-dataset settings: loss weights, classifier lr, epochs, task.
DATASET_DEFAULTS = {
    "nba": dict(weights=(1.0, 0.1, 0.1, 1.0), c_lr=1e-3, epochs=500, task="node"),
    "pokec-n": dict(weights=(0.1, 1.0, 0.1, 10.0), c_lr=1e-3, epochs=10000, task="node"),
    "pokec-z": dict(weights=(10.0, 10.0, 0.1, 10.0), c_lr=1e-3, epochs=10000, task="node"),
    # Link rows also carry the model lr selected by the link grid search
    # (the node-task default 1e-4 underfits the 200-epoch link budget), and
    # citeseer's alpha is re-selected from the link grid: at 0.1 the adversary
    # never strips the sensitive signal and dyadic TPR/FPR gaps stay >15pp.
    "citeseer": dict(weights=(10.0, 0.1, 0.1, 1.0), c_lr=5e-3, epochs=200,
                     task="link", model_lr=1e-3),
    "cora": dict(weights=(10.0, 10.0, 0.1, 10.0), c_lr=5e-3, epochs=200,
                 task="link", model_lr=1e-3),
    "pubmed": dict(weights=(10.0, 10.0, 0.1, 0.1), c_lr=5e-3, epochs=200,
                   task="link", model_lr=1e-3),
    # Test fixtures. The adversarial weight is large because the minimax
    # term saturates once the adversary is confident; on these tiny planted
    # graphs a big alpha is what keeps the de-biasing gradient alive.
    "two-block": dict(weights=(100.0, 0.5, 0.01, 0.01), c_lr=1e-3, epochs=500,
                      task="node", model_lr=1e-3),
    "planted-bias": dict(weights=(100.0, 0.5, 0.01, 0.01), c_lr=1e-3, epochs=500,
                         task="node", model_lr=1e-3),
}

GRID_VALUES = (0.1, 1.0, 10.0)
# A 0.2 test fraction keeps subgroup cells large enough that their selection
# rates are not dominated by binomial noise; oversampled test negatives
# (3 per positive for the mixed pools, 10 per positive for the per-subgroup
# pools) shrink that noise further without touching training edges.
LINK_SPLIT_RATIOS = (0.7, 0.1, 0.2)
LINK_TEST_NEG_RATIO = 3.0
SUBGROUP_NEG_PER_POS = 10


@dataclass
class ExperimentConfig:
    dataset: str
    task: str = ""
    train: TrainConfig = field(default_factory=TrainConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    repeats: int = 5
    out_dir: str = "runs"
    data_root: str | None = None
    data_seed: int = 0
    minibatch_nodes: int | None = None
    method: str = "graphair"
    grid_alpha: tuple = GRID_VALUES
    grid_gamma: tuple = GRID_VALUES
    grid_lambda: tuple = GRID_VALUES
    jobs: int = 1

    def __post_init__(self):
        if not self.task:
            self.task = DATASET_DEFAULTS.get(self.dataset, {}).get("task", "node")
        if self.task not in ("node", "link"):
            raise ValueError("task must be 'node' or 'link'")
        if isinstance(self.train, dict):
            self.train = TrainConfig.from_dict(self.train)
        if isinstance(self.classifier, dict):
            self.classifier = ClassifierConfig(**self.classifier)

    def to_dict(self) -> dict:
        out = {}
        for f_ in fields(self):
            v = getattr(self, f_.name)
            if isinstance(v, TrainConfig):
                v = v.to_dict()
            elif isinstance(v, ClassifierConfig):
                v = v.to_dict()
            elif isinstance(v, tuple):
                v = list(v)
            out[f_.name] = v
        return out


def default_config(dataset: str, seed: int = 0, epochs: int | None = None,
                   out_dir: str = "runs", **overrides) -> ExperimentConfig:
    """ExperimentConfig preloaded with the dataset's published defaults."""
    row = DATASET_DEFAULTS.get(dataset)
    if row is None:
        raise ValueError(f"unknown dataset {dataset!r}; known: {sorted(DATASET_DEFAULTS)}")
    a, b, g, lam = row["weights"]
    model_lr = row.get("model_lr", 1e-4)
    train = TrainConfig(
        epochs=epochs or row["epochs"],
        model_lr=model_lr,
        adversary_lr=model_lr,
        loss_weights=LossWeights(alpha=a, beta=b, gamma=g, lam=lam),
        seed=seed,
    )
    classifier = ClassifierConfig(lr=row["c_lr"])
    cfg = ExperimentConfig(dataset=dataset, task=row["task"], train=train,
                           classifier=classifier, out_dir=out_dir)
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


def resolve_dataset(config: ExperimentConfig) -> Graph:
    """Load the dataset from disk when present, else build the stand-in."""
    name = config.dataset
    if name == "two-block":
        return synthetic.two_block_fixture(seed=config.data_seed)
    if name == "planted-bias":
        return synthetic.planted_bias_fixture(seed=config.data_seed)
    if config.data_root:
        directory = os.path.join(config.data_root, name)
        if os.path.exists(os.path.join(directory, "manifest.json")):
            return load_dataset_dir(directory)
    graph, _ = synthetic.generate(name, seed=config.data_seed)
    return graph


@dataclass
class RunResult:
    report: MetricsReport
    subgroup_report: MetricsReport | None
    out_dir: str
    history_path: str


def _prepare_graph(config: ExperimentConfig):
    from .data import minibatch_subgraph

    graph = resolve_dataset(config)
    if config.minibatch_nodes and config.minibatch_nodes < graph.n_nodes:
        graph = minibatch_subgraph(graph, config.minibatch_nodes,
                                   derive_seed(config.train.seed, 0xB47C))
    return graph


def _execute(config: ExperimentConfig) -> RunResult:
    os.makedirs(config.out_dir, exist_ok=True)
    graph = _prepare_graph(config)
    seed = config.train.seed

    split = None
    train_graph = graph
    if config.task == "link":
        split = split_edges(graph, LINK_SPLIT_RATIOS, derive_seed(seed, 0x11E),
                            test_neg_ratio=LINK_TEST_NEG_RATIO)
        train_graph = restrict_to_edges(graph, split.train_pos)

    state, _history = fit(train_graph, config.train, out_dir=config.out_dir)
    tg = TensorGraph(train_graph, config.train.torch_dtype(),
                     config.train.dense_threshold)
    # Downstream heads consume the trained encoder's view of the *original*
    # graph; the augmented views only shape the encoder during training.
    _view, h, _h_prime = sample_eval_view(
        state.augmentor, state.encoder, tg, seed,
        ablate_ep=config.train.ablate_ep, ablate_fm=config.train.ablate_fm)

    if config.task == "node":
        if graph.labels is None:
            raise ValueError(f"dataset {config.dataset!r} has no labels for a node task")
        report = evaluate_node(
            h, graph.labels, graph.sensitive,
            (graph.train_mask, graph.val_mask, graph.test_mask),
            config.classifier, config.repeats, seed=seed)
        subgroup = None
    else:
        report, subgroup = evaluate_link(
            h, split, graph.sensitive, config.classifier,
            config.repeats, adjacency=graph.adjacency, seed=seed,
            subgroup_neg_per_pos=SUBGROUP_NEG_PER_POS)

    payload = {"config": config.to_dict(), "dataset": config.dataset,
               "method": config.method, "report": report.to_dict()}
    if subgroup is not None:
        payload["subgroup_report"] = subgroup.to_dict()
    write_json(os.path.join(config.out_dir, "report.json"), payload)
    append_results_row(os.path.join(config.out_dir, "results.csv"),
                       config, report, subgroup)
    return RunResult(report=report, subgroup_report=subgroup,
                     out_dir=config.out_dir,
                     history_path=os.path.join(config.out_dir, "metrics.csv"))


def run_experiment(config: ExperimentConfig) -> MetricsReport:
    """Train, evaluate, persist; returns the primary metrics report."""
    return _execute(config).report


def append_results_row(path: str, config: ExperimentConfig,
                       report: MetricsReport,
                       subgroup: MetricsReport | None) -> None:
    exists = os.path.exists(path)
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if not exists:
            writer.writerow(["method", "dataset", "acc", "auc", "dp_m", "eo_m",
                             "dp_s", "eo_s", "seed_count"])
        writer.writerow([
            config.method, config.dataset,
            round(report.acc, 4),
            "" if report.auc is None else round(report.auc, 4),
            round(report.dp, 4), round(report.eo, 4),
            "" if subgroup is None else round(subgroup.dp, 4),
            "" if subgroup is None else round(subgroup.eo, 4),
            config.repeats,
        ])


# ---------------------------------------------------------------------------
# Ablations
# ---------------------------------------------------------------------------


def ablate(config: ExperimentConfig, which: str) -> MetricsReport:
    """Re-run the experiment with one augmentation component disabled."""
    if which not in ("ep", "fm"):
        raise ValueError("which must be 'ep' or 'fm'")
    train = replace(config.train, ablate_ep=which == "ep",
                    ablate_fm=which == "fm")
    sub = replace(config, train=train,
                  out_dir=os.path.join(config.out_dir, f"ablate_{which}"),
                  method=f"graphair-no-{which}")
    return run_experiment(sub)


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------


@dataclass
class GridResult:
    cells: list  # (params dict, MetricsReport | None, error string | None)
    best_index: int | None
    rule: str

    def best(self):
        if self.best_index is None:
            return None
        return self.cells[self.best_index]


def _grid_cell(args):
    config, alpha, gamma, lam = args
    w = config.train.loss_weights
    weights = LossWeights(alpha=alpha, beta=w.beta, gamma=gamma, lam=lam,
                          tau=w.tau)
    cell_dir = os.path.join(config.out_dir,
                            f"grid_a{alpha}_g{gamma}_l{lam}")
    sub = replace(config, train=replace(config.train, loss_weights=weights),
                  out_dir=cell_dir)
    params = {"alpha": alpha, "gamma": gamma, "lambda": lam}
    try:
        return params, run_experiment(sub), None
    except Exception as exc:  # cell failures recorded, search continues
        return params, None, f"{type(exc).__name__}: {exc}"


GRID_RULE = "max acc s.t. dp,eo within 1.0pp of grid minima"
_GRID_SLACK = 1.0


def grid_search(config: ExperimentConfig) -> GridResult:
    """Exhaustive search over (α, γ, λ); β stays at its configured value.

    The best cell maximizes ACC among cells whose ΔDP and ΔEO are within a
    1.0-point slack of the respective minima over the grid.
    """
    combos = list(itertools.product(config.grid_alpha, config.grid_gamma,
                                    config.grid_lambda))
    tasks = [(config, a, g, lam) for a, g, lam in combos]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            cells = list(pool.map(_grid_cell, tasks))
    else:
        cells = [_grid_cell(t) for t in tasks]

    ok = [(i, rep) for i, (_, rep, err) in enumerate(cells) if err is None]
    best_index = None
    if ok:
        min_dp = min(rep.dp for _, rep in ok)
        min_eo = min(rep.eo for _, rep in ok)
        feasible = [(i, rep) for i, rep in ok
                    if rep.dp <= min_dp + _GRID_SLACK and rep.eo <= min_eo + _GRID_SLACK]
        pool_ = feasible or ok
        best_index = max(pool_, key=lambda t: t[1].acc)[0]

    result = GridResult(cells=cells, best_index=best_index, rule=GRID_RULE)
    write_json(os.path.join(config.out_dir, "grid.json"), {
        "rule": result.rule,
        "best_index": best_index,
        "cells": [{"params": p, "report": None if r is None else r.to_dict(),
                   "error": e} for p, r, e in cells],
    })
    return result


# ---------------------------------------------------------------------------
# Epoch sweep
# ---------------------------------------------------------------------------


def epoch_sweep(config: ExperimentConfig, epoch_list) -> list:
    """Evaluate checkpoints at each requested epoch; one training run total."""
    epoch_list = sorted(set(int(e) for e in epoch_list))
    if not epoch_list:
        raise ValueError("epoch_list is empty")
    train = replace(config.train, epochs=epoch_list[-1],
                    checkpoint_epochs=tuple(epoch_list))
    os.makedirs(config.out_dir, exist_ok=True)
    graph = _prepare_graph(config)
    seed = train.seed
    split = None
    train_graph = graph
    if config.task == "link":
        split = split_edges(graph, LINK_SPLIT_RATIOS, derive_seed(seed, 0x11E),
                            test_neg_ratio=LINK_TEST_NEG_RATIO)
        train_graph = restrict_to_edges(graph, split.train_pos)
    fit(train_graph, train, out_dir=config.out_dir)

    tg = TensorGraph(train_graph, train.torch_dtype(), train.dense_threshold)
    rows = []
    for epoch in epoch_list:
        path = os.path.join(config.out_dir, f"checkpoint_{epoch}.npz")
        augmentor, encoder, _adv, _meta = load_checkpoint(path)
        _view, h, _h_prime = sample_eval_view(augmentor, encoder, tg, seed,
                                              ablate_ep=train.ablate_ep,
                                              ablate_fm=train.ablate_fm)
        if config.task == "node":
            report = evaluate_node(
                h, graph.labels, graph.sensitive,
                (graph.train_mask, graph.val_mask, graph.test_mask),
                config.classifier, config.repeats, seed=seed)
        else:
            report, _sub = evaluate_link(
                h, split, graph.sensitive, config.classifier,
                config.repeats, adjacency=graph.adjacency, seed=seed,
                subgroup_neg_per_pos=SUBGROUP_NEG_PER_POS)
        rows.append((epoch, report))

    sweep_csv = os.path.join(config.out_dir, "epoch_sweep.csv")
    with open(sweep_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "acc", "auc", "dp", "eo"])
        for epoch, rep in rows:
            writer.writerow([epoch, round(rep.acc, 4),
                             "" if rep.auc is None else round(rep.auc, 4),
                             round(rep.dp, 4), round(rep.eo, 4)])
    _plot_sweep(rows, os.path.join(config.out_dir, "epoch_sweep.png"))
    return rows


def _plot_sweep(rows, path: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    epochs = [e for e, _ in rows]
    fig, ax1 = plt.subplots(figsize=(6, 4))
    ax1.plot(epochs, [r.acc for _, r in rows], "o-", label="ACC")
    ax1.set_xlabel("epochs")
    ax1.set_ylabel("ACC (%)")
    ax2 = ax1.twinx()
    ax2.plot(epochs, [r.dp for _, r in rows], "s--", color="tab:red", label="ΔDP")
    ax2.plot(epochs, [r.eo for _, r in rows], "^--", color="tab:orange", label="ΔEO")
    ax2.set_ylabel("gap (%)")
    lines, labels = [], []
    for ax in (ax1, ax2):
        l, lab = ax.get_legend_handles_labels()
        lines += l
        labels += lab
    ax1.legend(lines, labels, loc="best")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


# ---------------------------------------------------------------------------
# Trade-off plot
# ---------------------------------------------------------------------------


def plot_tradeoff(reports: list, out_prefix: str, labels: list[str] | None = None):
    """Scatter accuracy against fairness gaps; emits PNG plus a points CSV.

    Link-task report pairs may be passed as (mixed, subgroup) tuples to get
    both ΔDP variants on the panel.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not reports:
        raise ValueError("need at least one report")
    labels = labels or [f"run{i}" for i in range(len(reports))]
    points = []
    for label, rep in zip(labels, reports):
        if isinstance(rep, tuple):
            mixed, sub = rep
            points.append((label + " (mixed)", mixed.dp, mixed.acc))
            points.append((label + " (subgroup)", sub.dp, sub.acc))
        else:
            points.append((label, rep.dp, rep.acc))

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, dp, acc in points:
        ax.scatter(dp, acc)
        ax.annotate(label, (dp, acc), fontsize=8,
                    textcoords="offset points", xytext=(4, 4))
    ax.set_xlabel("ΔDP (%)")
    ax.set_ylabel("ACC (%)")
    ax.set_title("accuracy-fairness trade-off (upper-left is better)")
    png = f"{out_prefix}.png"
    fig.savefig(png, dpi=120, bbox_inches="tight")
    plt.close(fig)

    csv_path = f"{out_prefix}.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "dp", "acc"])
        writer.writerows(points)
    return [png, csv_path]


# ---------------------------------------------------------------------------
# Claim-3 analysis entrypoint (used by the CLI `analyze` verb)
# ---------------------------------------------------------------------------


def analyze_experiment(config: ExperimentConfig, checkpoint: str | None = None,
                       batch_size: int | None = None):
    """Produce homophily/Spearman artifacts for a trained augmentation model.

    Trains first when no checkpoint is given. Returns (HomophilyReport,
    SpearmanReport, artifact paths).
    """
    graph = _prepare_graph(config)
    if checkpoint is None:
        state, _ = fit(graph, config.train, out_dir=config.out_dir)
        augmentor, encoder = state.augmentor, state.encoder
    else:
        augmentor, encoder, _adv, _meta = load_checkpoint(checkpoint)
    tg = TensorGraph(graph, config.train.torch_dtype(),
                     config.train.dense_threshold)
    view, _h, _hp = sample_eval_view(augmentor, encoder, tg, config.train.seed,
                                     ablate_ep=config.train.ablate_ep,
                                     ablate_fm=config.train.ablate_fm)
    homophily, spearman = claim3_report(graph, view, batch_size=batch_size,
                                        seed=config.train.seed)
    paths = save_claim3_artifacts(homophily, spearman,
                                  os.path.join(config.out_dir, "analysis"))
    return homophily, spearman, paths
