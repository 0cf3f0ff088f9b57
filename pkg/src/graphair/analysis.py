"""Graph-level bias analyses: node sensitive homophily and feature-sensitive
Spearman correlation, compared between the original graph and a fair view.

Large graphs can be analyzed on a node mini-batch; the same sampled node set
is used for both views so the comparison stays paired.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import torch
from scipy.stats import rankdata

from .data import Graph
from .models import AugmentedView
from .utils import derive_seed, write_json

HIST_BINS = 20


def _to_csr(adjacency) -> sp.csr_matrix:
    if isinstance(adjacency, torch.Tensor):
        if adjacency.is_sparse:
            a = adjacency.coalesce()
            idx = a.indices().numpy()
            return sp.csr_matrix(
                (a.values().detach().numpy(), (idx[0], idx[1])),
                shape=tuple(a.shape))
        adjacency = adjacency.detach().numpy()
    if sp.issparse(adjacency):
        return adjacency.tocsr()
    return sp.csr_matrix(np.asarray(adjacency))


def sensitive_homophily(adjacency, s) -> np.ndarray:
    """Per-node fraction of neighbors sharing the node's sensitive value.

    Nodes with degree 0 are excluded from the statistic and returned as NaN.
    """
    adj = _to_csr(adjacency)
    s = np.asarray(s, dtype=np.int64)
    n = adj.shape[0]
    onehot = np.zeros((n, int(s.max()) + 1), dtype=np.float64)
    onehot[np.arange(n), s] = 1.0
    same = (adj @ onehot)[np.arange(n), s]
    deg = np.asarray(adj.sum(axis=1)).ravel()
    out = np.full(n, np.nan)
    nz = deg > 0
    out[nz] = same[nz] / deg[nz]
    return out


def spearman_sensitive(x, s) -> tuple[np.ndarray, np.ndarray]:
    """Spearman ρ of every feature column against the sensitive attribute.

    Ties get average ranks. Returns (rho, constant_flags); a constant column
    has undefined correlation and is reported as 0 with its flag set.
    """
    x = np.asarray(x, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if x.shape[0] < 3:
        raise ValueError("need at least 3 rows for a rank correlation")
    rx = rankdata(x, axis=0)
    rs = rankdata(s)
    constant = x.std(axis=0) == 0
    rx_c = rx - rx.mean(axis=0)
    rs_c = rs - rs.mean()
    denom = np.sqrt((rx_c ** 2).sum(axis=0) * (rs_c ** 2).sum())
    rho = np.zeros(x.shape[1])
    ok = ~constant & (denom > 0) & (rs_c.std() > 0)
    if rs_c.std() == 0:
        # constant sensitive vector: correlation undefined everywhere
        return rho, np.ones(x.shape[1], dtype=bool)
    rho[ok] = (rx_c[:, ok] * rs_c[:, None]).sum(axis=0) / denom[ok]
    return rho, constant


@dataclass
class HomophilyReport:
    values_original: np.ndarray
    values_fair: np.ndarray
    mean_original: float
    mean_fair: float
    isolated_original: int
    isolated_fair: int
    hist_edges: np.ndarray
    hist_original: np.ndarray
    hist_fair: np.ndarray
    batch_nodes: int | None = None

    def to_dict(self) -> dict:
        return {
            "mean_original": self.mean_original,
            "mean_fair": self.mean_fair,
            "isolated_original": self.isolated_original,
            "isolated_fair": self.isolated_fair,
            "hist_edges": self.hist_edges.tolist(),
            "hist_original": self.hist_original.tolist(),
            "hist_fair": self.hist_fair.tolist(),
            "batch_nodes": self.batch_nodes,
        }


@dataclass
class SpearmanReport:
    rho_original: np.ndarray
    rho_fair: np.ndarray
    constant_original: np.ndarray
    constant_fair: np.ndarray
    top_indices: np.ndarray
    top_k: int = 10
    batch_nodes: int | None = None

    def reduced_count(self) -> int:
        """How many of the top-|ρ| original features shrank in the fair view."""
        orig = np.abs(self.rho_original[self.top_indices])
        fair = np.abs(self.rho_fair[self.top_indices])
        return int((fair < orig).sum())

    def to_dict(self) -> dict:
        return {
            "rho_original": self.rho_original.tolist(),
            "rho_fair": self.rho_fair.tolist(),
            "constant_original": self.constant_original.tolist(),
            "constant_fair": self.constant_fair.tolist(),
            "top_indices": self.top_indices.tolist(),
            "top_k": self.top_k,
            "reduced_in_top": self.reduced_count(),
            "batch_nodes": self.batch_nodes,
        }


def _hist(values: np.ndarray) -> np.ndarray:
    finite = values[~np.isnan(values)]
    counts, _ = np.histogram(finite, bins=HIST_BINS, range=(0.0, 1.0))
    return counts


def claim3_report(graph: Graph, view: AugmentedView, batch_size: int | None = None,
                  seed: int = 0, top_k: int = 10):
    """Homophily and Spearman comparisons between G and the fair view G'.

    With ``batch_size`` set, one node sample (shared by both views) is
    analyzed instead of the full graph. Fair-view homophily uses the sampled
    adjacency A'; fair-view correlations use the masked features X'.
    """
    a_orig = graph.adjacency.tocsr()
    a_fair = _to_csr(view.sampled_adjacency)
    x_orig = graph.features
    x_fair = view.masked_features.detach().numpy() \
        if isinstance(view.masked_features, torch.Tensor) else np.asarray(view.masked_features)
    s = graph.sensitive
    n = graph.n_nodes
    batch = None
    if batch_size is not None and batch_size < n:
        rng = np.random.default_rng(derive_seed(seed, 0xC1A1))
        idx = np.sort(rng.choice(n, size=batch_size, replace=False))
        a_orig = a_orig[idx][:, idx]
        a_fair = a_fair[idx][:, idx]
        x_orig = x_orig[idx]
        x_fair = x_fair[idx]
        s = s[idx]
        batch = batch_size

    hom_o = sensitive_homophily(a_orig, s)
    hom_f = sensitive_homophily(a_fair, s)
    homophily = HomophilyReport(
        values_original=hom_o,
        values_fair=hom_f,
        mean_original=float(np.nanmean(hom_o)),
        mean_fair=float(np.nanmean(hom_f)),
        isolated_original=int(np.isnan(hom_o).sum()),
        isolated_fair=int(np.isnan(hom_f).sum()),
        hist_edges=np.linspace(0.0, 1.0, HIST_BINS + 1),
        hist_original=_hist(hom_o),
        hist_fair=_hist(hom_f),
        batch_nodes=batch,
    )

    rho_o, const_o = spearman_sensitive(x_orig, s)
    rho_f, const_f = spearman_sensitive(x_fair, s)
    order = np.argsort(-np.abs(rho_o), kind="stable")
    spearman = SpearmanReport(
        rho_original=rho_o, rho_fair=rho_f,
        constant_original=const_o, constant_fair=const_f,
        top_indices=order[:top_k], top_k=top_k, batch_nodes=batch,
    )
    return homophily, spearman


def save_claim3_artifacts(homophily: HomophilyReport, spearman: SpearmanReport,
                          out_dir: str) -> list[str]:
    """Persist reports as JSON plus histogram / bar-chart images."""
    import os

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    paths = []
    jpath = os.path.join(out_dir, "claim3.json")
    write_json(jpath, {"homophily": homophily.to_dict(),
                       "spearman": spearman.to_dict()})
    paths.append(jpath)

    fig, ax = plt.subplots(figsize=(6, 4))
    centers = 0.5 * (homophily.hist_edges[:-1] + homophily.hist_edges[1:])
    width = homophily.hist_edges[1] - homophily.hist_edges[0]
    ax.bar(centers - width / 4, homophily.hist_original, width / 2,
           label=f"original (mean {homophily.mean_original:.3f})")
    ax.bar(centers + width / 4, homophily.hist_fair, width / 2,
           label=f"fair (mean {homophily.mean_fair:.3f})")
    ax.set_xlabel("node sensitive homophily")
    ax.set_ylabel("count")
    ax.legend()
    hpath = os.path.join(out_dir, "homophily_hist.png")
    fig.savefig(hpath, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(hpath)

    fig, ax = plt.subplots(figsize=(7, 4))
    top = spearman.top_indices
    pos = np.arange(len(top))
    ax.bar(pos - 0.2, np.abs(spearman.rho_original[top]), 0.4, label="original")
    ax.bar(pos + 0.2, np.abs(spearman.rho_fair[top]), 0.4, label="fair")
    ax.set_xticks(pos, [str(i) for i in top])
    ax.set_xlabel("feature index (top by original |ρ|)")
    ax.set_ylabel("|Spearman ρ| vs sensitive attribute")
    ax.legend()
    spath = os.path.join(out_dir, "spearman_top.png")
    fig.savefig(spath, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(spath)
    return paths
