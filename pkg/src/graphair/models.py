"""Neural components: augmentation model g, representation encoder f,
adversary k, and the downstream classifier head.

The augmentation model g owns a graph-convolution encoder ``g_enc`` whose
embeddings drive two heads: edge perturbation (pairwise bilinear scores
through a sigmoid) and feature masking (per node-feature entry). Sampling of
discrete edges/masks uses a relaxed Bernoulli (binary concrete) with a
straight-through estimator so gradients reach the probabilities.

Graphs up to ``dense_threshold`` nodes are scored densely over all pairs;
larger graphs restrict edge scoring to the existing edges plus an equal
number of freshly sampled non-edges per epoch (the candidate set).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import torch
import torch.nn as nn

from .data import Graph

EPS = 1e-8


def normalize_adjacency(adj: torch.Tensor) -> torch.Tensor:
    """Symmetrically normalized adjacency with self-loops, D^-1/2 (A+I) D^-1/2.

    Accepts a dense (n, n) tensor or a sparse COO tensor; returns the same
    layout. Differentiable w.r.t. the input values.
    """
    n = adj.shape[0]
    if adj.is_sparse:
        adj = adj.coalesce()
        idx = adj.indices()
        val = adj.values()
        loop = torch.arange(n, device=adj.device)
        idx = torch.cat([idx, torch.stack([loop, loop])], dim=1)
        val = torch.cat([val, torch.ones(n, dtype=val.dtype, device=val.device)])
        deg = torch.zeros(n, dtype=val.dtype, device=val.device)
        deg = deg.index_add(0, idx[0], val)
        dinv = deg.clamp(min=EPS).pow(-0.5)
        val = val * dinv[idx[0]] * dinv[idx[1]]
        return torch.sparse_coo_tensor(idx, val, (n, n),
                                       check_invariants=False).coalesce()
    a_hat = adj + torch.eye(n, dtype=adj.dtype, device=adj.device)
    deg = a_hat.sum(dim=1)
    dinv = deg.clamp(min=EPS).pow(-0.5)
    return dinv.unsqueeze(1) * a_hat * dinv.unsqueeze(0)


def _propagate(adj_norm: torch.Tensor, h: torch.Tensor) -> torch.Tensor:
    if adj_norm.is_sparse:
        return torch.sparse.mm(adj_norm, h)
    return adj_norm @ h


class GCN(nn.Module):
    """Stack of graph-convolution layers with ReLU between them.

    Layers are bias-free: a bias is a node-constant vector that propagation
    preserves while it averages the per-node signal away, so with biases the
    untrained network starts near-collapsed along one shared direction.
    """

    def __init__(self, in_dim: int, hidden: int, out_dim: int, n_layers: int = 2):
        super().__init__()
        dims = [in_dim] + [hidden] * (n_layers - 1) + [out_dim]
        self.lins = nn.ModuleList(nn.Linear(a, b, bias=False)
                                  for a, b in zip(dims[:-1], dims[1:]))

    def forward(self, adj_norm: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
        h = x
        for i, lin in enumerate(self.lins):
            h = _propagate(adj_norm, lin(h))
            if i < len(self.lins) - 1:
                h = torch.relu(h)
        return h


def straight_through_bernoulli(probs: torch.Tensor, temperature: float,
                               generator: torch.Generator | None = None) -> torch.Tensor:
    """Hard Bernoulli sample with gradients through the relaxed path.

    The forward value is exactly 1[logit(p) + logistic noise > 0], i.e. an
    unbiased Bernoulli(p) draw independent of the temperature; the backward
    pass sees the binary-concrete relaxation sigmoid((logit(p) + noise)/T).
    """
    # The clamp margin must be representable next to 1.0 in this dtype;
    # 1 - 1e-8 rounds back to 1.0 in float32 and log1p(-p) then yields -inf
    # in the backward pass once probabilities saturate.
    margin = max(EPS, float(torch.finfo(probs.dtype).eps))
    p = probs.clamp(min=margin, max=1.0 - margin)
    u = torch.rand(p.shape, generator=generator, dtype=p.dtype, device=p.device)
    u = u.clamp(min=margin, max=1.0 - margin)
    noise = torch.log(u) - torch.log1p(-u)
    logits = torch.log(p) - torch.log1p(-p)
    y_soft = torch.sigmoid((logits + noise) / temperature)
    y_hard = (y_soft > 0.5).to(p.dtype)
    # parenthesized so the forward value is exactly y_hard (the residual
    # cancels to 0.0 before the add; left-to-right order would round)
    return y_hard + (y_soft - y_soft.detach())


@dataclass
class AugmentedView:
    """One sampled fair view G' = (A', X').

    In dense mode ``edge_probs``/``sampled_adjacency`` are full symmetric
    n×n matrices. In candidate mode ``candidate_pairs`` holds the scored
    (i, j) pairs (i < j), ``edge_probs``/``edge_samples`` align with it, and
    ``sampled_adjacency`` is a sparse tensor assembled from the samples.
    """

    edge_probs: torch.Tensor
    sampled_adjacency: torch.Tensor
    mask_probs: torch.Tensor
    masked_features: torch.Tensor
    candidate_pairs: torch.Tensor | None = None
    edge_samples: torch.Tensor | None = None
    edge_targets: torch.Tensor | None = None


class Augmentor(nn.Module):
    """Augmentation model g: encoder plus edge-perturbation and feature-mask heads."""

    def __init__(self, in_dim: int, hidden: int = 128, temperature: float = 1.0):
        super().__init__()
        if temperature <= 0:
            raise ValueError("temperature must be > 0")
        self.enc = GCN(in_dim, hidden, hidden)
        self.edge_transform = nn.Linear(hidden, hidden)
        self.edge_bias = nn.Parameter(torch.zeros(1))
        self.mask_head = nn.Sequential(
            nn.Linear(hidden, hidden), nn.ReLU(), nn.Linear(hidden, in_dim)
        )
        self.temperature = temperature

    # -- embeddings ---------------------------------------------------------

    def encode(self, adj_norm: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
        """Deep embeddings Z that inform both augmentation heads."""
        return self.enc(adj_norm, x)

    # -- edge perturbation ---------------------------------------------------

    @torch.no_grad()
    def set_output_priors(self, tg: "TensorGraph", edge_prior: float,
                          keep_prior: float = 0.9,
                          sample_rng: np.random.Generator | None = None) -> None:
        """Center the head logits so the untrained augmentor already emits a
        sane view: edge probabilities averaging the graph's own density and
        feature masks that mostly keep.

        Without this, every pair starts near p=0.5, the dense-sampled A' is
        a half-complete random graph, its representations are nearly
        constant across nodes, and the contrastive term then pulls H toward
        that constant instead of separating it. Centering is measured on the
        actual embeddings (all pairs when dense, sampled pairs otherwise) so
        it holds regardless of weight-init scale.
        """
        edge_prior = min(max(edge_prior, 1e-4), 1.0 - 1e-4)
        z = self.encode(tg.adj_norm, tg.x)
        ze = self.edge_transform(z)
        if tg.dense:
            scores = ze @ ze.T
            mean_score = (scores.sum() - scores.diagonal().sum()) / (
                tg.n * (tg.n - 1))
        else:
            rng = sample_rng if sample_rng is not None else np.random.default_rng(0)
            pairs = rng.integers(0, tg.n, size=(100_000, 2))
            pairs = pairs[pairs[:, 0] != pairs[:, 1]]
            i = torch.as_tensor(pairs[:, 0])
            j = torch.as_tensor(pairs[:, 1])
            mean_score = (ze[i] * ze[j]).sum(dim=1).mean()
        prior_logit = math.log(edge_prior / (1.0 - edge_prior))
        self.edge_bias.fill_(prior_logit - float(mean_score))

        mask_scores = self.mask_head(z)
        keep_logit = math.log(keep_prior / (1.0 - keep_prior))
        self.mask_head[-1].bias.add_(keep_logit - mask_scores.mean(dim=0))

    def edge_probabilities(self, z: torch.Tensor) -> torch.Tensor:
        """Symmetric n×n edge probabilities from a bilinear score on
        transformed embeddings."""
        ze = self.edge_transform(z)
        logits = ze @ ze.T + self.edge_bias
        logits = 0.5 * (logits + logits.T)
        return torch.sigmoid(logits)

    def perturb_edges(self, z: torch.Tensor,
                      generator: torch.Generator | None = None):
        """Dense edge resampling: returns (edge_probs, sampled_adjacency).

        The upper triangle is sampled once and mirrored, so A' is symmetric
        with a zero diagonal by construction.
        """
        n = z.shape[0]
        probs = self.edge_probabilities(z)
        iu = torch.triu_indices(n, n, offset=1)
        sampled = straight_through_bernoulli(probs[iu[0], iu[1]],
                                             self.temperature, generator)
        a_prime = probs.new_zeros((n, n))
        a_prime[iu[0], iu[1]] = sampled
        a_prime = a_prime + a_prime.T
        return probs, a_prime

    def perturb_candidates(self, z: torch.Tensor, pairs: torch.Tensor,
                           generator: torch.Generator | None = None):
        """Candidate-set edge resampling for large graphs.

        ``pairs`` is a (k, 2) long tensor with i < j. Returns per-pair
        probabilities, per-pair hard samples, and the sparse A' they induce.
        """
        ze = self.edge_transform(z)
        logits = (ze[pairs[:, 0]] * ze[pairs[:, 1]]).sum(dim=1) + self.edge_bias
        probs = torch.sigmoid(logits)
        sampled = straight_through_bernoulli(probs, self.temperature, generator)
        idx = torch.cat([pairs.T, pairs.flip(1).T], dim=1)
        val = torch.cat([sampled, sampled])
        n = z.shape[0]
        a_prime = torch.sparse_coo_tensor(idx, val, (n, n),
                                          check_invariants=False)
        return probs, sampled, a_prime

    # -- feature masking -----------------------------------------------------

    def mask_probabilities(self, z: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.mask_head(z))

    def mask_features(self, z: torch.Tensor, x: torch.Tensor,
                      generator: torch.Generator | None = None):
        """Entry-wise feature masking: returns (mask_probs, masked_features)."""
        probs = self.mask_probabilities(z)
        mask = straight_through_bernoulli(probs, self.temperature, generator)
        return probs, mask * x

    # -- full augmentation ----------------------------------------------------

    def augment(self, tg: "TensorGraph", generator: torch.Generator | None = None,
                ablate_ep: bool = False, ablate_fm: bool = False,
                candidate_pairs: torch.Tensor | None = None) -> AugmentedView:
        """Produce one augmented view, honoring the ablation flags.

        With ``ablate_ep`` the adjacency passes through bit-exactly; with
        ``ablate_fm`` the features do. Candidate mode requires the caller to
        supply this epoch's candidate pairs.
        """
        z = self.encode(tg.adj_norm, tg.x)
        pairs = samples = targets = None
        if ablate_ep:
            edge_probs = tg.adjacency()
            a_prime = tg.adjacency()
        elif tg.dense:
            edge_probs, a_prime = self.perturb_edges(z, generator)
        else:
            if candidate_pairs is None:
                raise ValueError("candidate mode needs candidate_pairs per epoch")
            pairs = candidate_pairs
            edge_probs, samples, a_prime = self.perturb_candidates(z, pairs, generator)
            targets = tg.pair_values(pairs)
        if ablate_fm:
            mask_probs = torch.ones_like(tg.x)
            x_prime = tg.x
        else:
            mask_probs, x_prime = self.mask_features(z, tg.x, generator)
        return AugmentedView(edge_probs=edge_probs, sampled_adjacency=a_prime,
                             mask_probs=mask_probs, masked_features=x_prime,
                             candidate_pairs=pairs, edge_samples=samples,
                             edge_targets=targets)


class Encoder(nn.Module):
    """Representation encoder f; produces the embeddings used downstream."""

    def __init__(self, in_dim: int, hidden: int = 128, out_dim: int | None = None):
        super().__init__()
        self.gcn = GCN(in_dim, hidden, out_dim or hidden)

    def represent(self, adjacency: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
        """Embed nodes of the graph given by a raw (unnormalized) adjacency."""
        return self.gcn(normalize_adjacency(adjacency), x)

    forward = represent


class Adversary(nn.Module):
    """Adversary k: predicts the sensitive group from representations."""

    def __init__(self, in_dim: int, n_groups: int, hidden: int = 128):
        super().__init__()
        self.mlp = nn.Sequential(
            nn.Linear(in_dim, hidden), nn.ReLU(), nn.Linear(hidden, n_groups)
        )

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        return self.mlp(h)

    def adversary_predict(self, h: torch.Tensor) -> torch.Tensor:
        """Probability rows over the |S| groups (rows sum to 1)."""
        return torch.softmax(self.mlp(h), dim=1)


class MLPClassifier(nn.Module):
    """One-hidden-layer downstream head used by the evaluation protocol."""

    def __init__(self, in_dim: int, hidden: int = 128):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(in_dim, hidden), nn.ReLU(),
                                 nn.Linear(hidden, 1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x).squeeze(-1)


class TensorGraph:
    """Torch-side mirror of a Graph, prepared once per training run.

    Holds features, sensitive labels, the adjacency (dense below
    ``dense_threshold`` nodes, sparse above), the normalized original
    adjacency for g_enc, and the edge list for candidate sampling.
    """

    def __init__(self, graph: Graph, dtype: torch.dtype = torch.float32,
                 dense_threshold: int = 5000):
        n = graph.n_nodes
        self.n = n
        self.d = graph.n_features
        self.n_groups = graph.n_sensitive
        self.dtype = dtype
        self.x = torch.as_tensor(graph.features, dtype=dtype)
        self.s = torch.as_tensor(graph.sensitive, dtype=torch.long)
        self.dense = n <= dense_threshold
        self.edges = graph.edges()
        if self.dense:
            self._adj_sparse = None
            self._adj_dense = torch.as_tensor(graph.adjacency.toarray(),
                                              dtype=dtype)
        else:
            coo = graph.adjacency.tocoo()
            idx = torch.stack([torch.as_tensor(coo.row, dtype=torch.long),
                               torch.as_tensor(coo.col, dtype=torch.long)])
            self._adj_sparse = torch.sparse_coo_tensor(
                idx, torch.as_tensor(coo.data, dtype=dtype), (n, n),
                check_invariants=False).coalesce()
            self._adj_dense = None
        self.adj_norm = normalize_adjacency(self.adjacency())
        # Sorted linear keys of existing edges, for non-edge rejection tests.
        self._edge_keys = np.sort(self.edges[:, 0].astype(np.int64) * n
                                  + self.edges[:, 1])
        for name in ("train_mask", "val_mask", "test_mask"):
            m = getattr(graph, name)
            setattr(self, name, None if m is None else torch.as_tensor(m))

    def density(self) -> float:
        """Fraction of possible (unordered, off-diagonal) pairs that are edges."""
        if self.n < 2:
            return 0.0
        return 2.0 * len(self.edges) / (self.n * (self.n - 1))

    def adjacency(self) -> torch.Tensor:
        return self._adj_dense if self.dense else self._adj_sparse

    def _is_edge_key(self, keys: np.ndarray) -> np.ndarray:
        if len(self._edge_keys) == 0:
            return np.zeros(len(keys), dtype=bool)
        pos = np.clip(np.searchsorted(self._edge_keys, keys), 0,
                      len(self._edge_keys) - 1)
        return self._edge_keys[pos] == keys

    def pair_values(self, pairs: torch.Tensor) -> torch.Tensor:
        """0/1 ground-truth adjacency values for (i, j) candidate pairs."""
        keys = pairs[:, 0].numpy().astype(np.int64) * self.n + pairs[:, 1].numpy()
        hit = self._is_edge_key(keys)
        return torch.as_tensor(hit.astype(np.float64), dtype=self.dtype)

    def sample_candidate_pairs(self, rng: np.random.Generator) -> torch.Tensor:
        """This epoch's candidate set: all edges plus as many distinct non-edges."""
        m = len(self.edges)
        n = self.n
        neg_keys = np.empty(0, dtype=np.int64)
        while len(neg_keys) < m:
            draw = 2 * (m - len(neg_keys)) + 64
            u = rng.integers(0, n, size=draw)
            v = rng.integers(0, n, size=draw)
            lo, hi = np.minimum(u, v), np.maximum(u, v)
            keep = lo < hi
            keys = lo[keep].astype(np.int64) * n + hi[keep]
            keys = keys[~self._is_edge_key(keys)]
            neg_keys = np.union1d(neg_keys, keys)
        neg_keys = neg_keys[:m]
        neg = np.stack([neg_keys // n, neg_keys % n], axis=1)
        pairs = np.concatenate([self.edges, neg])
        return torch.as_tensor(pairs, dtype=torch.long)
