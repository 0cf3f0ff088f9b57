"""Deterministic synthetic graphs.

Two families live here:

* Stand-in datasets that reproduce the published summary statistics of the
  six benchmark graphs (node/edge/feature counts and number of sensitive
  values) exactly, for use where the original data files cannot be
  redistributed.  Structure is a stochastic block model with exact edge
  counts; blocks are the cross product of sensitive groups and latent
  communities, so the sensitive attribute is visible in both edges and
  features while an orthogonal community signal carries the task.
* Small fixtures with planted, analytically known bias used by the test
  suite (a two-block graph and a feature-leak fixture).

Everything is a pure function of its seed.
"""

from __future__ import annotations

import os

import numpy as np
import pandas as pd

from .data import DatasetSpec, ExpectedStats, Graph, adjacency_from_edges, write_manifest

# Published summary statistics for the six benchmark datasets. ``edges``
# follows each source's own counting convention: "directed" sources report
# both directions of every undirected edge.
TABLE_STATS = {
    "nba": dict(nodes=403, edges=16570, features=39, sensitive_values=2,
                convention="directed"),
    "pokec-z": dict(nodes=67797, edges=882765, features=59, sensitive_values=2,
                    convention="undirected"),
    "pokec-n": dict(nodes=66569, edges=729129, features=59, sensitive_values=2,
                    convention="undirected"),
    "citeseer": dict(nodes=3327, edges=9104, features=3703, sensitive_values=6,
                     convention="directed"),
    "cora": dict(nodes=2708, edges=10556, features=1433, sensitive_values=7,
                 convention="directed"),
    "pubmed": dict(nodes=19717, edges=88648, features=500, sensitive_values=3,
                   convention="directed"),
}


def expected_stats(name: str) -> ExpectedStats:
    row = TABLE_STATS[name]
    return ExpectedStats(
        nodes=row["nodes"],
        edges=row["edges"],
        features=row["features"],
        sensitive_values=row["sensitive_values"],
    )


def unique_edge_count(name: str) -> int:
    """Number of distinct undirected edges implied by the published count."""
    row = TABLE_STATS[name]
    return row["edges"] // 2 if row["convention"] == "directed" else row["edges"]


# ---------------------------------------------------------------------------
# Exact-count stochastic block model
# ---------------------------------------------------------------------------


def hamilton_round(weights: np.ndarray, total: int) -> np.ndarray:
    """Apportion ``total`` integer units proportionally to ``weights``.

    Largest-remainder rounding: floors plus one extra unit to the cells with
    the biggest fractional parts. Deterministic.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.sum() <= 0:
        raise ValueError("weights must have positive sum")
    quota = total * weights / weights.sum()
    counts = np.floor(quota).astype(np.int64)
    short = total - counts.sum()
    order = np.argsort(-(quota - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def _sample_pairs(nodes_a: np.ndarray, nodes_b: np.ndarray | None, count: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Sample ``count`` distinct node pairs within a block (nodes_b None) or
    across two disjoint blocks. Enumerates small cells, rejection-samples
    sparse ones."""
    if count == 0:
        return np.empty((0, 2), dtype=np.int64)
    if nodes_b is None:
        m = len(nodes_a)
        total = m * (m - 1) // 2
    else:
        total = len(nodes_a) * len(nodes_b)
    if count > total:
        raise ValueError(f"cell holds {total} pairs, cannot place {count} edges")

    if total <= 2_000_000 or count > 0.2 * total:
        picks = rng.choice(total, size=count, replace=False)
        if nodes_b is None:
            # decode upper-triangle linear index: i < j over len(nodes_a)
            i = (m - 2 - np.floor(
                np.sqrt(-8.0 * picks + 4.0 * m * (m - 1) - 7) / 2.0 - 0.5)).astype(np.int64)
            j = (picks + i + 1 - m * (m - 1) // 2 + (m - i) * ((m - i) - 1) // 2).astype(np.int64)
            u, v = nodes_a[i], nodes_a[j]
        else:
            u = nodes_a[picks // len(nodes_b)]
            v = nodes_b[picks % len(nodes_b)]
    else:
        seen: set[int] = set()
        us, vs = [], []
        nb = len(nodes_a) if nodes_b is None else len(nodes_b)
        while len(us) < count:
            draw = 2 * (count - len(us)) + 64
            if nodes_b is None:
                ii = rng.integers(0, len(nodes_a), size=draw)
                jj = rng.integers(0, len(nodes_a), size=draw)
                keep = ii != jj
                ii, jj = np.minimum(ii, jj)[keep], np.maximum(ii, jj)[keep]
                cu, cv = nodes_a[ii], nodes_a[jj]
                keys = ii.astype(np.int64) * nb + jj
            else:
                ii = rng.integers(0, len(nodes_a), size=draw)
                jj = rng.integers(0, nb, size=draw)
                cu, cv = nodes_a[ii], nodes_b[jj]
                keys = ii.astype(np.int64) * nb + jj
            for k in range(len(keys)):
                key = int(keys[k])
                if key in seen:
                    continue
                seen.add(key)
                us.append(cu[k])
                vs.append(cv[k])
                if len(us) == count:
                    break
        u = np.asarray(us, dtype=np.int64)
        v = np.asarray(vs, dtype=np.int64)
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    return np.stack([lo, hi], axis=1)


def exact_sbm_edges(block_of: np.ndarray, weight: np.ndarray, total_edges: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Sample exactly ``total_edges`` undirected edges from a block model.

    ``block_of`` assigns each node a block id; ``weight[a, b]`` is the
    relative edge propensity between blocks. Edge counts per block pair are
    apportioned deterministically (largest remainder) proportional to
    weight x available pairs, then that many distinct pairs are drawn
    uniformly inside each cell.
    """
    blocks = [np.flatnonzero(block_of == b) for b in range(int(block_of.max()) + 1)]
    cells = []
    w = []
    cap = []
    for a in range(len(blocks)):
        for b in range(a, len(blocks)):
            if a == b:
                n_pairs = len(blocks[a]) * (len(blocks[a]) - 1) // 2
            else:
                n_pairs = len(blocks[a]) * len(blocks[b])
            cells.append((a, b))
            cap.append(n_pairs)
            w.append(weight[a, b] * n_pairs)
    counts = hamilton_round(np.asarray(w), total_edges)
    cap = np.asarray(cap)
    # Push any excess beyond a cell's capacity into the roomiest cells.
    for _ in range(len(cells)):
        over = counts - cap
        if (over <= 0).all():
            break
        excess = int(over[over > 0].sum())
        counts = np.minimum(counts, cap)
        room = cap - counts
        idx = np.argsort(-room, kind="stable")
        for i in idx:
            take = min(excess, int(room[i]))
            counts[i] += take
            excess -= take
            if excess == 0:
                break
    parts = []
    for (a, b), c in zip(cells, counts):
        if c == 0:
            continue
        nb = None if a == b else blocks[b]
        parts.append(_sample_pairs(blocks[a], nb, int(c), rng))
    edges = np.concatenate(parts) if parts else np.empty((0, 2), dtype=np.int64)
    return edges[np.lexsort((edges[:, 1], edges[:, 0]))]


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _split_blocks(n: int, k: int) -> np.ndarray:
    """Assign n nodes to k contiguous groups whose sizes differ by at most 1."""
    sizes = np.full(k, n // k, dtype=np.int64)
    sizes[: n % k] += 1
    return np.repeat(np.arange(k), sizes)


def _stratified_split(strata: np.ndarray, ratios, rng: np.random.Generator) -> np.ndarray:
    """Per-stratum train/val/test assignment; returns string array.

    Ratios are honored within every stratum up to one node, which keeps the
    composition of each fold essentially identical to the population and
    makes downstream group rates stable by construction.
    """
    out = np.empty(len(strata), dtype=object)
    for value in np.unique(strata):
        members = np.flatnonzero(strata == value)
        members = members[rng.permutation(len(members))]
        n_train = int(round(ratios[0] * len(members)))
        n_val = int(round(ratios[1] * len(members)))
        out[members[:n_train]] = "train"
        out[members[n_train:n_train + n_val]] = "val"
        out[members[n_train + n_val:]] = "test"
    return out.astype(str)


def _masks_from_split(split: np.ndarray):
    return tuple(np.asarray(split == part) for part in ("train", "val", "test"))


def write_dataset(out_dir: str, name: str, graph: Graph, split: np.ndarray | None,
                  feature_decimals: int | None = None) -> DatasetSpec:
    """Write a graph in the canonical nodes/edges/manifest layout."""
    os.makedirs(out_dir, exist_ok=True)
    feats = graph.features
    if feature_decimals is not None:
        feats = np.round(feats, feature_decimals)
    if np.allclose(feats, np.round(feats)) and np.abs(feats).max(initial=0) < 127:
        feats = feats.astype(np.int8)
    cols = {f"x{j}": feats[:, j] for j in range(feats.shape[1])}
    df = pd.DataFrame(cols)
    df.insert(0, "id", np.arange(graph.n_nodes))
    df["sensitive"] = graph.sensitive
    if graph.labels is not None:
        df["label"] = graph.labels
    if split is not None:
        df["split"] = split
    df.to_csv(os.path.join(out_dir, "nodes.csv"), index=False)
    pd.DataFrame(graph.edges(), columns=["src", "dst"]).to_csv(
        os.path.join(out_dir, "edges.csv"), index=False
    )
    row = TABLE_STATS[name]
    spec = DatasetSpec(
        name=name,
        node_file=os.path.join(out_dir, "nodes.csv"),
        edge_file=os.path.join(out_dir, "edges.csv"),
        sensitive_column="sensitive",
        label_column="label" if graph.labels is not None else None,
        split_column="split" if split is not None else None,
        edge_count_convention=row["convention"],
        expected_stats=expected_stats(name),
    )
    write_manifest(spec, out_dir)
    return spec


# ---------------------------------------------------------------------------
# Benchmark stand-ins
# ---------------------------------------------------------------------------


def _nba(seed: int):
    """403-node stand-in with a two-level block structure.

    Sensitive groups s in {0,1} shape both edges and the first ten feature
    columns; an orthogonal two-community signal c carries the label. Labels
    equal the community except for a fixed fraction of flipped nodes chosen
    evenly inside every (s, c) cell, so the achievable accuracy and the
    group rates of any community-driven classifier are pinned by
    construction rather than by sampling luck.
    """
    row = TABLE_STATS["nba"]
    n = row["nodes"]
    rng = np.random.default_rng(seed)
    s = (np.arange(n) % 2).astype(np.int64)
    rng.shuffle(s)
    c = np.zeros(n, dtype=np.int64)
    for g in (0, 1):
        members = np.flatnonzero(s == g)
        c[members[: len(members) // 2 + len(members) % 2]] = 0
        c[members[len(members) // 2 + len(members) % 2:]] = 1

    # Flip 32% of labels, balanced inside each (s, c) cell. With stratified
    # splits the best achievable test accuracy is pinned near 68% and the
    # group rates of any community-driven classifier match across groups.
    flip = np.zeros(n, dtype=bool)
    flip_rate = 0.32
    for g in (0, 1):
        for cc in (0, 1):
            members = np.flatnonzero((s == g) & (c == cc))
            members = members[rng.permutation(len(members))]
            flip[members[: int(round(flip_rate * len(members)))]] = True
    y = np.where(flip, 1 - c, c).astype(np.int64)

    block = 2 * s + c
    weight = np.empty((4, 4))
    for a in range(4):
        for b in range(4):
            same_s = (a // 2) == (b // 2)
            same_c = (a % 2) == (b % 2)
            weight[a, b] = (3.0 if same_s else 1.0) * (3.0 if same_c else 1.0)
    edges = exact_sbm_edges(block, weight, unique_edge_count("nba"), rng)

    d = row["features"]
    X = rng.normal(0.0, 1.0, size=(n, d))
    s_signal = np.linspace(1.0, 0.35, 10)
    X[:, :10] += np.outer(2.0 * s - 1.0, s_signal)
    X[:, 10:16] += np.outer(2.0 * c - 1.0, np.full(6, 4.0))
    X = np.round(X, 4)

    strata = 4 * flip.astype(np.int64) + block
    split = _stratified_split(strata, (0.5, 0.25, 0.25), rng)
    tr, va, te = _masks_from_split(split)
    g = Graph(adjacency_from_edges(edges, n), X, s, labels=y,
              train_mask=tr, val_mask=va, test_mask=te, name="nba")
    return g, split


def _citation(name: str, seed: int, n_communities: int, comm_weight: float,
              class_weight: float):
    """Citation-style stand-in: sensitive attribute is the paper class.

    Edges follow latent communities (orthogonal to class) plus a weaker
    class-homophily term; features are bag-of-words style with per-community
    and per-class word signatures. Link structure is therefore predictable
    from community membership even when class information is removed.
    """
    row = TABLE_STATS[name]
    n, d, k_cls = row["nodes"], row["features"], row["sensitive_values"]
    rng = np.random.default_rng(seed)
    cls = _split_blocks(n, k_cls)
    rng.shuffle(cls)
    comm = _split_blocks(n, n_communities)
    rng.shuffle(comm)

    block = cls * n_communities + comm
    n_blocks = k_cls * n_communities
    a_cls, a_comm = np.divmod(np.arange(n_blocks), n_communities)
    weight = np.where(a_cls[:, None] == a_cls[None, :], class_weight, 1.0)
    weight = weight * np.where(a_comm[:, None] == a_comm[None, :], comm_weight, 1.0)
    edges = exact_sbm_edges(block, weight, unique_edge_count(name), rng)

    binary = name != "pubmed"
    X = np.zeros((n, d), dtype=np.float64)
    comm_sig = max(8, min(40, (d // 2) // n_communities))
    cls_sig = max(6, min(20, (d // 4) // k_cls))
    for k in range(n_communities):
        members = np.flatnonzero(comm == k)
        colslice = slice(k * comm_sig, (k + 1) * comm_sig)
        hits = rng.random((len(members), comm_sig)) < 0.6
        X[members, colslice] = hits
    offset = n_communities * comm_sig
    for k in range(k_cls):
        members = np.flatnonzero(cls == k)
        colslice = slice(offset + k * cls_sig, offset + (k + 1) * cls_sig)
        hits = rng.random((len(members), cls_sig)) < 0.55
        X[members, colslice] = hits
    tail = offset + k_cls * cls_sig
    if tail < d:
        X[:, tail:] = rng.random((n, d - tail)) < (6.0 / (d - tail))
    if not binary:
        X *= np.round(rng.gamma(2.0, 0.5, size=X.shape), 3)

    split = _stratified_split(cls, (0.5, 0.25, 0.25), rng)
    tr, va, te = _masks_from_split(split)
    g = Graph(adjacency_from_edges(edges, n), X, cls, labels=None,
              train_mask=tr, val_mask=va, test_mask=te, name=name)
    return g, split


def _pokec(name: str, seed: int):
    """Large two-group stand-in with community structure and binary labels."""
    row = TABLE_STATS[name]
    n, d = row["nodes"], row["features"]
    rng = np.random.default_rng(seed)
    s = (np.arange(n) % 2).astype(np.int64)
    rng.shuffle(s)
    n_comm = 10
    comm = _split_blocks(n, n_comm)
    rng.shuffle(comm)

    block = s * n_comm + comm
    a_s, a_comm = np.divmod(np.arange(2 * n_comm), n_comm)
    weight = np.where(a_s[:, None] == a_s[None, :], 2.0, 1.0)
    weight = weight * np.where(a_comm[:, None] == a_comm[None, :], 6.0, 1.0)
    edges = exact_sbm_edges(block, weight, unique_edge_count(name), rng)

    # Balanced binary labels inside each (s, community) cell.
    y = np.zeros(n, dtype=np.int64)
    for cell in np.unique(block):
        members = np.flatnonzero(block == cell)
        members = members[rng.permutation(len(members))]
        y[members[: len(members) // 2]] = 1

    X = rng.normal(0.0, 1.0, size=(n, d)).astype(np.float64)
    X[:, 0] += 1.8 * (2.0 * s - 1.0)
    X[:, 1:1 + n_comm] += 2.0 * (comm[:, None] == np.arange(n_comm)[None, :])
    X[:, 1 + n_comm] += 1.5 * (2.0 * y - 1.0)
    X = np.round(X, 4)

    strata = block * 2 + y
    split = _stratified_split(strata, (0.5, 0.25, 0.25), rng)
    tr, va, te = _masks_from_split(split)
    g = Graph(adjacency_from_edges(edges, n), X, s, labels=y,
              train_mask=tr, val_mask=va, test_mask=te, name=name)
    return g, split


def generate(name: str, seed: int = 0):
    """Build the named stand-in graph. Returns (graph, split_labels)."""
    if name == "nba":
        return _nba(seed)
    if name == "citeseer":
        return _citation("citeseer", seed, n_communities=20, comm_weight=60.0,
                         class_weight=4.0)
    if name == "cora":
        return _citation("cora", seed, n_communities=20, comm_weight=60.0,
                         class_weight=4.0)
    if name == "pubmed":
        return _citation("pubmed", seed, n_communities=15, comm_weight=40.0,
                         class_weight=3.0)
    if name in ("pokec-z", "pokec-n"):
        return _pokec(name, seed)
    raise ValueError(f"unknown dataset name {name!r}; choose from {sorted(TABLE_STATS)}")


def materialize(name: str, root: str, seed: int = 0) -> DatasetSpec:
    """Generate a stand-in and write it under root/<name>/ in canonical form."""
    graph, split = generate(name, seed)
    decimals = 4 if name in ("nba", "pokec-z", "pokec-n") else 3
    return write_dataset(os.path.join(root, name), name, graph, split,
                         feature_decimals=decimals)


# ---------------------------------------------------------------------------
# Test fixtures with planted bias
# ---------------------------------------------------------------------------


def two_block_fixture(seed: int = 0, n: int = 200, p_intra: float = 0.1,
                      p_inter: float = 0.01) -> Graph:
    """Two equal blocks; sensitive attribute is the block id.

    Intra-block pairs connect with probability ``p_intra`` and cross-block
    pairs with ``p_inter`` (realized as exact expected counts, which keeps
    the baseline homophily stable across seeds). The single feature column
    is the block id plus Gaussian noise.
    """
    rng = np.random.default_rng(seed)
    s = _split_blocks(n, 2)
    half = n // 2
    n_intra = int(round(p_intra * half * (half - 1) / 2))
    n_inter = int(round(p_inter * half * (n - half)))
    blocks = [np.flatnonzero(s == 0), np.flatnonzero(s == 1)]
    edges = np.concatenate([
        _sample_pairs(blocks[0], None, n_intra, rng),
        _sample_pairs(blocks[1], None, n_intra, rng),
        _sample_pairs(blocks[0], blocks[1], n_inter, rng),
    ])
    X = (s + rng.normal(0.0, 0.5, size=n)).reshape(-1, 1)
    tr, va, te = _masks_from_split(_stratified_split(s, (0.5, 0.25, 0.25), rng))
    return Graph(adjacency_from_edges(edges, n), X, s.astype(np.int64),
                 labels=s.copy(), train_mask=tr, val_mask=va, test_mask=te,
                 name="two-block")


def planted_bias_fixture(seed: int = 0, n: int = 400) -> Graph:
    """Fixture where group membership leaks through a block of features.

    Labels have a large base-rate gap between groups (0.75 vs 0.25), so a
    classifier that can recover the group from columns 0-5 inherits that gap,
    while columns 6-7 carry the label directly and support a fair solution.
    The group signal is deliberately spread over six noisy columns: a
    per-column gate can cheaply zero all of them, whereas an encoder has to
    carve out the whole subspace to hide the group. Edges are only mildly
    group-homophilous.
    """
    rng = np.random.default_rng(seed)
    s = _split_blocks(n, 2)
    y = np.zeros(n, dtype=np.int64)
    for g, rate in ((0, 0.25), (1, 0.75)):
        members = np.flatnonzero(s == g)
        members = members[rng.permutation(len(members))]
        y[members[: int(round(rate * len(members)))]] = 1

    # Keep the structural group lift mild: the leak under test is the feature
    # subspace, and heavy homophily would feed the group back in through
    # aggregation no matter what the feature gates do.
    weight = np.array([[1.2, 1.0], [1.0, 1.2]])
    edges = exact_sbm_edges(s, weight, 6 * n // 2, rng)

    X = rng.normal(0.0, 1.0, size=(n, 10))
    X[:, :6] += np.outer(2.0 * s - 1.0, np.linspace(1.5, 0.5, 6))
    X[:, 6] += 1.4 * (2.0 * y - 1.0)
    X[:, 7] += 0.9 * (2.0 * y - 1.0)
    tr, va, te = _masks_from_split(_stratified_split(2 * s + y, (0.5, 0.25, 0.25), rng))
    return Graph(adjacency_from_edges(edges, n), X, s.astype(np.int64), labels=y,
                 train_mask=tr, val_mask=va, test_mask=te, name="planted-bias")
