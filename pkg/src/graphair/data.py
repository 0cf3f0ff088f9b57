"""Graph data model, dataset ingestion and validation, splits, negative sampling.

Canonical on-disk format for every dataset:

* ``nodes.csv``  -- header row with an ``id`` column, numeric feature
  columns, one sensitive column (integer or string; strings are mapped to
  ``0..k-1`` in sorted order) and an optional integer label column.
* ``edges.csv``  -- header ``src,dst``; undirected edges stored once in
  canonical ``(min,max)`` order.
* ``manifest.json`` -- expected statistics, column names, the edge-count
  convention used by the dataset's source, and the node-split policy.

Converters from the native NBA/Pokec CSVs and the citation-network
``.content``/``.cites`` files into this format live at the bottom of the
module.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.sparse as sp

from .utils import derive_seed, write_json


class DatasetError(Exception):
    """Base class for ingestion failures."""


class ParseError(DatasetError):
    """Malformed input file; message carries the offending line number."""


class StatsMismatchError(DatasetError):
    """Loaded statistics disagree with the manifest's expected_stats."""

    def __init__(self, name: str, stat_field: str, expected, actual):
        self.name = name
        self.stat_field = stat_field
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"dataset {name!r}: {stat_field} mismatch, expected {expected}, got {actual}"
        )


# ---------------------------------------------------------------------------
# Graph
# ---------------------------------------------------------------------------


@dataclass
class Graph:
    """An undirected attributed graph with sensitive attributes.

    adjacency   symmetric binary CSR matrix with zero diagonal
    features    (n, d) float matrix, sensitive column excluded
    sensitive   (n,) integers covering the contiguous range 0..k-1
    labels      optional (n,) integers
    train_mask / val_mask / test_mask   optional disjoint boolean node masks
    """

    adjacency: sp.csr_matrix
    features: np.ndarray
    sensitive: np.ndarray
    labels: np.ndarray | None = None
    train_mask: np.ndarray | None = None
    val_mask: np.ndarray | None = None
    test_mask: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        self.adjacency = sp.csr_matrix(self.adjacency)
        self.features = np.asarray(self.features, dtype=np.float64)
        self.sensitive = np.asarray(self.sensitive, dtype=np.int64)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
        self.validate()

    # -- basic shape accessors ------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_sensitive(self) -> int:
        return int(self.sensitive.max()) + 1 if self.sensitive.size else 0

    @property
    def n_edges(self) -> int:
        """Number of undirected edges (each counted once)."""
        return self.adjacency.nnz // 2

    def edges(self) -> np.ndarray:
        """All undirected edges as an (m, 2) array in canonical (min,max) order."""
        coo = sp.triu(self.adjacency, k=1).tocoo()
        out = np.stack([coo.row, coo.col], axis=1).astype(np.int64)
        return out[np.lexsort((out[:, 1], out[:, 0]))]

    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    # -- invariants -------------------------------------------------------------

    def validate(self) -> None:
        n = self.adjacency.shape[0]
        if self.adjacency.shape != (n, n):
            raise DatasetError("adjacency must be square")
        if self.features.shape[0] != n:
            raise DatasetError("feature row count differs from adjacency size")
        if self.sensitive.shape != (n,):
            raise DatasetError("sensitive vector length differs from node count")
        if (self.adjacency != self.adjacency.T).nnz != 0:
            raise DatasetError("adjacency is not symmetric")
        if self.adjacency.diagonal().any():
            raise DatasetError("adjacency has nonzero diagonal")
        vals = np.unique(self.sensitive)
        if vals.size and (vals[0] != 0 or vals[-1] != vals.size - 1):
            raise DatasetError(
                f"sensitive values must cover a contiguous range 0..k-1, got {vals.tolist()}"
            )
        masks = [m for m in (self.train_mask, self.val_mask, self.test_mask) if m is not None]
        for m in masks:
            if m.shape != (n,) or m.dtype != np.bool_:
                raise DatasetError("node masks must be boolean vectors of length n")
        if len(masks) > 1:
            overlap = np.zeros(n, dtype=np.int64)
            for m in masks:
                overlap += m
            if (overlap > 1).any():
                raise DatasetError("node masks are not pairwise disjoint")


# ---------------------------------------------------------------------------
# Dataset manifests
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpectedStats:
    nodes: int
    edges: int
    features: int
    sensitive_values: int


@dataclass(frozen=True)
class DatasetSpec:
    """Everything needed to load and validate one dataset.

    ``edge_count_convention`` states how the dataset's source counts edges:
    ``"undirected"`` counts each edge once, ``"directed"`` counts both
    directions (twice the unique-pair count). The expected edge number in
    ``expected_stats`` follows this convention, so validation is exact.
    """

    name: str
    node_file: str
    edge_file: str
    sensitive_column: str
    expected_stats: ExpectedStats
    label_column: str | None = None
    split_column: str | None = None
    edge_count_convention: str = "undirected"
    split_ratios: tuple[float, float, float] = (0.5, 0.25, 0.25)
    split_seed: int = 0
    standardize: bool = False

    def counted_edges(self, unique_edges: int) -> int:
        if self.edge_count_convention == "directed":
            return 2 * unique_edges
        if self.edge_count_convention == "undirected":
            return unique_edges
        raise DatasetError(f"unknown edge count convention {self.edge_count_convention!r}")


def write_manifest(spec: DatasetSpec, directory: str) -> str:
    payload = {
        "name": spec.name,
        "node_file": os.path.basename(spec.node_file),
        "edge_file": os.path.basename(spec.edge_file),
        "sensitive_column": spec.sensitive_column,
        "label_column": spec.label_column,
        "split_column": spec.split_column,
        "edge_count_convention": spec.edge_count_convention,
        "expected_stats": {
            "nodes": spec.expected_stats.nodes,
            "edges": spec.expected_stats.edges,
            "features": spec.expected_stats.features,
            "sensitive_values": spec.expected_stats.sensitive_values,
        },
        "split_ratios": list(spec.split_ratios),
        "split_seed": spec.split_seed,
        "standardize": spec.standardize,
    }
    path = os.path.join(directory, "manifest.json")
    write_json(path, payload)
    return path


def read_manifest(directory: str) -> DatasetSpec:
    path = os.path.join(directory, "manifest.json")
    with open(path) as fh:
        raw = json.load(fh)
    stats = raw["expected_stats"]
    return DatasetSpec(
        name=raw["name"],
        node_file=os.path.join(directory, raw["node_file"]),
        edge_file=os.path.join(directory, raw["edge_file"]),
        sensitive_column=raw["sensitive_column"],
        label_column=raw.get("label_column"),
        split_column=raw.get("split_column"),
        edge_count_convention=raw.get("edge_count_convention", "undirected"),
        expected_stats=ExpectedStats(
            nodes=stats["nodes"],
            edges=stats["edges"],
            features=stats["features"],
            sensitive_values=stats["sensitive_values"],
        ),
        split_ratios=tuple(raw.get("split_ratios", (0.5, 0.25, 0.25))),
        split_seed=raw.get("split_seed", 0),
        standardize=raw.get("standardize", False),
    )


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def _read_node_table(spec: DatasetSpec):
    try:
        df = pd.read_csv(spec.node_file)
    except pd.errors.ParserError as exc:
        raise ParseError(f"{spec.node_file}: {exc}") from exc
    if "id" not in df.columns:
        raise ParseError(f"{spec.node_file}: missing required 'id' column (line 1)")
    if spec.sensitive_column not in df.columns:
        raise ParseError(
            f"{spec.node_file}: missing sensitive column {spec.sensitive_column!r} (line 1)"
        )
    ids = df["id"].to_numpy()
    if np.unique(ids).size != ids.size:
        dup = int(pd.Series(ids).duplicated().idxmax())
        raise ParseError(f"{spec.node_file}: duplicate node id at line {dup + 2}")

    sens_raw = df[spec.sensitive_column]
    if sens_raw.dtype == object:
        levels = sorted(sens_raw.astype(str).unique())
        sensitive = sens_raw.astype(str).map({v: i for i, v in enumerate(levels)}).to_numpy()
    else:
        sensitive = sens_raw.to_numpy().astype(np.int64)

    labels = None
    if spec.label_column is not None:
        if spec.label_column not in df.columns:
            raise ParseError(
                f"{spec.node_file}: missing label column {spec.label_column!r} (line 1)"
            )
        labels = df[spec.label_column].to_numpy().astype(np.int64)

    split = None
    if spec.split_column is not None:
        if spec.split_column not in df.columns:
            raise ParseError(
                f"{spec.node_file}: missing split column {spec.split_column!r} (line 1)"
            )
        split = df[spec.split_column].astype(str).to_numpy()
        bad = ~np.isin(split, ("train", "val", "test"))
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise ParseError(
                f"{spec.node_file}: split value must be train/val/test at line {row + 2}"
            )

    reserved = {"id", spec.sensitive_column, spec.label_column, spec.split_column}
    feat_cols = [c for c in df.columns if c not in reserved]
    feats = df[feat_cols]
    bad = feats.columns[[not np.issubdtype(dt, np.number) for dt in feats.dtypes]]
    if len(bad):
        col = bad[0]
        row = int(pd.to_numeric(df[col], errors="coerce").isna().idxmax())
        raise ParseError(
            f"{spec.node_file}: non-numeric value in feature column {col!r} at line {row + 2}"
        )
    features = feats.to_numpy(dtype=np.float64)

    id_index = {int(v): i for i, v in enumerate(ids)}
    return id_index, features, sensitive.astype(np.int64), labels, split


def _read_edge_table(spec: DatasetSpec, id_index: dict[int, int]) -> np.ndarray:
    try:
        df = pd.read_csv(spec.edge_file)
    except pd.errors.ParserError as exc:
        raise ParseError(f"{spec.edge_file}: {exc}") from exc
    for col in ("src", "dst"):
        if col not in df.columns:
            raise ParseError(f"{spec.edge_file}: missing {col!r} column (line 1)")
    src = df["src"].to_numpy()
    dst = df["dst"].to_numpy()
    edges = np.empty((len(df), 2), dtype=np.int64)
    for k, (u, v) in enumerate(zip(src, dst)):
        try:
            iu, iv = id_index[int(u)], id_index[int(v)]
        except (KeyError, ValueError):
            raise ParseError(f"{spec.edge_file}: unknown node id at line {k + 2}") from None
        if iu == iv:
            raise ParseError(f"{spec.edge_file}: self loop at line {k + 2}")
        a, b = (iu, iv) if iu < iv else (iv, iu)
        edges[k] = (a, b)
    uniq = np.unique(edges, axis=0)
    if uniq.shape[0] != edges.shape[0]:
        raise ParseError(f"{spec.edge_file}: duplicate undirected edge present")
    return uniq


def adjacency_from_edges(edges: np.ndarray, n: int) -> sp.csr_matrix:
    """Symmetric binary CSR adjacency from an (m, 2) undirected edge array."""
    if edges.size == 0:
        return sp.csr_matrix((n, n))
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    data = np.ones(rows.size, dtype=np.float64)
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def make_node_masks(n: int, ratios, seed: int):
    """Disjoint train/val/test boolean node masks from a seeded shuffle."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {ratios}")
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(ratios[0] * n))
    n_val = int(round(ratios[1] * n))
    masks = []
    for part in (order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:]):
        m = np.zeros(n, dtype=bool)
        m[part] = True
        masks.append(m)
    return tuple(masks)


def load_dataset(spec: DatasetSpec) -> Graph:
    """Load a canonical-format dataset and validate it against expected_stats."""
    id_index, features, sensitive, labels, split = _read_node_table(spec)
    n = len(id_index)
    edges = _read_edge_table(spec, id_index)
    adjacency = adjacency_from_edges(edges, n)
    if spec.standardize:
        mu = features.mean(axis=0)
        sd = features.std(axis=0)
        sd[sd == 0] = 1.0
        features = (features - mu) / sd

    exp = spec.expected_stats
    if n != exp.nodes:
        raise StatsMismatchError(spec.name, "nodes", exp.nodes, n)
    counted = spec.counted_edges(edges.shape[0])
    if counted != exp.edges:
        raise StatsMismatchError(spec.name, "edges", exp.edges, counted)
    if features.shape[1] != exp.features:
        raise StatsMismatchError(spec.name, "features", exp.features, features.shape[1])
    n_sens = int(sensitive.max()) + 1
    if n_sens != exp.sensitive_values:
        raise StatsMismatchError(spec.name, "sensitive_values", exp.sensitive_values, n_sens)

    if split is not None:
        train, val, test = (split == part for part in ("train", "val", "test"))
    else:
        train, val, test = make_node_masks(n, spec.split_ratios, spec.split_seed)
    return Graph(
        adjacency=adjacency,
        features=features,
        sensitive=sensitive,
        labels=labels,
        train_mask=train,
        val_mask=val,
        test_mask=test,
        name=spec.name,
    )


def load_dataset_dir(directory: str) -> Graph:
    return load_dataset(read_manifest(directory))


# ---------------------------------------------------------------------------
# Edge splits and negative sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeSplit:
    """Positive/negative edge partition for link prediction.

    Positives are true edges split disjointly; negatives are true non-edges,
    one per positive, disjoint across splits.
    """

    train_pos: np.ndarray
    val_pos: np.ndarray
    test_pos: np.ndarray
    train_neg: np.ndarray
    val_neg: np.ndarray
    test_neg: np.ndarray
    seed: int = 0

    def validate(self, graph: Graph) -> None:
        adj = graph.adjacency
        pos_all = np.concatenate([self.train_pos, self.val_pos, self.test_pos])
        neg_all = np.concatenate([self.train_neg, self.val_neg, self.test_neg])
        if np.unique(pos_all, axis=0).shape[0] != pos_all.shape[0]:
            raise ValueError("a positive edge appears in two splits")
        if np.unique(neg_all, axis=0).shape[0] != neg_all.shape[0]:
            raise ValueError("a negative pair appears in two splits")
        if pos_all.shape[0] != graph.n_edges:
            raise ValueError("positive splits do not partition the edge set")
        pos_vals = np.asarray(adj[pos_all[:, 0], pos_all[:, 1]]).ravel()
        if not (pos_vals == 1).all():
            raise ValueError("split contains a positive that is not an edge")
        if neg_all.size:
            neg_vals = np.asarray(adj[neg_all[:, 0], neg_all[:, 1]]).ravel()
            if neg_vals.any():
                raise ValueError("split contains a negative that is an edge")


def _pair_key(pairs: np.ndarray, n: int) -> np.ndarray:
    return pairs[:, 0].astype(np.int64) * n + pairs[:, 1].astype(np.int64)


def sample_non_edges(
    graph: Graph,
    count: int,
    rng: np.random.Generator,
    exclude: np.ndarray | None = None,
) -> np.ndarray:
    """Sample ``count`` distinct non-edges uniformly, in canonical order.

    ``exclude`` is an optional (k, 2) array of already-used pairs. Raises if
    the graph does not contain enough non-edges.
    """
    n = graph.n_nodes
    total_pairs = n * (n - 1) // 2
    available = total_pairs - graph.n_edges
    excluded_keys = set()
    if exclude is not None and exclude.size:
        excluded_keys = set(_pair_key(np.asarray(exclude), n).tolist())
        available -= len(excluded_keys)
    if count > available:
        raise ValueError(
            f"insufficient non-edges: need {count}, graph has {available} available"
        )
    adj = graph.adjacency
    out: list[np.ndarray] = []
    got = 0
    seen = set(excluded_keys)
    while got < count:
        m = max(1024, 2 * (count - got))
        u = rng.integers(0, n, size=m)
        v = rng.integers(0, n, size=m)
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        keep = lo < hi
        lo, hi = lo[keep], hi[keep]
        if lo.size == 0:
            continue
        is_edge = np.asarray(adj[lo, hi]).ravel() > 0
        lo, hi = lo[~is_edge], hi[~is_edge]
        for a, b in zip(lo, hi):
            key = int(a) * n + int(b)
            if key in seen:
                continue
            seen.add(key)
            out.append(np.array([a, b], dtype=np.int64))
            got += 1
            if got == count:
                break
    return np.stack(out) if out else np.empty((0, 2), dtype=np.int64)


def split_edges(graph: Graph, ratios, seed: int,
                test_neg_ratio: float = 1.0) -> EdgeSplit:
    """Split edges into disjoint train/val/test positives with matched negatives.

    Proportions land within one edge of the requested ratios; negatives are
    drawn uniformly from non-edges, disjoint across splits — one per train/val
    positive, ``test_neg_ratio`` per test positive. A ratio above 1 shrinks
    the sampling noise of test-time group rates without touching training.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    if test_neg_ratio <= 0:
        raise ValueError(f"test_neg_ratio must be positive, got {test_neg_ratio}")
    m = graph.n_edges
    if m < 10:
        raise ValueError(f"graph too small for edge splitting: {m} edges < 10")
    rng = np.random.default_rng(seed)
    edges = graph.edges()
    order = rng.permutation(m)
    n_train = int(round(ratios[0] * m))
    n_val = int(round(ratios[1] * m))
    train_pos = edges[order[:n_train]]
    val_pos = edges[order[n_train:n_train + n_val]]
    test_pos = edges[order[n_train + n_val:]]

    n_test_neg = int(round(test_neg_ratio * len(test_pos)))
    negs = sample_non_edges(graph, n_train + n_val + n_test_neg, rng)
    train_neg = negs[:n_train]
    val_neg = negs[n_train:n_train + n_val]
    test_neg = negs[n_train + n_val:]
    return EdgeSplit(
        train_pos=train_pos,
        val_pos=val_pos,
        test_pos=test_pos,
        train_neg=train_neg,
        val_neg=val_neg,
        test_neg=test_neg,
        seed=seed,
    )


def restrict_to_edges(graph: Graph, edges: np.ndarray) -> Graph:
    """Same nodes/features/masks, adjacency rebuilt from the given edges.

    Used for link prediction, where the model must train on the graph with
    validation/test edges removed.
    """
    return Graph(
        adjacency=adjacency_from_edges(np.asarray(edges, dtype=np.int64),
                                       graph.n_nodes),
        features=graph.features,
        sensitive=graph.sensitive,
        labels=graph.labels,
        train_mask=graph.train_mask,
        val_mask=graph.val_mask,
        test_mask=graph.test_mask,
        name=f"{graph.name}[train-edges]",
    )


def minibatch_subgraph(graph: Graph, size: int, seed: int) -> Graph:
    """Induced subgraph on a uniform random node sample of the given size."""
    n = graph.n_nodes
    if not 0 < size <= n:
        raise ValueError(f"minibatch size {size} out of range (0, {n}]")
    idx = np.sort(np.random.default_rng(seed).choice(n, size=size, replace=False))
    sub = graph.adjacency[idx][:, idx].tocsr()
    return Graph(
        adjacency=sub,
        features=graph.features[idx],
        sensitive=_recode_contiguous(graph.sensitive[idx]),
        labels=None if graph.labels is None else graph.labels[idx],
        train_mask=None if graph.train_mask is None else graph.train_mask[idx],
        val_mask=None if graph.val_mask is None else graph.val_mask[idx],
        test_mask=None if graph.test_mask is None else graph.test_mask[idx],
        name=f"{graph.name}[minibatch{size}]",
    )


def _recode_contiguous(values: np.ndarray) -> np.ndarray:
    uniq, inv = np.unique(values, return_inverse=True)
    if uniq.size and uniq[0] == 0 and uniq[-1] == uniq.size - 1:
        return values
    return inv.astype(np.int64)


def subsample_for_training(graph: Graph, size: int | None, seed: int) -> Graph:
    """Return the graph itself, or a seeded minibatch when ``size`` is set."""
    if size is None or size >= graph.n_nodes:
        return graph
    return minibatch_subgraph(graph, size, derive_seed(seed, 0xBA7C4))


# ---------------------------------------------------------------------------
# Converters from native dataset formats to the canonical one
# ---------------------------------------------------------------------------


def convert_player_csv(
    node_csv: str,
    relationship_file: str,
    out_dir: str,
    sensitive_column: str,
    label_column: str | None,
    name: str,
    expected_stats: ExpectedStats,
    edge_count_convention: str = "directed",
    drop_columns: tuple[str, ...] = (),
) -> DatasetSpec:
    """Convert an NBA/Pokec-style node CSV plus whitespace edge list.

    The native relationship files list one (src, dst) pair per line, usually
    in both directions; pairs are deduplicated to canonical order. Nodes
    referenced only in the edge file are dropped with their edges.
    """
    df = pd.read_csv(node_csv)
    id_col = df.columns[0]
    df = df.rename(columns={id_col: "id"})
    df = df.drop(columns=[c for c in drop_columns if c in df.columns])
    known = set(df["id"].astype(int))

    pairs = []
    with open(relationship_file) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise ParseError(f"{relationship_file}: expected two ids at line {lineno}")
            u, v = int(parts[0]), int(parts[1])
            if u == v or u not in known or v not in known:
                continue
            pairs.append((min(u, v), max(u, v)))
    edges = np.unique(np.array(pairs, dtype=np.int64).reshape(-1, 2), axis=0)

    os.makedirs(out_dir, exist_ok=True)
    df.to_csv(os.path.join(out_dir, "nodes.csv"), index=False)
    pd.DataFrame(edges, columns=["src", "dst"]).to_csv(
        os.path.join(out_dir, "edges.csv"), index=False
    )
    spec = DatasetSpec(
        name=name,
        node_file=os.path.join(out_dir, "nodes.csv"),
        edge_file=os.path.join(out_dir, "edges.csv"),
        sensitive_column=sensitive_column,
        label_column=label_column,
        edge_count_convention=edge_count_convention,
        expected_stats=expected_stats,
    )
    write_manifest(spec, out_dir)
    return spec


def convert_citation(
    content_file: str,
    cites_file: str,
    out_dir: str,
    name: str,
    expected_stats: ExpectedStats,
) -> DatasetSpec:
    """Convert ``.content``/``.cites`` citation files to the canonical format.

    The paper class becomes the sensitive column; bag-of-words columns become
    features. Citations to unknown papers are skipped (the standard quirk of
    these files).
    """
    rows = []
    classes = []
    raw_ids = []
    with open(content_file) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if len(parts) < 3:
                raise ParseError(f"{content_file}: malformed record at line {lineno}")
            raw_ids.append(parts[0])
            classes.append(parts[-1])
            rows.append([float(x) for x in parts[1:-1]])
    feats = np.asarray(rows, dtype=np.float64)
    id_index = {pid: i for i, pid in enumerate(raw_ids)}

    pairs = []
    with open(cites_file) as fh:
        for line in fh:
            parts = line.split()
            if len(parts) != 2:
                continue
            a, b = parts
            if a not in id_index or b not in id_index or a == b:
                continue
            u, v = id_index[a], id_index[b]
            pairs.append((min(u, v), max(u, v)))
    edges = np.unique(np.array(pairs, dtype=np.int64).reshape(-1, 2), axis=0)

    os.makedirs(out_dir, exist_ok=True)
    df = pd.DataFrame(feats, columns=[f"w{j}" for j in range(feats.shape[1])])
    df.insert(0, "id", np.arange(len(raw_ids)))
    df["paper_class"] = classes
    df.to_csv(os.path.join(out_dir, "nodes.csv"), index=False)
    pd.DataFrame(edges, columns=["src", "dst"]).to_csv(
        os.path.join(out_dir, "edges.csv"), index=False
    )
    spec = DatasetSpec(
        name=name,
        node_file=os.path.join(out_dir, "nodes.csv"),
        edge_file=os.path.join(out_dir, "edges.csv"),
        sensitive_column="paper_class",
        label_column=None,
        edge_count_convention="directed",
        expected_stats=expected_stats,
    )
    write_manifest(spec, out_dir)
    return spec
