import numpy as np
import pytest
import scipy.sparse as sp
import torch

from graphair.data import Graph

torch.set_num_threads(1)


def build_graph(edges, n, features=None, sensitive=None, labels=None, seed=0):
    """Small undirected Graph from an edge list, for tests."""
    rng = np.random.default_rng(seed)
    rows, cols, vals = [], [], []
    for u, v in edges:
        rows += [u, v]
        cols += [v, u]
        vals += [1.0, 1.0]
    adj = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    adj.sum_duplicates()
    adj.data[:] = 1.0
    if features is None:
        features = rng.normal(size=(n, 4))
    if sensitive is None:
        sensitive = rng.integers(0, 2, size=n)
    return Graph(adjacency=adj, features=np.asarray(features, dtype=np.float64),
                 sensitive=np.asarray(sensitive, dtype=np.int64),
                 labels=None if labels is None else np.asarray(labels, dtype=np.int64))


@pytest.fixture
def path_graph():
    """0-1-2-3 path, 4 nodes."""
    return build_graph([(0, 1), (1, 2), (2, 3)], 4)


@pytest.fixture
def karate_like():
    """Two 5-cliques joined by one bridge edge; s = clique id."""
    edges = [(i, j) for i in range(5) for j in range(i + 1, 5)]
    edges += [(i, j) for i in range(5, 10) for j in range(i + 1, 10)]
    edges += [(4, 5)]
    s = np.array([0] * 5 + [1] * 5)
    y = s.copy()
    return build_graph(edges, 10, sensitive=s, labels=y, seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
