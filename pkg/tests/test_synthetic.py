"""Synthetic stand-ins: exact published stats, planted structure, determinism."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphair import synthetic
from graphair.data import load_dataset_dir
from graphair.synthetic import (TABLE_STATS, exact_sbm_edges, expected_stats,
                                generate, hamilton_round, materialize,
                                planted_bias_fixture, two_block_fixture,
                                unique_edge_count)


def sensitive_homophily(graph) -> float:
    edges = graph.edges()
    s = graph.sensitive
    return float(np.mean(s[edges[:, 0]] == s[edges[:, 1]]))


# ---------------------------------------------------------------------------
# apportionment
# ---------------------------------------------------------------------------


def test_hamilton_round_hand_cases():
    assert hamilton_round(np.array([1.0, 1.0, 1.0]), 10).tolist() == [4, 3, 3]
    assert hamilton_round(np.array([0.5, 0.3, 0.2]), 10).tolist() == [5, 3, 2]
    # quotas (1.33, 2.67): the extra unit goes to the larger remainder
    assert hamilton_round(np.array([1.0, 2.0]), 4).tolist() == [1, 3]
    assert hamilton_round(np.array([0.0, 1.0]), 5).tolist() == [0, 5]


def test_hamilton_round_rejects_zero_weights():
    with pytest.raises(ValueError, match="positive sum"):
        hamilton_round(np.zeros(3), 4)


@given(
    weights=st.lists(st.floats(min_value=0.0, max_value=100.0), min_size=1,
                     max_size=8).filter(lambda w: sum(w) > 1e-9),
    total=st.integers(min_value=0, max_value=1000),
)
@settings(max_examples=200, deadline=None)
def test_hamilton_round_partitions_total(weights, total):
    counts = hamilton_round(np.array(weights), total)
    assert counts.sum() == total
    assert (counts >= 0).all()
    # never more than one unit away from the exact quota
    quota = total * np.array(weights) / sum(weights)
    assert np.all(np.abs(counts - quota) < 1.0 + 1e-9)


# ---------------------------------------------------------------------------
# exact-count block model
# ---------------------------------------------------------------------------


def test_exact_sbm_edges_count_and_shape():
    rng = np.random.default_rng(0)
    block_of = np.repeat([0, 1], 50)
    weight = np.array([[10.0, 1.0], [1.0, 10.0]])
    edges = exact_sbm_edges(block_of, weight, 600, rng)
    assert edges.shape == (600, 2)
    assert (edges[:, 0] < edges[:, 1]).all()
    keys = edges[:, 0] * 100 + edges[:, 1]
    assert len(np.unique(keys)) == 600
    intra = np.mean(block_of[edges[:, 0]] == block_of[edges[:, 1]])
    assert intra > 0.75  # weight 10:1 with equal pair counts


def test_exact_sbm_edges_deterministic():
    block_of = np.repeat([0, 1, 2], 30)
    weight = np.full((3, 3), 1.0)
    a = exact_sbm_edges(block_of, weight, 300, np.random.default_rng(7))
    b = exact_sbm_edges(block_of, weight, 300, np.random.default_rng(7))
    assert np.array_equal(a, b)


def test_exact_sbm_edges_overflow_spills_to_roomy_cells():
    # intra cells hold only C(3,2)=3 pairs each; the weights ask for far
    # more, so the surplus must land in the cross cell without loss
    block_of = np.repeat([0, 1], 3)
    weight = np.array([[100.0, 0.001], [0.001, 100.0]])
    edges = exact_sbm_edges(block_of, weight, 12, np.random.default_rng(1))
    assert edges.shape == (12, 2)


# ---------------------------------------------------------------------------
# planted-bias fixtures
# ---------------------------------------------------------------------------


def test_two_block_fixture_structure():
    g = two_block_fixture(seed=0)
    assert g.n_nodes == 200
    assert np.array_equal(np.sort(np.unique(g.sensitive)), [0, 1])
    assert np.bincount(g.sensitive).tolist() == [100, 100]
    assert np.array_equal(g.labels, g.sensitive)
    # exact expected counts: 2 * round(0.1 * C(100,2)) intra + round(0.01 * 100^2) inter
    assert g.edges().shape[0] == 2 * 495 + 100
    assert sensitive_homophily(g) == pytest.approx(990 / 1090)
    assert (g.train_mask | g.val_mask | g.test_mask).all()


def test_two_block_fixture_deterministic():
    a = two_block_fixture(seed=3)
    b = two_block_fixture(seed=3)
    assert np.array_equal(a.edges(), b.edges())
    assert np.array_equal(a.features, b.features)
    c = two_block_fixture(seed=4)
    assert not np.array_equal(a.edges(), c.edges())


def test_planted_bias_fixture_bias_is_planted():
    g = planted_bias_fixture(seed=0)
    assert g.n_nodes == 400
    rates = [g.labels[g.sensitive == v].mean() for v in (0, 1)]
    assert rates[0] == pytest.approx(0.25)
    assert rates[1] == pytest.approx(0.75)
    # columns 0-5 jointly identify the group even though each is noisy
    group_score = g.features[:, :6].sum(axis=1)
    assert np.mean((group_score > 0) == (g.sensitive == 1)) > 0.95
    singles = [np.mean((g.features[:, j] > 0) == (g.sensitive == 1))
               for j in range(6)]
    assert max(singles) < 0.95
    # columns 6-7 carry label signal but imperfectly
    col6_acc = np.mean((g.features[:, 6] > 0) == (g.labels == 1))
    assert 0.7 < col6_acc < 0.95
    # group homophily is mild by design
    assert 0.5 < sensitive_homophily(g) < 0.62


# ---------------------------------------------------------------------------
# benchmark stand-ins match the published summary table
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(TABLE_STATS))
def test_standins_reproduce_published_stats(name):
    graph, split = generate(name, seed=0)
    want = expected_stats(name)
    assert graph.n_nodes == want.nodes
    assert graph.n_features == want.features
    assert graph.n_sensitive == want.sensitive_values
    assert graph.edges().shape[0] == unique_edge_count(name)
    if name in ("nba", "pokec-z", "pokec-n"):
        assert graph.labels is not None  # node-task stand-ins carry labels
    if split is not None:
        assert set(np.unique(split)) <= {"train", "val", "test"}


def test_generate_deterministic_and_seed_sensitive():
    a, _ = generate("nba", seed=0)
    b, _ = generate("nba", seed=0)
    c, _ = generate("nba", seed=1)
    assert np.array_equal(a.edges(), b.edges())
    assert np.array_equal(a.features, b.features)
    assert not np.array_equal(a.edges(), c.edges())


def test_generate_unknown_name():
    with pytest.raises(ValueError, match="unknown dataset"):
        generate("imdb")


def test_materialize_roundtrips_through_loader(tmp_path):
    spec = materialize("nba", str(tmp_path), seed=0)
    loaded = load_dataset_dir(str(tmp_path / "nba"))
    direct, split = generate("nba", seed=0)
    assert loaded.n_nodes == direct.n_nodes
    assert np.array_equal(loaded.sensitive, direct.sensitive)
    assert np.array_equal(loaded.labels, direct.labels)
    assert np.array_equal(loaded.edges(), direct.edges())
    # written features are rounded; agreement is to that precision
    assert np.allclose(loaded.features, direct.features, atol=1e-4)
    assert np.array_equal(loaded.train_mask, direct.train_mask)
    assert spec.expected_stats == expected_stats("nba")
