"""Model component tests: normalization, sampling, symmetry, equivariance,
and the bit-exact ablation identities."""

import math

import numpy as np
import pytest
import torch

from graphair.models import (Adversary, Augmentor, Encoder, GCN,
                             MLPClassifier, TensorGraph, normalize_adjacency,
                             straight_through_bernoulli)

from conftest import build_graph

torch.set_num_threads(1)


# ---------------------------------------------------------------------------
# adjacency normalization
# ---------------------------------------------------------------------------


def test_normalize_adjacency_path_graph_by_hand():
    # path 0-1-2: degrees with self loops are 2, 3, 2
    a = torch.tensor([[0.0, 1.0, 0.0],
                      [1.0, 0.0, 1.0],
                      [0.0, 1.0, 0.0]], dtype=torch.float64)
    got = normalize_adjacency(a)
    assert float(got[0, 0]) == pytest.approx(1 / 2)
    assert float(got[0, 1]) == pytest.approx(1 / math.sqrt(6))
    assert float(got[1, 1]) == pytest.approx(1 / 3)
    assert float(got[0, 2]) == pytest.approx(0.0)
    assert torch.allclose(got, got.T)


def test_normalize_adjacency_sparse_matches_dense():
    torch.manual_seed(0)
    a = (torch.rand(8, 8) < 0.3).double()
    a = ((a + a.T) > 0).double()
    a.fill_diagonal_(0)
    dense = normalize_adjacency(a)
    sparse = normalize_adjacency(a.to_sparse_coo())
    assert torch.allclose(sparse.to_dense(), dense, atol=1e-12)


def test_normalize_adjacency_isolated_node_safe():
    a = torch.zeros(3, 3, dtype=torch.float64)
    got = normalize_adjacency(a)
    assert torch.isfinite(got).all()
    assert float(got[0, 0]) == pytest.approx(1.0)  # self loop only


def test_normalize_adjacency_differentiable():
    a = torch.tensor([[0.0, 0.7], [0.7, 0.0]], dtype=torch.float64,
                     requires_grad=True)
    normalize_adjacency(a).sum().backward()
    assert a.grad is not None and torch.isfinite(a.grad).all()


# ---------------------------------------------------------------------------
# straight-through sampling
# ---------------------------------------------------------------------------


def test_st_bernoulli_values_are_binary():
    g = torch.Generator().manual_seed(0)
    p = torch.rand(1000, generator=g)
    y = straight_through_bernoulli(p, temperature=1.0, generator=g)
    assert set(y.detach().unique().tolist()) <= {0.0, 1.0}


def test_st_bernoulli_is_unbiased_regardless_of_temperature():
    # the hard sample is Bernoulli(p) for any T: only the backward changes
    p = torch.full((40000,), 0.3)
    for temp in (0.2, 1.0, 5.0):
        g = torch.Generator().manual_seed(123)
        y = straight_through_bernoulli(p, temperature=temp, generator=g)
        assert float(y.mean()) == pytest.approx(0.3, abs=0.01)


def test_st_bernoulli_same_seed_same_draw():
    p = torch.rand(100, generator=torch.Generator().manual_seed(7))
    a = straight_through_bernoulli(p, 1.0, torch.Generator().manual_seed(5))
    b = straight_through_bernoulli(p, 1.0, torch.Generator().manual_seed(5))
    assert torch.equal(a, b)


def test_st_bernoulli_passes_gradient():
    p = torch.tensor([0.4, 0.6], requires_grad=True)
    y = straight_through_bernoulli(p, 1.0, torch.Generator().manual_seed(1))
    y.sum().backward()
    assert p.grad is not None
    assert (p.grad != 0).any()


def test_st_bernoulli_extreme_probs():
    g = torch.Generator().manual_seed(0)
    y = straight_through_bernoulli(torch.tensor([0.0, 1.0]), 1.0, g)
    assert float(y[0]) == 0.0 and float(y[1]) == 1.0


# ---------------------------------------------------------------------------
# GCN
# ---------------------------------------------------------------------------


def test_gcn_shapes_and_depth():
    gcn = GCN(in_dim=7, hidden=16, out_dim=5, n_layers=2)
    assert len(gcn.lins) == 2
    a = normalize_adjacency(torch.zeros(4, 4))
    out = gcn(a, torch.randn(4, 7))
    assert out.shape == (4, 5)


def test_gcn_permutation_equivariance():
    torch.manual_seed(0)
    n = 10
    a = (torch.rand(n, n) < 0.3).double()
    a = ((a + a.T) > 0).double()
    a.fill_diagonal_(0)
    x = torch.randn(n, 6, dtype=torch.float64)
    gcn = GCN(6, 8, 4).double()
    perm = torch.randperm(n, generator=torch.Generator().manual_seed(3))
    out = gcn(normalize_adjacency(a), x)
    out_p = gcn(normalize_adjacency(a[perm][:, perm]), x[perm])
    assert torch.allclose(out_p, out[perm], atol=1e-10)


def test_encoder_represent_normalizes_internally():
    torch.manual_seed(1)
    a = torch.tensor([[0.0, 1.0], [1.0, 0.0]])
    enc = Encoder(in_dim=3, hidden=8)
    h = enc.represent(a, torch.randn(2, 3))
    h2 = enc(a, torch.randn(2, 3))
    assert h.shape == (2, 8) and h2.shape == (2, 8)


# ---------------------------------------------------------------------------
# augmentor
# ---------------------------------------------------------------------------


@pytest.fixture
def tg(karate_like):
    return TensorGraph(karate_like, torch.float32, dense_threshold=5000)


@pytest.fixture
def tg_sparse(karate_like):
    # force candidate mode by setting the dense threshold below n
    return TensorGraph(karate_like, torch.float32, dense_threshold=5)


def test_edge_probabilities_symmetric(tg):
    torch.manual_seed(0)
    aug = Augmentor(in_dim=tg.d, hidden=16)
    z = aug.encode(tg.adj_norm, tg.x)
    probs = aug.edge_probabilities(z)
    assert torch.allclose(probs, probs.T)
    assert float(probs.min()) >= 0.0 and float(probs.max()) <= 1.0


def test_augment_dense_view_is_valid(tg):
    torch.manual_seed(0)
    aug = Augmentor(in_dim=tg.d, hidden=16)
    view = aug.augment(tg, torch.Generator().manual_seed(0))
    ap = view.sampled_adjacency
    assert torch.equal(ap, ap.T)
    assert float(ap.diagonal().abs().sum()) == 0.0
    assert set(ap.detach().unique().tolist()) <= {0.0, 1.0}
    assert view.masked_features.shape == tg.x.shape


def test_augment_deterministic_given_generator(tg):
    torch.manual_seed(0)
    aug = Augmentor(in_dim=tg.d, hidden=16)
    v1 = aug.augment(tg, torch.Generator().manual_seed(9))
    v2 = aug.augment(tg, torch.Generator().manual_seed(9))
    assert torch.equal(v1.sampled_adjacency, v2.sampled_adjacency)
    assert torch.equal(v1.masked_features, v2.masked_features)


def test_augment_no_ep_identity(tg):
    torch.manual_seed(0)
    aug = Augmentor(in_dim=tg.d, hidden=16)
    view = aug.augment(tg, torch.Generator().manual_seed(0), ablate_ep=True)
    assert torch.equal(view.sampled_adjacency, tg.adjacency())
    # features still masked
    assert not torch.equal(view.masked_features, tg.x)


def test_augment_no_fm_identity(tg):
    torch.manual_seed(0)
    aug = Augmentor(in_dim=tg.d, hidden=16)
    view = aug.augment(tg, torch.Generator().manual_seed(0), ablate_fm=True)
    assert torch.equal(view.masked_features, tg.x)
    assert not torch.equal(view.sampled_adjacency, tg.adjacency())


def test_augment_candidate_mode_requires_pairs(tg_sparse):
    torch.manual_seed(0)
    aug = Augmentor(in_dim=tg_sparse.d, hidden=16)
    with pytest.raises(ValueError):
        aug.augment(tg_sparse, torch.Generator().manual_seed(0))


def test_augment_candidate_mode_sparse_view(tg_sparse):
    torch.manual_seed(0)
    rng = np.random.default_rng(0)
    pairs = tg_sparse.sample_candidate_pairs(rng)
    aug = Augmentor(in_dim=tg_sparse.d, hidden=16)
    view = aug.augment(tg_sparse, torch.Generator().manual_seed(0),
                       candidate_pairs=pairs)
    assert view.candidate_pairs is not None
    ap = view.sampled_adjacency
    assert ap.is_sparse
    dense = ap.to_dense()
    assert torch.allclose(dense, dense.T)
    assert float(dense.diagonal().abs().sum()) == 0.0
    assert view.edge_probs.shape[0] == pairs.shape[0]
    assert view.edge_targets.shape[0] == pairs.shape[0]


def test_mask_features_is_elementwise_product(tg):
    torch.manual_seed(0)
    aug = Augmentor(in_dim=tg.d, hidden=16)
    z = aug.encode(tg.adj_norm, tg.x)
    probs, masked = aug.mask_features(z, tg.x, torch.Generator().manual_seed(4))
    assert probs.shape == tg.x.shape
    # every entry is either dropped or passed through unchanged
    kept = masked.detach() == tg.x
    dropped = masked.detach() == 0.0
    assert bool((kept | dropped).all())
    assert bool(kept.any()) and bool(dropped.any())


# ---------------------------------------------------------------------------
# adversary / classifier
# ---------------------------------------------------------------------------


def test_adversary_outputs_distribution():
    torch.manual_seed(0)
    adv = Adversary(in_dim=8, n_groups=3, hidden=16)
    probs = adv.adversary_predict(torch.randn(5, 8))
    assert probs.shape == (5, 3)
    assert torch.allclose(probs.sum(dim=1), torch.ones(5), atol=1e-6)
    assert float(probs.min()) >= 0.0


def test_mlp_classifier_single_logit():
    torch.manual_seed(0)
    clf = MLPClassifier(in_dim=4, hidden=8)
    out = clf(torch.randn(6, 4))
    assert out.shape == (6,)


# ---------------------------------------------------------------------------
# TensorGraph
# ---------------------------------------------------------------------------


def test_tensorgraph_dense_and_sparse_agree(karate_like):
    dense = TensorGraph(karate_like, torch.float32, dense_threshold=5000)
    sparse = TensorGraph(karate_like, torch.float32, dense_threshold=5)
    assert dense.dense and not sparse.dense
    assert torch.allclose(sparse.adjacency().to_dense(), dense.adjacency())
    assert torch.allclose(sparse.adj_norm.to_dense(), dense.adj_norm,
                          atol=1e-6)


def test_tensorgraph_pair_values(karate_like):
    tg = TensorGraph(karate_like, torch.float32, dense_threshold=5000)
    pairs = torch.tensor([[0, 1], [4, 5], [0, 9]])
    vals = tg.pair_values(pairs)
    assert vals.tolist() == [1.0, 1.0, 0.0]


def test_tensorgraph_candidates_half_edges_half_not(karate_like):
    tg = TensorGraph(karate_like, torch.float32, dense_threshold=5)
    pairs = tg.sample_candidate_pairs(np.random.default_rng(0))
    targets = tg.pair_values(pairs)
    m = karate_like.n_edges
    assert pairs.shape == (2 * m, 2)
    assert float(targets.sum()) == m
    # all pairs distinct and canonical
    keys = pairs[:, 0] * tg.n + pairs[:, 1]
    assert len(set(keys.tolist())) == len(keys)
    assert (pairs[:, 0] < pairs[:, 1]).all()


def test_tensorgraph_masks_carried(karate_like):
    karate_like.train_mask = np.zeros(10, dtype=bool)
    karate_like.train_mask[:5] = True
    karate_like.val_mask = None
    karate_like.test_mask = None
    tg = TensorGraph(karate_like, torch.float32, 5000)
    assert tg.train_mask.sum() == 5
