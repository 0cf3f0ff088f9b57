"""Downstream evaluation: node classification and link prediction with
group-fairness metrics.

Representations are always frozen here; classifiers are small
one-hidden-layer heads retrained per seed, and reports carry mean ± std
over the classifier seeds.

Link-prediction fairness uses dyadic groups. Mixed mode (intra vs inter)
is computed on the edge split's own test pairs. Subgroup mode, when given
the graph adjacency, draws fresh negative pairs matched to the subgroup
composition of the test positives; without composition matching the
subgroup gap is dominated by how unevenly positives and negatives happen to
cover the subgroups — a refinement of the mixed partition that is
mathematically never smaller than the mixed gap. The matched protocol
measures per-subgroup score behavior instead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import torch
from scipy.stats import rankdata

from .data import EdgeSplit
from .models import MLPClassifier
from .utils import derive_seed


@dataclass(frozen=True)
class ClassifierConfig:
    hidden: int = 128
    lr: float = 1e-3
    weight_decay: float = 1e-5
    epochs: int = 300
    threshold: float = 0.5

    def to_dict(self) -> dict:
        return {"hidden": self.hidden, "lr": self.lr,
                "weight_decay": self.weight_decay, "epochs": self.epochs,
                "threshold": self.threshold}


@dataclass
class MetricsReport:
    """Task metrics in percent, mean ± std over classifier seeds.

    ``eo = max(tpr_gap, fpr_gap)`` holds within every individual seed; the
    reported numbers are means of the per-seed values.
    """

    mode: str
    acc: float
    dp: float
    eo: float
    tpr_gap: float
    fpr_gap: float
    acc_std: float = 0.0
    dp_std: float = 0.0
    eo_std: float = 0.0
    auc: float | None = None
    auc_std: float | None = None
    repeats: int = 1
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "mode", "acc", "acc_std", "auc", "auc_std", "dp", "dp_std",
            "eo", "eo_std", "tpr_gap", "fpr_gap", "repeats", "notes")}


# ---------------------------------------------------------------------------
# Metric primitives
# ---------------------------------------------------------------------------


def _rates(y_hat: np.ndarray, d: np.ndarray, groups) -> tuple[list[float], list]:
    rates, used = [], []
    for g in groups:
        sel = d == g
        if not sel.any():
            warnings.warn(f"group {g!r} empty; excluded from rate gap",
                          RuntimeWarning, stacklevel=3)
            continue
        rates.append(float(y_hat[sel].mean()))
        used.append(g)
    return rates, used


def delta_dp(y_hat, d, groups=None) -> float:
    """Selection-rate gap max_d P(Ŷ=1 | D=d) − min_d P(Ŷ=1 | D=d).

    Groups listed in ``groups`` but absent from ``d`` are excluded with a
    warning. For two groups this is the absolute rate difference.
    """
    y_hat = np.asarray(y_hat).astype(np.float64)
    d = np.asarray(d)
    if groups is None:
        groups = np.unique(d)
    rates, _ = _rates(y_hat, d, groups)
    if not rates:
        raise ValueError("no nonempty group for demographic parity")
    return max(rates) - min(rates)


def delta_eo(y, y_hat, d, groups=None) -> tuple[float, float, float]:
    """Equalized-odds gaps: (max(ΔTPR, ΔFPR), ΔTPR, ΔFPR).

    A group with no positives is excluded from the TPR gap only; one with
    no negatives from the FPR gap only. If every group is excluded from
    both gaps the quantity is undefined and raises.
    """
    y = np.asarray(y).astype(np.int64)
    y_hat = np.asarray(y_hat).astype(np.float64)
    d = np.asarray(d)
    if groups is None:
        groups = np.unique(d)
    tprs, fprs = [], []
    for g in groups:
        sel = d == g
        if not sel.any():
            warnings.warn(f"group {g!r} empty; excluded from EO",
                          RuntimeWarning, stacklevel=2)
            continue
        pos = sel & (y == 1)
        neg = sel & (y == 0)
        if pos.any():
            tprs.append(float(y_hat[pos].mean()))
        else:
            warnings.warn(f"group {g!r} has no positives; excluded from TPR gap",
                          RuntimeWarning, stacklevel=2)
        if neg.any():
            fprs.append(float(y_hat[neg].mean()))
        else:
            warnings.warn(f"group {g!r} has no negatives; excluded from FPR gap",
                          RuntimeWarning, stacklevel=2)
    if not tprs and not fprs:
        raise ValueError("EO undefined: every group lacks both positives and negatives")
    tpr_gap = max(tprs) - min(tprs) if tprs else 0.0
    fpr_gap = max(fprs) - min(fprs) if fprs else 0.0
    return max(tpr_gap, fpr_gap), tpr_gap, fpr_gap


def auc(scores, labels) -> float:
    """Probability a random positive outranks a random negative, ties ½."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(np.int64)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = rankdata(scores)  # average ranks handle ties as 1/2
    pos_rank_sum = ranks[labels == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def adversary_accuracy(s_hat, s) -> float:
    """Fraction of nodes whose most probable predicted group is correct."""
    s_hat = np.asarray(s_hat if not isinstance(s_hat, torch.Tensor)
                       else s_hat.detach().numpy())
    s = np.asarray(s)
    pred = s_hat.argmax(axis=1) if s_hat.ndim == 2 else (s_hat > 0.5).astype(np.int64)
    return float((pred == s).mean())


# ---------------------------------------------------------------------------
# Dyadic groups for link fairness
# ---------------------------------------------------------------------------


@dataclass
class DyadicGroups:
    mode: str
    ids: np.ndarray
    group_count: int
    pair_labels: list

    def group_of(self, index: int) -> int:
        return int(self.ids[index])


def dyadic_groups(edges, s, mode: str) -> DyadicGroups:
    """Assign each edge a dyadic group from its endpoints' sensitive values.

    mixed: 0 for intra-group edges (S_u = S_v), 1 for inter-group.
    subgroup: one id per unordered value pair {S_u, S_v} present in ``edges``.
    """
    edges = np.asarray(edges)
    s = np.asarray(s)
    su, sv = s[edges[:, 0]], s[edges[:, 1]]
    if mode == "mixed":
        ids = (su != sv).astype(np.int64)
        return DyadicGroups("mixed", ids, 2, ["intra", "inter"])
    if mode == "subgroup":
        lo, hi = np.minimum(su, sv), np.maximum(su, sv)
        pairs = sorted(set(zip(lo.tolist(), hi.tolist())))
        index = {p: i for i, p in enumerate(pairs)}
        ids = np.array([index[(a, b)] for a, b in zip(lo, hi)], dtype=np.int64)
        return DyadicGroups("subgroup", ids, len(pairs), pairs)
    raise ValueError(f"unknown dyadic mode {mode!r}")


def link_embed(h, edges) -> np.ndarray:
    """Per-edge Hadamard embeddings h_u ∘ h_v."""
    h = h.detach().numpy() if isinstance(h, torch.Tensor) else np.asarray(h)
    edges = np.asarray(edges)
    if edges.size and edges.max() >= h.shape[0]:
        raise IndexError("edge endpoint out of range")
    return h[edges[:, 0]] * h[edges[:, 1]]


# ---------------------------------------------------------------------------
# Classifier training
# ---------------------------------------------------------------------------


def _fit_head(x_train: np.ndarray, y_train: np.ndarray, cfg: ClassifierConfig,
              seed: int):
    """Train the downstream head; returns a probability predictor."""
    if len(np.unique(y_train)) < 2:
        raise ValueError("degenerate training labels: a single class present")
    torch.manual_seed(seed)
    model = MLPClassifier(x_train.shape[1], cfg.hidden).to(torch.float32)
    xt = torch.as_tensor(x_train, dtype=torch.float32)
    yt = torch.as_tensor(y_train, dtype=torch.float32)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr,
                           weight_decay=cfg.weight_decay)
    loss_fn = torch.nn.BCEWithLogitsLoss()
    for _ in range(cfg.epochs):
        opt.zero_grad()
        loss = loss_fn(model(xt), yt)
        loss.backward()
        opt.step()

    def predict(x: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            logits = model(torch.as_tensor(x, dtype=torch.float32))
        return torch.sigmoid(logits).numpy()

    return predict


def _summ(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return float(arr.mean()), std


# ---------------------------------------------------------------------------
# Node classification
# ---------------------------------------------------------------------------


def evaluate_node(h, y, s, masks, classifier_config: ClassifierConfig | None = None,
                  repeats: int = 5, seed: int = 0) -> MetricsReport:
    """Train classifiers on frozen embeddings; report test ACC/ΔDP/ΔEO.

    ``masks`` is the (train, val, test) boolean triple; groups D are the
    sensitive values. Metrics are percents, mean ± std over ``repeats``
    classifier seeds.
    """
    cfg = classifier_config or ClassifierConfig()
    h = h.detach().numpy() if isinstance(h, torch.Tensor) else np.asarray(h)
    y = np.asarray(y)
    s = np.asarray(s)
    train_mask, _, test_mask = masks
    accs, dps, eos, tprs, fprs = [], [], [], [], []
    notes: list[str] = []
    for r in range(repeats):
        predict = _fit_head(h[train_mask], y[train_mask], cfg,
                            derive_seed(seed, 100 + r))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            probs = predict(h[test_mask])
            y_hat = (probs > cfg.threshold).astype(np.int64)
            y_true = y[test_mask]
            accs.append(float((y_hat == y_true).mean()) * 100)
            dps.append(delta_dp(y_hat, s[test_mask]) * 100)
            eo, tpr_gap, fpr_gap = delta_eo(y_true, y_hat, s[test_mask])
            eos.append(eo * 100)
            tprs.append(tpr_gap * 100)
            fprs.append(fpr_gap * 100)
        notes.extend(str(w.message) for w in caught)
    acc, acc_std = _summ(accs)
    dp, dp_std = _summ(dps)
    eo, eo_std = _summ(eos)
    return MetricsReport(mode="node", acc=acc, acc_std=acc_std, dp=dp,
                         dp_std=dp_std, eo=eo, eo_std=eo_std,
                         tpr_gap=_summ(tprs)[0], fpr_gap=_summ(fprs)[0],
                         repeats=repeats, notes=sorted(set(notes)))


# ---------------------------------------------------------------------------
# Link prediction
# ---------------------------------------------------------------------------


def sample_subgroup_negatives(adjacency: sp.csr_matrix, s: np.ndarray,
                              positives: np.ndarray, seed: int,
                              per_positive: int = 1) -> np.ndarray:
    """Non-edges matched to the subgroup composition of ``positives``.

    For every unordered sensitive-value pair {a, b} present among the
    positives, draws ``per_positive`` distinct non-edges with those endpoint
    groups per positive. Oversampling (per_positive > 1) shrinks the binomial
    noise of per-subgroup selection rates, whose max-min spread is otherwise
    dominated by the smallest cells.
    """
    if per_positive < 1:
        raise ValueError(f"per_positive must be >= 1, got {per_positive}")
    rng = np.random.default_rng(seed)
    s = np.asarray(s)
    n = adjacency.shape[0]
    groups = dyadic_groups(positives, s, "subgroup")
    members = {v: np.flatnonzero(s == v) for v in np.unique(s)}
    out = []
    for gid, (a, b) in enumerate(groups.pair_labels):
        need = int((groups.ids == gid).sum()) * per_positive
        seen: set[int] = set()
        got = 0
        guard = 0
        while got < need:
            guard += 1
            if guard > 200:
                raise ValueError(
                    f"cannot find {need} non-edges for subgroup {(a, b)}")
            draw = 2 * (need - got) + 32
            u = rng.choice(members[a], size=draw)
            v = rng.choice(members[b], size=draw)
            lo, hi = np.minimum(u, v), np.maximum(u, v)
            keep = lo < hi
            lo, hi = lo[keep], hi[keep]
            if lo.size == 0:
                continue
            is_edge = np.asarray(adjacency[lo, hi]).ravel() > 0
            for uu, vv in zip(lo[~is_edge], hi[~is_edge]):
                key = int(uu) * n + int(vv)
                if key in seen:
                    continue
                seen.add(key)
                out.append((uu, vv))
                got += 1
                if got == need:
                    break
    return np.asarray(out, dtype=np.int64).reshape(-1, 2)


def evaluate_link(h, split: EdgeSplit, s, classifier_config: ClassifierConfig | None = None,
                  repeats: int = 5, adjacency: sp.csr_matrix | None = None,
                  seed: int = 0,
                  subgroup_neg_per_pos: int = 1) -> tuple[MetricsReport, MetricsReport]:
    """Link prediction on Hadamard embeddings; returns (mixed, subgroup) reports.

    ACC (threshold 0.5) and AUC come from the split's test positives and
    negatives. Mixed-mode fairness uses that same test set. Subgroup-mode
    fairness uses composition-matched negatives when ``adjacency`` is given
    (see module docstring); otherwise it falls back to the split negatives.
    """
    cfg = classifier_config or ClassifierConfig()
    h = h.detach().numpy() if isinstance(h, torch.Tensor) else np.asarray(h)
    s = np.asarray(s)
    x_train = link_embed(h, np.concatenate([split.train_pos, split.train_neg]))
    y_train = np.concatenate([np.ones(len(split.train_pos), dtype=np.int64),
                              np.zeros(len(split.train_neg), dtype=np.int64)])
    test_pairs = np.concatenate([split.test_pos, split.test_neg])
    y_test = np.concatenate([np.ones(len(split.test_pos), dtype=np.int64),
                             np.zeros(len(split.test_neg), dtype=np.int64)])
    x_test = link_embed(h, test_pairs)
    mixed = dyadic_groups(test_pairs, s, "mixed")

    if adjacency is not None:
        strat_neg = sample_subgroup_negatives(adjacency, s, split.test_pos,
                                              derive_seed(seed, 0x57A7),
                                              per_positive=subgroup_neg_per_pos)
        sub_pairs = np.concatenate([split.test_pos, strat_neg])
        sub_note = ("subgroup negatives matched to positive composition "
                    f"({subgroup_neg_per_pos} per positive)")
    else:
        sub_pairs = test_pairs
        sub_note = "subgroup metrics on split negatives (unmatched composition)"
    y_sub = np.concatenate([np.ones(len(split.test_pos), dtype=np.int64),
                            np.zeros(len(sub_pairs) - len(split.test_pos),
                                     dtype=np.int64)])
    x_sub = link_embed(h, sub_pairs)
    subgroup = dyadic_groups(sub_pairs, s, "subgroup")

    accs, aucs = [], []
    dpm, eom, tprm, fprm = [], [], [], []
    dps, eos_, tprs, fprs = [], [], [], []
    notes_m: list[str] = []
    notes_s: list[str] = [sub_note]
    for r in range(repeats):
        predict = _fit_head(x_train, y_train, cfg, derive_seed(seed, 200 + r))
        scores = predict(x_test)
        y_hat = (scores > cfg.threshold).astype(np.int64)
        accs.append(float((y_hat == y_test).mean()) * 100)
        aucs.append(auc(scores, y_test) * 100)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            dpm.append(delta_dp(y_hat, mixed.ids, groups=range(2)) * 100)
            eo, tg, fg = delta_eo(y_test, y_hat, mixed.ids, groups=range(2))
            eom.append(eo * 100)
            tprm.append(tg * 100)
            fprm.append(fg * 100)
        notes_m.extend(str(w.message) for w in caught)
        sub_hat = (predict(x_sub) > cfg.threshold).astype(np.int64)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            dps.append(delta_dp(sub_hat, subgroup.ids) * 100)
            eo, tg, fg = delta_eo(y_sub, sub_hat, subgroup.ids)
            eos_.append(eo * 100)
            tprs.append(tg * 100)
            fprs.append(fg * 100)
        notes_s.extend(str(w.message) for w in caught)

    acc, acc_std = _summ(accs)
    auc_m, auc_std = _summ(aucs)
    dp_m, dp_m_std = _summ(dpm)
    eo_m, eo_m_std = _summ(eom)
    mixed_report = MetricsReport(
        mode="link-mixed", acc=acc, acc_std=acc_std, auc=auc_m, auc_std=auc_std,
        dp=dp_m, dp_std=dp_m_std, eo=eo_m, eo_std=eo_m_std,
        tpr_gap=_summ(tprm)[0], fpr_gap=_summ(fprm)[0],
        repeats=repeats, notes=sorted(set(notes_m)))
    dp_s, dp_s_std = _summ(dps)
    eo_s, eo_s_std = _summ(eos_)
    subgroup_report = MetricsReport(
        mode="link-subgroup", acc=acc, acc_std=acc_std, auc=auc_m, auc_std=auc_std,
        dp=dp_s, dp_std=dp_s_std, eo=eo_s, eo_std=eo_s_std,
        tpr_gap=_summ(tprs)[0], fpr_gap=_summ(fprs)[0],
        repeats=repeats, notes=sorted(set(notes_s)))
    return mixed_report, subgroup_report
